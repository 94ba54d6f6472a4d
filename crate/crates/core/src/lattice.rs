//! Discretized flat Kähler tori.
//!
//! The torus is the unit cube `[0,1)^{2n}` with real coordinates
//! `(x_1, y_1, .., x_n, y_n)` and complex coordinates `z_a = x_a + i y_a`.
//! The Kähler form is `ω = Σ_a κ_a dx_a ∧ dy_a`, so `Λω = n` and the
//! volume `Π κ_a` is fixed to `2π`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{MatrixField, TwoForm};
use crate::linalg;
use crate::C64;

/// Fourth-order central difference weights for offsets `+1` and `+2`.
pub const STENCIL: [(isize, f64); 4] = [(1, 8.0 / 12.0), (-1, -8.0 / 12.0), (2, -1.0 / 12.0), (-2, 1.0 / 12.0)];

/// Largest modulus of the symbol of the fourth-order first-derivative
/// stencil, in units of `1/h`.
pub const STENCIL_SYMBOL_MAX: f64 = 1.3722;

pub const VOLUME: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq)]
pub struct TorusLattice {
    n: usize,
    dims: Vec<usize>,
    strides: Vec<usize>,
    kappa: Vec<f64>,
    npts: usize,
}

/// Uniform grid with `grid` points in every real direction.
pub fn make_torus(n: usize, grid: usize) -> Result<TorusLattice> {
    TorusLattice::new(n, &vec![grid; 2 * n])
}

impl TorusLattice {
    /// Grid with per-direction point counts, ordered `(x_1, y_1, x_2, y_2)`.
    pub fn new(n: usize, dims: &[usize]) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::Lattice(format!("complex dimension must be 1 or 2, got {n}")));
        }
        if dims.len() != 2 * n {
            return Err(Error::Lattice(format!("expected {} grid sizes, got {}", 2 * n, dims.len())));
        }
        for &d in dims {
            if d < 8 || d % 2 != 0 {
                return Err(Error::Lattice(format!(
                    "grid size {d} unusable: stencils need an even count >= 8"
                )));
            }
        }
        let mut strides = vec![1; 2 * n];
        for d in (0..2 * n - 1).rev() {
            strides[d] = strides[d + 1] * dims[d + 1];
        }
        // Factor 1 carries the 2π; every other factor has unit area so that
        // a unit charge on factor 1 has unit slope.
        let kappa = if n == 1 { vec![2.0 * PI] } else { vec![2.0 * PI, 1.0] };
        Ok(Self { n, dims: dims.to_vec(), strides, kappa, npts: dims.iter().product() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn npts(&self) -> usize {
        self.npts
    }

    /// Scale of the Kähler form on factor `a`.
    pub fn kappa(&self, a: usize) -> f64 {
        self.kappa[a]
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappa
    }

    pub fn volume(&self) -> f64 {
        self.kappa.iter().product()
    }

    pub fn spacing(&self, dir: usize) -> f64 {
        1.0 / self.dims[dir] as f64
    }

    #[inline]
    pub fn stride(&self, dir: usize) -> usize {
        self.strides[dir]
    }

    #[inline]
    pub fn index_along(&self, p: usize, dir: usize) -> usize {
        (p / self.strides[dir]) % self.dims[dir]
    }

    #[inline]
    pub fn coord(&self, p: usize, dir: usize) -> f64 {
        self.index_along(p, dir) as f64 / self.dims[dir] as f64
    }

    /// Neighbor of `p` displaced by `offset` along `dir`, together with the
    /// signed number of times the displacement wrapped the boundary.
    #[inline]
    pub fn neighbor(&self, p: usize, dir: usize, offset: isize) -> (usize, i64) {
        let n = self.dims[dir] as isize;
        let i = self.index_along(p, dir) as isize;
        let j = i + offset;
        let wraps = j.div_euclid(n);
        let jj = j.rem_euclid(n);
        let q = (p as isize + (jj - i) * self.strides[dir] as isize) as usize;
        (q, wraps as i64)
    }

    /// Quadrature weight of a single grid point.
    pub fn weight(&self) -> f64 {
        self.volume() / self.npts as f64
    }

    /// Spectral radius bound of the discrete metric Laplacian built from
    /// two first-derivative stencils.
    pub fn laplacian_bound(&self) -> f64 {
        (0..2 * self.n)
            .map(|d| (STENCIL_SYMBOL_MAX * self.dims[d] as f64).powi(2) / self.kappa[d / 2])
            .sum()
    }

    pub fn check_scalar(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.npts {
            return Err(Error::Shape(format!("scalar field has {} samples, lattice has {}", f.len(), self.npts)));
        }
        Ok(())
    }
}

/// Riemann sum on the periodic grid, normalized so that `∫ 1 = 2π`.
pub fn integrate(f: &[f64], lat: &TorusLattice) -> Result<f64> {
    lat.check_scalar(f)?;
    Ok(lat.weight() * f.iter().sum::<f64>())
}

/// Contraction with the Kähler form. Returns `Λ G` and the L² size of any
/// (0,2) component, which is contracted as zero.
pub fn lambda_contract(g: &TwoForm, lat: &TorusLattice) -> (MatrixField, f64) {
    let n = lat.n();
    let mut out = g.f11[0].zeros_like();
    for a in 0..n {
        let c = C64::new(0.0, -2.0 / lat.kappa(a));
        out.axpy(c, &g.f11[a * n + a]);
    }
    let f02 = g.f02.as_ref().map_or(0.0, |f| {
        let k = 4.0 / (lat.kappa(0) * lat.kappa(1));
        let pts: Vec<f64> = (0..lat.npts()).map(|p| k * linalg::frob2(f.at(p))).collect();
        integrate(&pts, lat).unwrap().sqrt()
    });
    (out, f02)
}

/// `L^p` norm of a matrix field using the pointwise norm `(Σ|λ_i|²)^{1/2}`
/// (the Frobenius norm, equal for normal matrices). `p = ∞` is the grid sup.
pub fn lp_norm(f: &MatrixField, p: f64, lat: &TorusLattice) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Argument(format!("L^p norm needs p >= 1, got {p}")));
    }
    f.check_lattice(lat)?;
    let pts = (0..lat.npts()).map(|q| linalg::frob2(f.at(q)).sqrt());
    if p.is_infinite() {
        return Ok(pts.fold(0.0, f64::max));
    }
    let vals: Vec<f64> = pts.map(|v| v.powf(p)).collect();
    Ok(integrate(&vals, lat)?.powf(1.0 / p))
}

/// Pointwise scalar field from a closure over grid points.
pub fn scalar_field(lat: &TorusLattice, f: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..lat.npts()).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Twist;

    #[test]
    fn volume_normalization() {
        let l1 = make_torus(1, 16).unwrap();
        assert!((l1.kappa(0) - 2.0 * PI).abs() < 1e-15);
        assert!((integrate(&vec![1.0; l1.npts()], &l1).unwrap() - 2.0 * PI).abs() < 1e-12);
        let l2 = make_torus(2, 12).unwrap();
        assert!((l2.volume() - 2.0 * PI).abs() < 1e-15);
        assert!((integrate(&vec![1.0; l2.npts()], &l2).unwrap() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_torus(3, 16).is_err());
        assert!(make_torus(1, 15).is_err());
        assert!(make_torus(1, 6).is_err());
        assert!(TorusLattice::new(2, &[16, 16, 8]).is_err());
    }

    #[test]
    fn quadrature_of_trig_polynomials() {
        let lat = make_torus(1, 16).unwrap();
        let c = scalar_field(&lat, |p| (2.0 * PI * lat.coord(p, 0)).cos());
        assert!(integrate(&c, &lat).unwrap().abs() < 1e-12);
        let c2 = scalar_field(&lat, |p| (2.0 * PI * lat.coord(p, 0)).cos().powi(2));
        assert!((integrate(&c2, &lat).unwrap() - PI).abs() < 1e-12);
        assert!(integrate(&[1.0; 3], &lat).is_err());
    }

    #[test]
    fn lambda_of_kahler_form() {
        for n in [1usize, 2] {
            let lat = make_torus(n, 8).unwrap();
            let tw = Twist::trivial(2, n);
            let mut g = TwoForm::zeros(&lat, 2, &tw);
            for a in 0..n {
                let c = C64::new(0.0, lat.kappa(a) / 2.0);
                g.f11[a * n + a] = MatrixField::identity(&lat, 2, &tw).scaled(c);
            }
            let (lam, f02) = lambda_contract(&g, &lat);
            assert_eq!(f02, 0.0);
            for p in 0..lat.npts() {
                let m = lam.at(p);
                assert!((m[0] - C64::new(n as f64, 0.0)).norm() < 1e-14);
                assert!(m[1].norm() < 1e-14 && (m[3] - C64::new(n as f64, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn hermitian_einstein_contraction() {
        // G = -i (mu / n) ω ⊗ I gives iΛG = mu I.
        let lat = make_torus(2, 8).unwrap();
        let tw = Twist::trivial(1, 2);
        let mu = 1.7;
        let mut g = TwoForm::zeros(&lat, 1, &tw);
        for a in 0..2 {
            let omega_aa = C64::new(0.0, lat.kappa(a) / 2.0);
            g.f11[a * 2 + a] = MatrixField::identity(&lat, 1, &tw).scaled(C64::new(0.0, -mu / 2.0) * omega_aa);
        }
        let (lam, _) = lambda_contract(&g, &lat);
        let ilam = lam.at(0)[0] * C64::new(0.0, 1.0);
        assert!((ilam - C64::new(mu, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn lp_norm_examples() {
        let lat = make_torus(1, 8).unwrap();
        let tw = Twist::trivial(2, 1);
        let f = MatrixField::from_fn(&lat, 2, 2, &tw, |_, m| {
            m[0] = C64::new(0.0, 1.0);
            m[3] = C64::new(0.0, -1.0);
        });
        assert!((lp_norm(&f, 2.0, &lat).unwrap() - (4.0 * PI).sqrt()).abs() < 1e-12);
        let g = MatrixField::from_fn(&lat, 2, 2, &tw, |_, m| {
            m[0] = C64::new(0.0, 3.0);
            m[3] = C64::new(0.0, -4.0);
        });
        assert!((lp_norm(&g, f64::INFINITY, &lat).unwrap() - 5.0).abs() < 1e-14);
        assert_eq!(lp_norm(&f.zeros_like(), 3.0, &lat).unwrap(), 0.0);
        assert!(lp_norm(&f, 0.5, &lat).is_err());
    }
}
