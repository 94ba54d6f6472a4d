//! Scalar functionals of the curvature and endomorphism-level constructions
//! built from slope data.

use std::f64::consts::PI;

use crate::bundle::BundleModel;
use crate::curvature::{CurvatureBundle, Frame};
use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::lattice::{integrate, TorusLattice};
use crate::linalg;
use crate::C64;

/// Tolerance for treating two slopes as equal.
pub const SLOPE_TOL: f64 = 1e-9;

/// A nonincreasing tuple of slopes with its runs of equal values.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeVector {
    values: Vec<f64>,
    runs: Vec<usize>,
}

impl SlopeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.windows(2).any(|w| w[1] > w[0] + SLOPE_TOL) {
            return Err(Error::Argument(format!("slopes must be nonincreasing: {values:?}")));
        }
        let mut runs: Vec<usize> = Vec::new();
        for (i, v) in values.iter().enumerate() {
            if i > 0 && (values[i - 1] - v).abs() <= SLOPE_TOL {
                *runs.last_mut().unwrap() += 1;
            } else {
                runs.push(1);
            }
        }
        Ok(Self { values, runs })
    }

    /// Sorts into nonincreasing order first.
    pub fn sorted(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        Self::new(values).unwrap()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Lengths of the maximal runs of equal slopes.
    pub fn runs(&self) -> &[usize] {
        &self.runs
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 1.0) {
        return Err(Error::Argument(format!("φ_α needs α >= 1, got {alpha}")));
    }
    Ok(())
}

/// Eigenvalue moduli of a hermitian or skew-hermitian matrix.
fn abs_spectrum(a: &[C64], r: usize) -> Vec<f64> {
    let mut m = a[..r * r].to_vec();
    let skew = (0..r).all(|i| (0..r).all(|j| (m[i * r + j] + m[j * r + i].conj()).norm() <= 1e-12 * (1.0 + m[i * r + j].norm())));
    let herm = (0..r).all(|i| (0..r).all(|j| (m[i * r + j] - m[j * r + i].conj()).norm() <= 1e-12 * (1.0 + m[i * r + j].norm())));
    if skew && !herm {
        for v in m.iter_mut() {
            *v *= linalg::I;
        }
    }
    linalg::hermitize(&mut m, r);
    linalg::eigvalsh(&m, r).into_iter().map(f64::abs).collect()
}

/// `φ_α(a) = Σ_j |λ_j|^α` for a hermitian or skew-hermitian matrix.
pub fn phi_alpha(a: &[C64], r: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(abs_spectrum(a, r).iter().map(|l| l.powf(alpha)).sum())
}

/// `∫ φ_α(a)` over the torus.
pub fn phi_alpha_field(a: &MatrixField, lat: &TorusLattice, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    a.check_lattice(lat)?;
    let r = a.rows();
    let pts: Vec<f64> = (0..lat.npts()).map(|p| phi_alpha(a.at(p), r, alpha).unwrap()).collect();
    integrate(&pts, lat)
}

pub fn ym(f: &CurvatureBundle) -> f64 {
    f.ym()
}

pub fn hym(f: &CurvatureBundle) -> f64 {
    f.hym()
}

/// `∫ Σ_j |λ_j + N|^α` with `λ_j` the eigenvalues of `iΛF`.
pub fn hym_alpha_n(f: &CurvatureBundle, alpha: f64, n_shift: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let lat = f.lattice();
    let pts: Vec<f64> = (0..lat.npts())
        .map(|p| f.eigenvalues_at(p).iter().map(|l| (l + n_shift).abs().powf(alpha)).sum())
        .collect();
    integrate(&pts, lat)
}

/// Same integral from precomputed pointwise spectra.
pub fn hym_alpha_n_spectrum(spectra: &[Vec<f64>], lat: &TorusLattice, alpha: f64, n_shift: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let pow = |x: f64| match alpha {
        1.0 => x,
        2.0 => x * x,
        3.0 => x * x * x,
        _ => x.powf(alpha),
    };
    let pts: Vec<f64> = spectra.iter().map(|s| s.iter().map(|l| pow((l + n_shift).abs())).sum()).collect();
    integrate(&pts, lat)
}

/// `2π Σ_i |μ_i + N|^α`, the value of `HYM_{α,N}` at a critical point of
/// type `μ⃗`.
pub fn hym_of_type(mu: &SlopeVector, alpha: f64, n_shift: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(2.0 * PI * mu.values().iter().map(|m| (m + n_shift).abs().powf(alpha)).sum::<f64>())
}

/// Pointwise `π² = π` and `π = π^{*h}` (self-adjoint for `h`).
fn check_projection(pi: &MatrixField, frame: &Frame, tol: f64) -> Result<()> {
    let r = pi.rows();
    for p in 0..pi.npts() {
        let u = frame.unitary_at(pi.at(p), p);
        let mut sq = linalg::buf();
        linalg::matmul(&u, &u, &mut sq, r);
        for i in 0..r {
            for j in 0..r {
                let e = u[i * r + j];
                if (sq[i * r + j] - e).norm() > tol || (e - u[j * r + i].conj()).norm() > tol {
                    return Err(Error::NotProjection(format!("not a hermitian projection at point {p}")));
                }
            }
        }
    }
    Ok(())
}

/// `(1/2π) ∫ (tr(iΛF π) - |D''π|²)`, with `D''π = ∂̄π + [β, π]` and norms
/// taken in the metric `h`.
pub fn degree_of_projection(pi: &MatrixField, model: &BundleModel, h: &MatrixField, f: &CurvatureBundle) -> Result<f64> {
    let lat = model.lattice();
    pi.check_lattice(lat)?;
    let r = model.rank();
    let frame = Frame::from_metric(h)?;
    check_projection(pi, &frame, 1e-8)?;
    let dpi: Vec<MatrixField> = (0..lat.n())
        .map(|b| {
            let mut d = pi.delbar(lat, b);
            if model.has_beta() {
                d.axpy(linalg::ONE, &model.beta()[b].commutator(pi));
            }
            d
        })
        .collect();
    let pts: Vec<f64> = (0..lat.npts())
        .map(|p| {
            let lam = f.lambda_f.at(p);
            let t = (linalg::trace_prod(lam, pi.at(p), r) * linalg::I).re;
            let d2: f64 = (0..lat.n()).map(|b| 2.0 / lat.kappa(b) * frame.norm2_at(dpi[b].at(p), p)).sum();
            t - d2
        })
        .collect();
    Ok(integrate(&pts, lat)? / (2.0 * PI))
}

/// Nested hermitian projections `π_1 ⊂ .. ⊂ π_ℓ = I` with the slope of each
/// graded piece.
#[derive(Debug, Clone)]
pub struct HNProjectionData {
    pub projections: Vec<MatrixField>,
    pub mus: Vec<f64>,
}

impl HNProjectionData {
    /// Constant coordinate projections onto the leading basis vectors,
    /// grouped by `ranks`. In the unitary frame of a Cholesky factor these
    /// are exactly the orthogonal projections onto the coordinate flag.
    pub fn coordinate_flag(lat: &TorusLattice, ranks: &[usize], mus: &[f64], twist: &crate::field::Twist) -> Result<Self> {
        if ranks.len() != mus.len() {
            return Err(Error::Argument("one slope per graded piece".into()));
        }
        let r: usize = ranks.iter().sum();
        let mut projections = Vec::with_capacity(ranks.len());
        let mut top = 0;
        for &k in ranks {
            top += k;
            projections.push(MatrixField::from_fn(lat, r, r, twist, |_, m| {
                for i in 0..top {
                    m[i * r + i] = linalg::ONE;
                }
            }));
        }
        Ok(Self { projections, mus: mus.to_vec() })
    }
}

/// `Ψ = Σ_i μ_i (π_i - π_{i-1})`.
pub fn hn_projection(data: &HNProjectionData) -> Result<MatrixField> {
    let first = data.projections.first().ok_or_else(|| Error::Argument("no projections".into()))?;
    if data.projections.len() != data.mus.len() {
        return Err(Error::Argument("one slope per projection".into()));
    }
    let r = first.rows();
    let tol = 1e-10;
    for (i, pi) in data.projections.iter().enumerate() {
        for p in 0..pi.npts() {
            let m = pi.at(p);
            let mut sq = linalg::buf();
            linalg::matmul(m, m, &mut sq, r);
            let bad = (0..r * r).any(|e| (sq[e] - m[e]).norm() > tol || (m[e] - m[(e % r) * r + e / r].conj()).norm() > tol);
            if bad {
                return Err(Error::NotProjection(format!("not a hermitian projection at point {p}")));
            }
            if i > 0 {
                let prev = data.projections[i - 1].at(p);
                let mut pp = linalg::buf();
                linalg::matmul(prev, m, &mut pp, r);
                if (0..r * r).any(|e| (pp[e] - prev[e]).norm() > tol) {
                    return Err(Error::Argument("projections are not nested".into()));
                }
            }
        }
    }
    let last = data.projections.last().unwrap();
    if (0..last.npts()).any(|p| (0..r).any(|i| (last.at(p)[i * r + i] - linalg::ONE).norm() > tol)) {
        return Err(Error::Argument("the last projection must be the identity".into()));
    }
    let mut psi = first.scaled(C64::new(data.mus[0], 0.0));
    for i in 1..data.projections.len() {
        let piece = data.projections[i].sub(&data.projections[i - 1]);
        psi.axpy(C64::new(data.mus[i], 0.0), &piece);
    }
    Ok(psi)
}

/// `‖iΛF - Ψ‖_{L^p}` with `Ψ` given in the unitary frame of `F`.
pub fn approx_critical_deviation(f: &CurvatureBundle, psi: &MatrixField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Argument(format!("L^p norm needs p >= 1, got {p}")));
    }
    let lat = f.lattice();
    psi.check_lattice(lat)?;
    if psi.rows() != f.rank() {
        return Err(Error::Shape("Ψ has the wrong rank".into()));
    }
    let r = f.rank();
    let pts: Vec<f64> = (0..lat.npts())
        .map(|q| {
            let x = f.i_lambda_at(q);
            let d: Vec<C64> = (0..r * r).map(|e| x[e] - psi.at(q)[e]).collect();
            linalg::frob2(&d).sqrt()
        })
        .collect();
    if p.is_infinite() {
        return Ok(pts.into_iter().fold(0.0, f64::max));
    }
    let pw: Vec<f64> = pts.iter().map(|v| v.powf(p)).collect();
    Ok(integrate(&pw, lat)?.powf(1.0 / p))
}

/// Pointwise `σ(H, K) = tr H⁻¹K + tr K⁻¹H - 2R` and its grid sup.
pub fn sigma_distance(h: &MatrixField, k: &MatrixField) -> Result<(Vec<f64>, f64)> {
    h.check_same(k)?;
    let r = h.rows();
    let mut field = Vec::with_capacity(h.npts());
    for p in 0..h.npts() {
        let (mut hi, mut ki) = (linalg::buf(), linalg::buf());
        if linalg::cholesky(h.at(p), &mut hi, r).is_none() || linalg::cholesky(k.at(p), &mut ki, r).is_none() {
            return Err(Error::NotPositive(p));
        }
        linalg::inverse(h.at(p), &mut hi, r).ok_or(Error::NotPositive(p))?;
        linalg::inverse(k.at(p), &mut ki, r).ok_or(Error::NotPositive(p))?;
        let s = linalg::trace_prod(&hi, k.at(p), r).re + linalg::trace_prod(&ki, h.at(p), r).re - 2.0 * r as f64;
        field.push(s);
    }
    let sup = field.iter().copied().fold(0.0, f64::max);
    Ok((field, sup))
}

/// `tr(Lπ)` against the sum of the top `rank(π)` eigenvalues of `L`.
pub fn trace_projection_bound(l: &[C64], pi: &[C64], r: usize) -> (f64, f64, bool) {
    let lhs = linalg::trace_prod(l, pi, r).re;
    let k = linalg::trace(pi, r).re.round().max(0.0) as usize;
    let rhs: f64 = linalg::eigvalsh(l, r).iter().take(k).sum();
    (lhs, rhs, lhs <= rhs + 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{build_background, project_holomorphic, one_form_norm, Block};
    use crate::curvature::{chern_curvature, chern_numbers};
    use crate::field::{Twist, TwoForm};
    use crate::lattice::make_torus;
    use crate::sample::{random_metric, smooth_random_in};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn blocks(ch: &[&[i64]]) -> Vec<Block> {
        ch.iter().map(|c| Block { rank: 1, charges: c.to_vec() }).collect()
    }

    fn random_herm(rng: &mut ChaCha8Rng, r: usize) -> Vec<C64> {
        let mut a: Vec<C64> = (0..r * r).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        linalg::hermitize(&mut a, r);
        a
    }

    #[test]
    fn phi_examples() {
        let z = linalg::ZERO;
        assert!((phi_alpha(&[c(0.0, 1.0), z, z, c(0.0, -1.0)], 2, 2.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((phi_alpha(&[c(0.0, 3.0), z, z, c(0.0, -4.0)], 2, 1.0).unwrap() - 7.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = random_herm(&mut rng, 3);
            assert!((phi_alpha(&a, 3, 2.0).unwrap() - linalg::frob2(&a)).abs() < 1e-12);
        }
        assert!(phi_alpha(&[linalg::ONE], 1, 0.5).is_err());
    }

    #[test]
    fn functional_values() {
        let lat = make_torus(2, 8).unwrap();
        let tw = Twist::trivial(1, 2);
        let mut g = TwoForm::zeros(&lat, 1, &tw);
        for a in 0..2 {
            g.f11[a * 2 + a] = MatrixField::identity(&lat, 1, &tw).scaled(c(lat.kappa(a) / 4.0, 0.0));
        }
        let f = CurvatureBundle::from_two_form(g, None, &lat).unwrap();
        assert!((ym(&f) - PI).abs() < 1e-12 && (hym(&f) - 2.0 * PI).abs() < 1e-12);
        assert!((hym_alpha_n(&f, 2.0, 0.0).unwrap() - hym(&f)).abs() < 1e-12);

        let zero = CurvatureBundle::from_two_form(TwoForm::zeros(&lat, 3, &Twist::trivial(3, 2)), None, &lat).unwrap();
        for (al, n) in [(1.0, 2.0), (2.5, -1.5), (3.0, 10.0)] {
            let v: f64 = hym_alpha_n(&zero, al, n).unwrap();
            let n_abs: f64 = f64::abs(n);
            assert!((v - 2.0 * PI * 3.0 * n_abs.powf(al)).abs() < 1e-9 * v);
        }

        let m = build_background(&lat, &blocks(&[&[1, 0], &[-1, 0]])).unwrap();
        let fb = chern_curvature(&m, &MatrixField::identity(&lat, 2, m.twist())).unwrap();
        assert!((hym_alpha_n(&fb, 1.0, 0.0).unwrap() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn type_values() {
        let t = |v: Vec<f64>| SlopeVector::new(v).unwrap();
        assert!((hym_of_type(&t(vec![1.0, 0.0]), 2.0, 0.0).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((hym_of_type(&t(vec![1.0, -1.0]), 2.0, 0.0).unwrap() - 4.0 * PI).abs() < 1e-14);
        assert!((hym_of_type(&t(vec![1.0, -1.0]), 1.0, 1.0).unwrap() - 4.0 * PI).abs() < 1e-14);
        assert!(SlopeVector::new(vec![0.0, 1.0]).is_err());
        assert_eq!(t(vec![2.0, 1.0, 1.0, -1.0]).runs(), &[1, 2, 1]);
    }

    fn split_model(beta_amp: f64) -> (BundleModel, f64) {
        let lat = TorusLattice::new(2, &[16, 16, 8, 8]).unwrap();
        let m = build_background(&lat, &blocks(&[&[1, 0], &[-1, 0]])).unwrap();
        if beta_amp == 0.0 {
            return (m, 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b0: Vec<MatrixField> = (0..2).map(|_| smooth_random_in(&lat, m.twist(), &mut rng, 1.0, Some(1))).collect();
        let proj = project_holomorphic(&b0, &m, 1e-10).unwrap();
        let norm = one_form_norm(&proj.beta, &lat);
        let beta: Vec<MatrixField> = proj.beta.iter().map(|b| b.scaled(c(beta_amp / norm, 0.0))).collect();
        let size = one_form_norm(&beta, &lat);
        (m.with_beta(beta).unwrap(), size)
    }

    #[test]
    fn degree_via_projection() {
        let (m, _) = split_model(0.0);
        let lat = m.lattice().clone();
        let h = MatrixField::identity(&lat, 2, m.twist());
        let f = chern_curvature(&m, &h).unwrap();
        let id = MatrixField::identity(&lat, 2, m.twist());
        let total = degree_of_projection(&id, &m, &h, &f).unwrap();
        assert!((total - chern_numbers(&f).0).abs() < 1e-8);
        let top = HNProjectionData::coordinate_flag(&lat, &[1, 1], &[1.0, -1.0], m.twist()).unwrap();
        let pi = &top.projections[0];
        assert!((degree_of_projection(pi, &m, &h, &f).unwrap() - 1.0).abs() < 1e-8);

        let (mb, size) = split_model(0.7);
        // Curvature of the extension itself: the subbundle degree is topological.
        let fe = chern_curvature(&mb, &h).unwrap();
        assert!((degree_of_projection(pi, &mb, &h, &fe).unwrap() - 1.0).abs() < 1e-8);
        // Holding the split curvature fixed isolates the second fundamental form.
        let v = degree_of_projection(pi, &mb, &h, &f).unwrap();
        assert!((v - (1.0 - size * size / (2.0 * PI))).abs() < 1e-8, "{v}");

        let not_proj = id.scaled(c(0.5, 0.0));
        assert!(matches!(degree_of_projection(&not_proj, &m, &h, &f), Err(Error::NotProjection(_))));
    }

    #[test]
    fn projection_examples() {
        let lat = make_torus(1, 8).unwrap();
        let tw = Twist::trivial(2, 1);
        let one = HNProjectionData { projections: vec![MatrixField::identity(&lat, 2, &tw)], mus: vec![0.5] };
        let psi = hn_projection(&one).unwrap();
        assert!(psi.sub(&MatrixField::identity(&lat, 2, &tw).scaled(c(0.5, 0.0))).max_abs() < 1e-15);

        let split = HNProjectionData::coordinate_flag(&lat, &[1, 1], &[1.0, -1.0], &tw).unwrap();
        let psi = hn_projection(&split).unwrap();
        assert_eq!(psi.at(3), &[linalg::ONE, linalg::ZERO, linalg::ZERO, c(-1.0, 0.0)]);

        // Rotated frames: Ψ conjugates, spectrum stays {1, -1}.
        let (cs, sn) = (0.6, 0.8);
        let u = [c(cs, 0.0), c(-sn, 0.0), c(sn, 0.0), c(cs, 0.0)];
        let rot = |x: &MatrixField| {
            MatrixField::from_fn(&lat, 2, 2, &tw, |p, m| {
                let mut t = linalg::buf();
                linalg::matmul(&u, x.at(p), &mut t, 2);
                let mut o = linalg::buf();
                linalg::matmul_adj(&t, &u, &mut o, 2);
                m.copy_from_slice(&o[..4]);
            })
        };
        let rotated = HNProjectionData { projections: split.projections.iter().map(rot).collect(), mus: split.mus.clone() };
        let psi_r = hn_projection(&rotated).unwrap();
        assert!(psi_r.sub(&rot(&psi)).max_abs() < 1e-14);
        let ev = linalg::eigvalsh(psi_r.at(0), 2);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] + 1.0).abs() < 1e-14);

        let bad = HNProjectionData { projections: split.projections.iter().rev().cloned().collect(), mus: vec![1.0, -1.0] };
        assert!(hn_projection(&bad).is_err());
    }

    #[test]
    fn deviation_examples() {
        let lat = make_torus(2, 8).unwrap();
        let m = build_background(&lat, &blocks(&[&[1, 0], &[-1, 0]])).unwrap();
        let h = MatrixField::identity(&lat, 2, m.twist());
        let f = chern_curvature(&m, &h).unwrap();
        let flag = HNProjectionData::coordinate_flag(&lat, &[1, 1], &[1.0, -1.0], m.twist()).unwrap();
        let psi = hn_projection(&flag).unwrap();
        assert!(approx_critical_deviation(&f, &psi, 2.0).unwrap() < 1e-8);
        let eps = 0.01;
        let shifted = psi.sub(&MatrixField::identity(&lat, 2, m.twist()).scaled(c(eps, 0.0)));
        let d = approx_critical_deviation(&f, &shifted, 2.0).unwrap();
        assert!((d - eps * (2.0 * PI * 2.0).sqrt()).abs() < 1e-10);
        let swapped = HNProjectionData::coordinate_flag(&lat, &[1, 1], &[-1.0, 1.0], m.twist()).unwrap();
        let d = approx_critical_deviation(&f, &hn_projection(&swapped).unwrap(), 2.0).unwrap();
        assert!(d >= 2.0 * (2.0f64).sqrt() * (2.0 * PI).sqrt() - 1e-9);
        assert!(approx_critical_deviation(&f, &psi, 0.5).is_err());
    }

    #[test]
    fn sigma_examples() {
        let lat = make_torus(1, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tw = Twist::trivial(2, 1);
        let h = random_metric(&lat, &tw, &mut rng, 0.5, None);
        let k = random_metric(&lat, &tw, &mut rng, 0.5, None);
        assert!(sigma_distance(&h, &h).unwrap().1.abs() < 1e-12);
        let (_, s2) = sigma_distance(&h, &h.scaled(c(2.0, 0.0))).unwrap();
        assert!((s2 - 1.0).abs() < 1e-12);
        let (a, _) = sigma_distance(&h, &k).unwrap();
        let (b, _) = sigma_distance(&k, &h).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12 && *x >= -1e-12));
        assert!(sigma_distance(&h, &h.scaled(c(-1.0, 0.0))).is_err());
    }

    #[test]
    fn trace_bound_examples() {
        let z = linalg::ZERO;
        let (l, r, ok) = trace_projection_bound(&[c(2.0, 0.0), z, z, c(1.0, 0.0)], &[z, z, z, linalg::ONE], 2);
        assert_eq!((l, r, ok), (1.0, 2.0, true));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_herm(&mut rng, 4);
        let (vals, vecs) = linalg::eigh(&a, 4);
        let pi: Vec<C64> = (0..16).map(|e| vecs[(e / 4) * 4] * vecs[(e % 4) * 4].conj()).collect();
        let (l, r, ok) = trace_projection_bound(&a, &pi, 4);
        assert!(ok && (l - r).abs() < 1e-12 && (r - vals[0]).abs() < 1e-12);
    }
}
