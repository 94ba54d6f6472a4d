//! Bundle models: sums of line-bundle blocks with constant-curvature
//! background connections, plus a strictly block-upper-triangular extension
//! form β defining the holomorphic structure `∂̄_E = ∂̄_bg + β`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use std::sync::OnceLock;

use crate::field::{MatrixField, Twist, TwoForm};
use crate::lattice::{integrate, TorusLattice};
use crate::linalg::{self, MAX_RANK};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub rank: usize,
    /// Integer charge on each complex factor.
    pub charges: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct BundleModel {
    lat: TorusLattice,
    blocks: Vec<Block>,
    basis_charges: Vec<Vec<i64>>,
    block_of: Vec<usize>,
    twist: Twist,
    /// Transition phases `exp(2πi q y_j)`, `j = 0..=N_y`, per block and factor.
    twist_tables: Vec<Vec<Vec<C64>>>,
    /// `(0,1)` components `β_b̄`, one per complex factor.
    beta: Vec<MatrixField>,
    reference: OnceLock<TwoForm>,
}

/// Build the split background connection for the given blocks.
pub fn build_background(lat: &TorusLattice, blocks: &[Block]) -> Result<BundleModel> {
    let n = lat.n();
    if blocks.is_empty() {
        return Err(Error::Model("no blocks".into()));
    }
    let mut basis_charges = Vec::new();
    let mut block_of = Vec::new();
    for (k, b) in blocks.iter().enumerate() {
        if b.rank == 0 {
            return Err(Error::Model(format!("block {k} has rank 0")));
        }
        if b.charges.len() != n {
            return Err(Error::Model(format!(
                "block {k} lists {} charges, torus has {n} factors",
                b.charges.len()
            )));
        }
        for _ in 0..b.rank {
            basis_charges.push(b.charges.clone());
            block_of.push(k);
        }
    }
    if basis_charges.len() > MAX_RANK {
        return Err(Error::Model(format!("rank {} exceeds {MAX_RANK}", basis_charges.len())));
    }
    let twist = Twist::endomorphism(&basis_charges);
    let twist_tables = blocks
        .iter()
        .map(|b| {
            (0..n)
                .map(|a| {
                    let ny = lat.dims()[2 * a + 1];
                    (0..=ny)
                        .map(|j| C64::cis(2.0 * PI * b.charges[a] as f64 * j as f64 / ny as f64))
                        .collect()
                })
                .collect()
        })
        .collect();
    let r = basis_charges.len();
    let beta = vec![MatrixField::zeros(lat, r, r, &twist); n];
    Ok(BundleModel {
        lat: lat.clone(),
        blocks: blocks.to_vec(),
        basis_charges,
        block_of,
        twist,
        twist_tables,
        beta,
        reference: OnceLock::new(),
    })
}

impl BundleModel {
    pub fn lattice(&self) -> &TorusLattice {
        &self.lat
    }

    pub fn rank(&self) -> usize {
        self.basis_charges.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn twist(&self) -> &Twist {
        &self.twist
    }

    pub fn beta(&self) -> &[MatrixField] {
        &self.beta
    }

    pub fn has_beta(&self) -> bool {
        self.beta.iter().any(|b| b.max_abs() > 0.0)
    }

    /// Install an extension form. Entries outside the strict upper block
    /// triangle are rejected.
    pub fn with_beta(mut self, beta: Vec<MatrixField>) -> Result<Self> {
        if beta.len() != self.lat.n() {
            return Err(Error::Model(format!("β needs {} components", self.lat.n())));
        }
        let r = self.rank();
        for b in &beta {
            b.check_lattice(&self.lat)?;
            if b.rows() != r || b.twist() != &self.twist {
                return Err(Error::Model("β has the wrong rank or twist".into()));
            }
            for p in 0..self.lat.npts() {
                let m = b.at(p);
                for i in 0..r {
                    for j in 0..r {
                        if self.block_of[i] >= self.block_of[j] && m[i * r + j] != linalg::ZERO {
                            return Err(Error::Model("β must be strictly block-upper-triangular".into()));
                        }
                    }
                }
            }
        }
        self.beta = beta;
        self.reference = OnceLock::new();
        Ok(self)
    }

    /// Zero every entry of an endomorphism field outside the strict upper
    /// block triangle.
    pub fn mask_upper(&self, f: &mut MatrixField) {
        let r = self.rank();
        for p in 0..self.lat.npts() {
            let m = f.at_mut(p);
            for i in 0..r {
                for j in 0..r {
                    if self.block_of[i] >= self.block_of[j] {
                        m[i * r + j] = linalg::ZERO;
                    }
                }
            }
        }
    }

    /// Degree `∫ c_1(L_k) ∧ ω` of one line bundle in block `k`.
    pub fn block_degree(&self, k: usize) -> f64 {
        let lat = &self.lat;
        let b = &self.blocks[k];
        (0..lat.n())
            .map(|a| {
                let others: f64 = (0..lat.n()).filter(|&c| c != a).map(|c| lat.kappa(c)).product();
                b.charges[a] as f64 * others
            })
            .sum()
    }

    /// Slope of each basis vector's line bundle.
    pub fn basis_slopes(&self) -> Vec<f64> {
        (0..self.rank()).map(|i| self.block_degree(self.block_of[i])).collect()
    }

    pub fn degree(&self) -> f64 {
        self.basis_slopes().iter().sum()
    }

    /// Slope `μ(E) = deg / rank`.
    pub fn slope(&self) -> f64 {
        self.degree() / self.rank() as f64
    }

    /// HN type read off the block structure, valid when block slopes are
    /// nonincreasing along the extension order.
    pub fn block_type(&self) -> Option<Vec<f64>> {
        let s = self.basis_slopes();
        if s.windows(2).all(|w| w[0] >= w[1] - 1e-12) {
            Some(s)
        } else {
            None
        }
    }

    /// Constant background curvature coefficient `F_bg` on `dz_a ∧ dz̄_a`
    /// for basis vector `i`: `π q`.
    pub fn background_curvature(&self, i: usize, a: usize) -> f64 {
        PI * self.basis_charges[i][a] as f64
    }

    /// Curvature of the Chern connection of `(∂̄_bg + β, H₀ = I)`, computed
    /// once per model.
    pub fn reference_curvature(&self) -> &TwoForm {
        self.reference.get_or_init(|| reference_curvature(self))
    }

    pub fn twist_tables(&self) -> &[Vec<Vec<C64>>] {
        &self.twist_tables
    }

    pub fn twist_tables_mut(&mut self) -> &mut [Vec<Vec<C64>>] {
        &mut self.twist_tables
    }
}

/// `F_{ab̄} = δ_ab F_bg + ∂_a β_b̄ + ∂̄_b β_ā† + β_b̄ β_ā† - β_ā† β_b̄`, and on
/// surfaces `F_{1̄2̄} = ∂̄_1 β_2̄ - ∂̄_2 β_1̄ + [β_1̄, β_2̄]`.
fn reference_curvature(model: &BundleModel) -> TwoForm {
    let lat = &model.lat;
    let n = lat.n();
    let r = model.rank();
    let mut out = TwoForm::zeros(lat, r, &model.twist);
    for a in 0..n {
        let f = &mut out.f11[a * n + a];
        for p in 0..lat.npts() {
            let m = f.at_mut(p);
            for i in 0..r {
                m[i * r + i] = C64::new(model.background_curvature(i, a), 0.0);
            }
        }
    }
    if !model.has_beta() {
        return out;
    }
    let beta_adj: Vec<MatrixField> = model.beta.iter().map(|b| b.adjoint()).collect();
    for a in 0..n {
        for b in 0..n {
            let f = &mut out.f11[a * n + b];
            f.axpy(linalg::ONE, &model.beta[b].del(lat, a));
            f.axpy(linalg::ONE, &beta_adj[a].delbar(lat, b));
            f.axpy(linalg::ONE, &model.beta[b].mul(&beta_adj[a]));
            f.axpy(C64::new(-1.0, 0.0), &beta_adj[a].mul(&model.beta[b]));
        }
    }
    if n == 2 {
        let mut f02 = dbar_bg_two(&model.beta, lat);
        f02.axpy(linalg::ONE, &model.beta[0].commutator(&model.beta[1]));
        out.f02 = Some(f02);
    }
    out
}

/// Deviation of the stored transition phases from a genuine cocycle: the
/// wrap around `y` must close (`g(y+1) = g(y)`), and the flux through every
/// plaquette column must be the same.
pub fn cocycle_check(model: &BundleModel) -> f64 {
    let mut worst: f64 = 0.0;
    for tables in model.twist_tables() {
        for t in tables {
            let ny = t.len() - 1;
            worst = worst.max((t[ny] - t[0]).norm());
            let step = t[1] * t[0].conj();
            for j in 0..ny {
                worst = worst.max((t[j + 1] * t[j].conj() - step).norm());
            }
        }
    }
    worst
}

/// `∂̄_bg β` for surfaces: the coefficient of `dz̄_1 ∧ dz̄_2`.
pub fn dbar_bg_two(beta: &[MatrixField], lat: &TorusLattice) -> MatrixField {
    let mut out = beta[1].delbar(lat, 0);
    out.axpy(C64::new(-1.0, 0.0), &beta[0].delbar(lat, 1));
    out
}

/// L² norm of a `dz̄_1 ∧ dz̄_2` coefficient in the Kähler metric.
pub fn two_form_02_norm(f: &MatrixField, lat: &TorusLattice) -> f64 {
    let k = 4.0 / (lat.kappa(0) * lat.kappa(1));
    let pts: Vec<f64> = (0..lat.npts()).map(|p| k * linalg::frob2(f.at(p))).collect();
    integrate(&pts, lat).unwrap().sqrt()
}

/// L² norm of a `(0,1)` or `(1,0)` form given by its complex components.
pub fn one_form_norm(comps: &[MatrixField], lat: &TorusLattice) -> f64 {
    let mut pts = vec![0.0; lat.npts()];
    for (a, c) in comps.iter().enumerate() {
        let k = 2.0 / lat.kappa(a);
        for (p, v) in pts.iter_mut().enumerate() {
            *v += k * linalg::frob2(c.at(p));
        }
    }
    integrate(&pts, lat).unwrap().sqrt()
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub beta: Vec<MatrixField>,
    /// `‖∂̄_bg β‖_{L²}` after projection.
    pub residual: f64,
    pub iterations: usize,
    /// False when nothing survives the projection.
    pub nonzero: bool,
}

/// Project a trial extension form onto `ker ∂̄_bg`.
///
/// On surfaces this solves `∂̄∂̄* u = ∂̄β₀` by conjugate gradients and returns
/// `β = β₀ - ∂̄* u`, using `∂̄_a* = -∂_a` for the discrete operators. On
/// curves every `(0,1)` form is closed and β₀ is returned as is.
pub fn project_holomorphic(beta0: &[MatrixField], model: &BundleModel, tol: f64) -> Result<Projection> {
    let lat = model.lattice();
    if beta0.len() != lat.n() {
        return Err(Error::Model(format!("β₀ needs {} components", lat.n())));
    }
    let mut beta: Vec<MatrixField> = beta0.to_vec();
    for b in beta.iter_mut() {
        b.check_lattice(lat)?;
        model.mask_upper(b);
    }
    let mut iterations = 0;
    if lat.n() == 2 {
        // CG on A u = rhs with A u = -(∂̄_1 ∂_1 + ∂̄_2 ∂_2) u.
        let apply = |u: &MatrixField| {
            let mut out = u.del(lat, 0).delbar(lat, 0);
            out.axpy(linalg::ONE, &u.del(lat, 1).delbar(lat, 1));
            out.scaled(C64::new(-1.0, 0.0))
        };
        let dot = |a: &MatrixField, b: &MatrixField| -> f64 {
            a.data().iter().zip(b.data()).map(|(x, y)| (x.conj() * y).re).sum()
        };
        let rhs = dbar_bg_two(&beta, lat);
        let mut u = rhs.zeros_like();
        let mut res = rhs.clone();
        let mut dir = res.clone();
        let mut rr = dot(&res, &res);
        let stop = {
            // Stop on the solved residual, measured as ‖∂̄β‖ directly.
            let w = (lat.weight() * 4.0 / (lat.kappa(0) * lat.kappa(1))).sqrt();
            (tol / w * 1e-2).powi(2)
        };
        while rr > stop && iterations < 5000 {
            let ad = apply(&dir);
            let alpha = rr / dot(&dir, &ad);
            u.axpy(C64::new(alpha, 0.0), &dir);
            res.axpy(C64::new(-alpha, 0.0), &ad);
            let rr_new = dot(&res, &res);
            let b = rr_new / rr;
            let mut nd = res.clone();
            nd.axpy(C64::new(b, 0.0), &dir);
            dir = nd;
            rr = rr_new;
            iterations += 1;
        }
        // β₁̄ -= ∂_2 u, β₂̄ += ∂_1 u
        beta[0].axpy(C64::new(-1.0, 0.0), &u.del(lat, 1));
        beta[1].axpy(linalg::ONE, &u.del(lat, 0));
        for b in beta.iter_mut() {
            model.mask_upper(b);
        }
    }
    let residual = if lat.n() == 2 { two_form_02_norm(&dbar_bg_two(&beta, lat), lat) } else { 0.0 };
    let size = one_form_norm(&beta, lat);
    Ok(Projection { nonzero: size > 1e-12, beta, residual, iterations })
}

/// Which part of the connection to differentiate with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Holomorphic,
    AntiHolomorphic,
    Full,
}

/// Covariant derivative of an endomorphism (square) or section (one column)
/// field with the Chern connection of `(∂̄_bg + β, h)`.
///
/// Returns complex components: `(1,0)` parts first (one per factor), then
/// `(0,1)` parts, restricted to the requested `part`.
pub fn covariant_deriv(
    f: &MatrixField,
    model: &BundleModel,
    h: Option<&MatrixField>,
    part: Part,
) -> Result<Vec<MatrixField>> {
    let lat = model.lattice();
    f.check_lattice(lat)?;
    let endo = f.cols() == f.rows() && f.cols() == model.rank() && f.twist() == model.twist();
    let act = |op: &MatrixField, x: &MatrixField| if endo { op.commutator(x) } else { op.mul(x) };
    let mut out = Vec::new();
    if part != Part::AntiHolomorphic {
        let h = h.ok_or_else(|| Error::Argument("the (1,0) part needs a metric".into()))?;
        let y = chern_potential(model, h)?;
        for a in 0..lat.n() {
            let bd = model.beta[a].adjoint();
            let mut d = f.del(lat, a);
            d.axpy(C64::new(-1.0, 0.0), &act(&bd, f));
            d.axpy(linalg::ONE, &act(&y[a], f));
            out.push(d);
        }
    }
    if part != Part::Holomorphic {
        for a in 0..lat.n() {
            let mut d = f.delbar(lat, a);
            d.axpy(linalg::ONE, &act(&model.beta[a], f));
            out.push(d);
        }
    }
    Ok(out)
}

/// `Y_a = h⁻¹ (D'_{H₀} h)_a`, the correction of the `(1,0)` part of the Chern
/// connection when the metric changes from `H₀ = I` to `h`.
pub fn chern_potential(model: &BundleModel, h: &MatrixField) -> Result<Vec<MatrixField>> {
    let lat = model.lattice();
    let r = model.rank();
    let hinv = pointwise_inverse(h)?;
    let mut out = Vec::with_capacity(lat.n());
    for a in 0..lat.n() {
        let bd = model.beta[a].adjoint();
        let mut d = h.del(lat, a);
        d.axpy(C64::new(-1.0, 0.0), &bd.commutator(h));
        let y = hinv.mul(&d);
        debug_assert_eq!(y.rows(), r);
        out.push(y);
    }
    Ok(out)
}

pub fn pointwise_inverse(h: &MatrixField) -> Result<MatrixField> {
    let r = h.rows();
    let mut out = h.zeros_like();
    for p in 0..h.npts() {
        let mut inv = linalg::buf();
        linalg::inverse(h.at(p), &mut inv, r).ok_or(Error::NotPositive(p))?;
        out.at_mut(p).copy_from_slice(&inv[..r * r]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_torus;
    use crate::sample::smooth_random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn blocks(ch: &[&[i64]]) -> Vec<Block> {
        ch.iter().map(|c| Block { rank: 1, charges: c.to_vec() }).collect()
    }

    #[test]
    fn background_degrees() {
        let lat = make_torus(1, 16).unwrap();
        let m = build_background(&lat, &blocks(&[&[1]])).unwrap();
        assert!((m.slope() - 1.0).abs() < 1e-12);
        let lat2 = make_torus(2, 8).unwrap();
        let m2 = build_background(&lat2, &blocks(&[&[1, 0], &[-1, 0]])).unwrap();
        assert_eq!(m2.basis_slopes(), vec![1.0, -1.0]);
        assert!(m2.degree().abs() < 1e-15);
        let bad = build_background(&lat2, &blocks(&[&[1]]));
        assert!(bad.is_err());
    }

    #[test]
    fn cocycle_detects_corruption() {
        let lat = make_torus(2, 8).unwrap();
        let triv = build_background(&lat, &blocks(&[&[0, 0]])).unwrap();
        assert_eq!(cocycle_check(&triv), 0.0);
        let mut m = build_background(&lat, &blocks(&[&[1, 0], &[0, 0]])).unwrap();
        assert!(cocycle_check(&m) < 1e-12);
        m.twist_tables_mut()[0][0][3] *= C64::cis(1.3);
        assert!(cocycle_check(&m) > 0.1);
    }

    #[test]
    fn identity_is_parallel() {
        let lat = make_torus(2, 8).unwrap();
        let m = build_background(&lat, &blocks(&[&[1, 0], &[-1, 0]])).unwrap();
        let id = MatrixField::identity(&lat, 2, m.twist());
        let d = covariant_deriv(&id, &m, Some(&id), Part::Full).unwrap();
        assert!(d.iter().all(|c| c.max_abs() == 0.0));
        assert!(covariant_deriv(&id, &m, None, Part::Full).is_err());
    }

    #[test]
    fn scalar_covariant_is_plain_derivative() {
        let lat = make_torus(1, 8).unwrap();
        let m = build_background(&lat, &blocks(&[&[0]])).unwrap();
        let tw = Twist::trivial(1, 1);
        let f = MatrixField::from_fn(&lat, 1, 1, &tw, |p, v| v[0] = C64::new((2.0 * PI * lat.coord(p, 0)).sin(), 0.0));
        let id = MatrixField::identity(&lat, 1, &tw);
        let d = covariant_deriv(&f, &m, Some(&id), Part::AntiHolomorphic).unwrap();
        assert_eq!(d[0], f.delbar(&lat, 0));
    }

    #[test]
    fn leibniz_defect_converges_at_stencil_order() {
        let defect = |grid: usize| {
            let lat = make_torus(1, grid).unwrap();
            let m = build_background(&lat, &blocks(&[&[1], &[-1]])).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let f = smooth_random(&lat, m.twist(), &mut rng, 0.3);
            let g = smooth_random(&lat, m.twist(), &mut rng, 0.3);
            let h = MatrixField::identity(&lat, 2, m.twist());
            let dfg = covariant_deriv(&f.mul(&g), &m, Some(&h), Part::Full).unwrap();
            let df = covariant_deriv(&f, &m, Some(&h), Part::Full).unwrap();
            let dg = covariant_deriv(&g, &m, Some(&h), Part::Full).unwrap();
            dfg.iter()
                .zip(df.iter().zip(&dg))
                .map(|(a, (b, c))| a.sub(&b.mul(&g)).sub(&f.mul(c)).max_abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (defect(16), defect(32));
        assert!((e1 / e2).log2() >= 3.5, "{e1:e} {e2:e}");
    }

    #[test]
    fn projection_examples() {
        // Degree-0 Hom block: constant β is exactly closed.
        let lat = make_torus(2, 8).unwrap();
        let m = build_background(&lat, &blocks(&[&[1, 0], &[1, 0]])).unwrap();
        let c = MatrixField::from_fn(&lat, 2, 2, m.twist(), |_, v| v[1] = C64::new(0.3, -0.2));
        let pr = project_holomorphic(&[c.clone(), c.clone()], &m, 1e-8).unwrap();
        assert_eq!(pr.residual, 0.0);
        assert_eq!(pr.beta[0], c);
        // Zero in, zero out.
        let z = c.zeros_like();
        let pr0 = project_holomorphic(&[z.clone(), z.clone()], &m, 1e-8).unwrap();
        assert!(!pr0.nonzero && pr0.residual == 0.0);
        // Curves: nothing to project.
        let lat1 = make_torus(1, 16).unwrap();
        let m1 = build_background(&lat1, &blocks(&[&[1], &[0]])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut b = smooth_random(&lat1, m1.twist(), &mut rng, 1.0);
        m1.mask_upper(&mut b);
        let s = one_form_norm(&[b.clone()], &lat1);
        let b = b.scaled(C64::new(1.0 / s, 0.0));
        let pr1 = project_holomorphic(&[b.clone()], &m1, 1e-8).unwrap();
        assert!(pr1.residual < 1e-8 && (one_form_norm(&pr1.beta, &lat1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_reaches_tolerance_on_twisted_hom() {
        let lat = TorusLattice::new(2, &[16, 16, 8, 8]).unwrap();
        let m = build_background(&lat, &blocks(&[&[1, 0], &[-1, 0]])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let b0: Vec<MatrixField> = (0..2).map(|_| smooth_random(&lat, m.twist(), &mut rng, 1.0)).collect();
        let pr = project_holomorphic(&b0, &m, 1e-8).unwrap();
        assert!(pr.nonzero);
        assert!(pr.residual < 1e-8, "residual {:e} after {} its", pr.residual, pr.iterations);
        let mm = m.with_beta(pr.beta).unwrap();
        assert!(mm.has_beta());
    }
}
