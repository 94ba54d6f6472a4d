//! Randomized batteries for the slope order, the φ_α functionals and the
//! pointwise inequalities, each checked against a brute-force oracle.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{MatrixField, Twist};
use crate::functionals::{phi_alpha, sigma_distance, trace_projection_bound, SlopeVector};
use crate::hn::{self, default_alpha_grid};
use crate::linalg;
use crate::C64;

pub const DEFAULT_CASES: usize = 10_000;

/// The order under test; swapped out by the mutation control.
pub type Order = fn(&SlopeVector, &SlopeVector) -> Result<bool>;

#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub counterexample: Option<String>,
}

impl Battery {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failures: 0, counterexample: None }
    }

    fn record(&mut self, ok: bool, input: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(input());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropsReport {
    pub seed: u64,
    pub batteries: Vec<Battery>,
}

impl PropsReport {
    pub fn all_passed(&self) -> bool {
        self.batteries.iter().all(Battery::passed)
    }
}

impl fmt::Display for PropsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.batteries {
            let tag = if b.passed() { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<22} seed={} cases={} failures={}", b.name, self.seed, b.cases, b.failures)?;
            if let Some(c) = &b.counterexample {
                writeln!(f, "     counterexample: {c}")?;
            }
        }
        Ok(())
    }
}

/// Random nonincreasing type with entries in multiples of 1/2.
fn random_type(rng: &mut ChaCha8Rng, r: usize) -> SlopeVector {
    SlopeVector::sorted((0..r).map(|_| rng.gen_range(-6..=6) as f64 / 2.0).collect())
}

/// A vector majorized by `lam`: a few random averaging (T-)transforms.
fn majorized(rng: &mut ChaCha8Rng, lam: &SlopeVector) -> SlopeVector {
    let mut v = lam.values().to_vec();
    let r = v.len();
    for _ in 0..rng.gen_range(0..4) {
        let (i, j) = (rng.gen_range(0..r), rng.gen_range(0..r));
        let t: f64 = rng.gen_range(0.0..=1.0);
        let (a, b) = (v[i], v[j]);
        v[i] = t * a + (1.0 - t) * b;
        v[j] = (1.0 - t) * a + t * b;
    }
    SlopeVector::sorted(v)
}

/// Ky Fan oracle: the top-k sums are maxima over all k-subsets.
fn brute_leq(mu: &[f64], lam: &[f64]) -> bool {
    let r = mu.len();
    let best = |v: &[f64], k: u32| {
        (0u32..1 << r)
            .filter(|s| s.count_ones() == k)
            .map(|s| (0..r).filter(|i| s >> i & 1 == 1).map(|i| v[i]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    (1..=r as u32).all(|k| best(mu, k) <= best(lam, k) + hn::PARTIAL_SUM_TOL)
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize) -> Vec<C64> {
    (0..r * r).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn random_hermitian(rng: &mut ChaCha8Rng, r: usize) -> Vec<C64> {
    let mut a = random_matrix(rng, r);
    linalg::hermitize(&mut a, r);
    a
}

fn random_positive(rng: &mut ChaCha8Rng, r: usize) -> Vec<C64> {
    let a = random_matrix(rng, r);
    let mut p = vec![linalg::ZERO; r * r];
    linalg::matmul_adj(&a, &a, &mut p, r);
    for i in 0..r {
        p[i * r + i] += 0.1;
    }
    p
}

/// Orthogonal projection onto the span of `k` random vectors.
fn random_projection(rng: &mut ChaCha8Rng, r: usize, k: usize) -> Vec<C64> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    while basis.len() < k {
        let mut v: Vec<C64> = (0..r).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        for b in &basis {
            let c: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            v.iter_mut().zip(b).for_each(|(y, x)| *y -= c * x);
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    let mut p = vec![linalg::ZERO; r * r];
    for b in &basis {
        for i in 0..r {
            for j in 0..r {
                p[i * r + j] += b[i] * b[j].conj();
            }
        }
    }
    p
}

fn point_field(m: Vec<C64>, r: usize) -> MatrixField {
    MatrixField::from_raw(vec![1], r, r, Twist::trivial(r, 1), m).expect("one point field")
}

/// Runs every battery with `cases` random inputs each.
pub fn run_property_suite(seed: u64, cases: usize) -> PropsReport {
    run_with_order(seed, cases, hn::leq)
}

/// Same suite with the order replaced, for mutation testing.
pub fn run_with_order(seed: u64, cases: usize, leq: Order) -> PropsReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut b = Battery::new("leq_vs_kyfan_oracle");
    for _ in 0..cases {
        let r = rng.gen_range(1..=6);
        let lam = random_type(&mut rng, r);
        let mu = if rng.gen_bool(0.5) { majorized(&mut rng, &lam) } else { random_type(&mut rng, r) };
        // Only equal totals are comparable.
        let shift = (lam.values().iter().sum::<f64>() - mu.values().iter().sum::<f64>()) / r as f64;
        let mu = SlopeVector::sorted(mu.values().iter().map(|v| v + shift).collect());
        let ok = leq(&mu, &lam).map(|v| v == brute_leq(mu.values(), lam.values())).unwrap_or(false);
        b.record(ok, || format!("mu={:?} lam={:?}", mu.values(), lam.values()));
    }
    out.push(b);

    let mut b = Battery::new("leq_order_axioms");
    for _ in 0..cases {
        let r = rng.gen_range(1..=6);
        let a = random_type(&mut rng, r);
        let bb = majorized(&mut rng, &a);
        let c = majorized(&mut rng, &bb);
        let refl = leq(&a, &a).unwrap_or(false);
        let trans = leq(&c, &a).unwrap_or(false);
        let both = leq(&a, &bb).unwrap_or(false) && leq(&bb, &a).unwrap_or(false);
        let anti = !both || a.values().iter().zip(bb.values()).all(|(x, y)| (x - y).abs() < 1e-9);
        b.record(refl && trans && anti, || format!("a={:?} b={:?} c={:?}", a.values(), bb.values(), c.values()));
    }
    out.push(b);

    let mut b = Battery::new("shatz_equivalence");
    for _ in 0..cases {
        let r = rng.gen_range(1..=6);
        let mut cuts: Vec<usize> = (1..r).filter(|_| rng.gen_bool(0.4)).collect();
        cuts.push(r);
        let mut vals = Vec::with_capacity(r);
        let mut level = 4.0;
        let mut start = 0;
        for &end in &cuts {
            level -= rng.gen_range(1..=4) as f64 / 2.0;
            vals.extend(std::iter::repeat(level).take(end - start));
            start = end;
        }
        let lam = random_type(&mut rng, r);
        let shift = (lam.values().iter().sum::<f64>() - vals.iter().sum::<f64>()) / r as f64;
        let mu = SlopeVector::new(vals.iter().map(|v| v + shift).collect()).unwrap();
        let ok = match (hn::shatz_sufficient(&mu, &cuts, &lam), leq(&mu, &lam)) {
            (Ok(x), Ok(y)) => x == y,
            _ => false,
        };
        b.record(ok, || format!("mu={:?} cuts={cuts:?} lam={:?}", mu.values(), lam.values()));
    }
    out.push(b);

    let mut b = Battery::new("phi_alpha_monotone");
    let grid = default_alpha_grid();
    for _ in 0..cases {
        let r = rng.gen_range(1..=6);
        let lam = random_type(&mut rng, r);
        let mu = majorized(&mut rng, &lam);
        let ok = leq(&mu, &lam).unwrap_or(false) && hn::phi_monotone_check(&mu, &lam, &grid).unwrap_or(false);
        b.record(ok, || format!("mu={:?} lam={:?}", mu.values(), lam.values()));
    }
    out.push(b);

    let mut b = Battery::new("distinguish_types");
    for _ in 0..cases {
        let r = rng.gen_range(1..=5);
        let s = SlopeVector::sorted((0..r).map(|_| rng.gen_range(0..=6) as f64 / 2.0).collect());
        let t = if rng.gen_bool(0.3) {
            s.clone()
        } else {
            let mut v = s.values().to_vec();
            v.shuffle(&mut rng);
            let i = rng.gen_range(0..r);
            v[i] += rng.gen_range(1..=3) as f64 / 2.0;
            SlopeVector::sorted(v)
        };
        let same = s == t;
        let ok = hn::distinguish_types(&s, &t, &grid).map(|eq| eq == same).unwrap_or(false);
        b.record(ok, || format!("s={:?} t={:?}", s.values(), t.values()));
    }
    out.push(b);

    let mut b = Battery::new("trace_projection");
    for _ in 0..cases {
        let r = rng.gen_range(1..=5);
        let k = rng.gen_range(0..=r);
        let l = random_hermitian(&mut rng, r);
        let pi = random_projection(&mut rng, r, k);
        let (lhs, rhs, ok) = trace_projection_bound(&l, &pi, r);
        b.record(ok, || format!("r={r} k={k} tr(L pi)={lhs} bound={rhs} L={l:?}"));
    }
    out.push(b);

    let mut b = Battery::new("norm_equivalence");
    for _ in 0..cases {
        let r = rng.gen_range(1..=5);
        let mut a = random_hermitian(&mut rng, r);
        if rng.gen_bool(0.5) {
            a.iter_mut().for_each(|z| *z *= linalg::I);
        }
        let alpha = rng.gen_range(1.0..4.0);
        let fro = linalg::frob2(&a).sqrt();
        let sch = phi_alpha(&a, r, alpha).map(|v| v.powf(1.0 / alpha)).unwrap_or(f64::NAN);
        // Schatten norms: |a|_α vs |a|_2 with the constant R^{|1/α - 1/2|}.
        let c = (r as f64).powf((1.0 / alpha - 0.5).abs());
        let tol = 1e-10 * (1.0 + fro);
        let ok = if alpha <= 2.0 {
            fro <= sch + tol && sch <= c * fro + tol
        } else {
            sch <= fro + tol && fro <= c * sch + tol
        };
        b.record(ok, || format!("alpha={alpha} |a|_F={fro} phi^(1/a)={sch} a={a:?}"));
    }
    out.push(b);

    let mut b = Battery::new("sigma_symmetry");
    for _ in 0..cases {
        let r = rng.gen_range(1..=4);
        let h = point_field(random_positive(&mut rng, r), r);
        let k = point_field(random_positive(&mut rng, r), r);
        let ok = match (sigma_distance(&h, &k), sigma_distance(&k, &h), sigma_distance(&h, &h)) {
            (Ok((a, _)), Ok((bb, _)), Ok((z, _))) => {
                (a[0] - bb[0]).abs() <= 1e-9 * (1.0 + a[0].abs()) && a[0] >= -1e-9 && z[0].abs() < 1e-9
            }
            _ => false,
        };
        b.record(ok, || format!("h={:?} k={:?}", h.data(), k.data()));
    }
    out.push(b);

    PropsReport { seed, batteries: out }
}
