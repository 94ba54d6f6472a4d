//! Harder-Narasimhan types: the partial order, checkpoint reduction,
//! φ_α comparisons, and type extraction from equilibrated spectra.

use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::functionals::SlopeVector;
use crate::linalg;

/// Slack on each partial sum.
pub const PARTIAL_SUM_TOL: f64 = 1e-9;
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-3;

fn partial_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        })
        .collect()
}

fn check_comparable(mu: &SlopeVector, lam: &SlopeVector) -> Result<()> {
    if mu.rank() != lam.rank() {
        return Err(Error::Argument(format!("ranks differ: {} vs {}", mu.rank(), lam.rank())));
    }
    let (a, b): (f64, f64) = (mu.values().iter().sum(), lam.values().iter().sum());
    if (a - b).abs() > PARTIAL_SUM_TOL {
        return Err(Error::Argument(format!("types have different totals {a} and {b}")));
    }
    Ok(())
}

/// `μ⃗ ≤ λ⃗` iff every partial sum of `μ⃗` is at most that of `λ⃗`.
pub fn leq(mu: &SlopeVector, lam: &SlopeVector) -> Result<bool> {
    check_comparable(mu, lam)?;
    let (a, b) = (partial_sums(mu.values()), partial_sums(lam.values()));
    Ok(a.iter().zip(&b).all(|(x, y)| *x <= *y + PARTIAL_SUM_TOL))
}

/// Same comparison restricted to the ends of the blocks of `partition`
/// (cumulative ranks `R_1 < .. < R_ℓ = R`), on which `μ⃗` must be constant.
pub fn shatz_sufficient(mu: &SlopeVector, partition: &[usize], lam: &SlopeVector) -> Result<bool> {
    check_comparable(mu, lam)?;
    let r = mu.rank();
    if partition.last() != Some(&r) || partition.windows(2).any(|w| w[0] >= w[1]) || partition[0] == 0 {
        return Err(Error::Argument(format!("bad partition {partition:?} for rank {r}")));
    }
    let v = mu.values();
    let mut start = 0;
    for &end in partition {
        if v[start..end].iter().any(|x| (x - v[start]).abs() > PARTIAL_SUM_TOL) {
            return Err(Error::Argument("μ is not constant on its partition blocks".into()));
        }
        start = end;
    }
    let (a, b) = (partial_sums(v), partial_sums(lam.values()));
    Ok(partition.iter().all(|&k| a[k - 1] <= b[k - 1] + PARTIAL_SUM_TOL))
}

/// `φ_α(iμ⃗) = Σ |μ_j|^α`.
pub fn phi_of_type(mu: &SlopeVector, alpha: f64) -> f64 {
    mu.values().iter().map(|m| m.abs().powf(alpha)).sum()
}

/// Checks `φ_α(iμ⃗) ≤ φ_α(iλ⃗)` for every `α` given `μ⃗ ≤ λ⃗`.
pub fn phi_monotone_check(mu: &SlopeVector, lam: &SlopeVector, alphas: &[f64]) -> Result<bool> {
    if !leq(mu, lam)? {
        return Err(Error::Argument("phi_monotone_check needs μ ≤ λ".into()));
    }
    if alphas.iter().any(|a| !(*a >= 1.0)) {
        return Err(Error::Argument("α must be >= 1".into()));
    }
    Ok(alphas.iter().all(|&a| phi_of_type(mu, a) <= phi_of_type(lam, a) + 1e-12 * (1.0 + phi_of_type(lam, a))))
}

/// `{1, 1.25, .., 3}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=8).map(|k| 1.0 + 0.25 * k as f64).collect()
}

/// Declares two nonnegative types equal iff their `φ_α` agree on every grid
/// point. A finite grid is a heuristic stand-in for a set with a limit point.
pub fn distinguish_types(mu: &SlopeVector, lam: &SlopeVector, alpha_grid: &[f64]) -> Result<bool> {
    if mu.values().iter().chain(lam.values()).any(|x| *x < 0.0) {
        return Err(Error::Argument("shift types to nonnegative entries first".into()));
    }
    if mu.rank() != lam.rank() {
        return Ok(false);
    }
    Ok(alpha_grid.iter().all(|&a| (phi_of_type(mu, a) - phi_of_type(lam, a)).abs() < 1e-9))
}

/// Averages the pointwise sorted eigenvalues of a hermitian field and merges
/// values within `cluster_tol` into blocks.
pub fn type_from_spectrum(field: &MatrixField, cluster_tol: f64) -> Result<SlopeVector> {
    let r = field.rows();
    let npts = field.npts();
    let mut mean = vec![0.0; r];
    let mut sq = vec![0.0; r];
    for p in 0..npts {
        let mut m = field.at(p).to_vec();
        linalg::hermitize(&mut m, r);
        for (k, v) in linalg::eigvalsh(&m, r).into_iter().enumerate() {
            mean[k] += v;
            sq[k] += v * v;
        }
    }
    let mut spread: f64 = 0.0;
    for k in 0..r {
        mean[k] /= npts as f64;
        spread = spread.max((sq[k] / npts as f64 - mean[k] * mean[k]).max(0.0).sqrt());
    }
    if spread >= cluster_tol {
        return Err(Error::NotEquilibrated { spread, tol: cluster_tol });
    }
    // Snap each cluster to its mean so that runs record the blocks.
    let mut values = mean.clone();
    let mut start = 0;
    for k in 1..=r {
        if k == r || mean[k - 1] - mean[k] > cluster_tol {
            let avg = mean[start..k].iter().sum::<f64>() / (k - start) as f64;
            values[start..k].iter_mut().for_each(|v| *v = avg);
            start = k;
        }
    }
    SlopeVector::new(values)
}
