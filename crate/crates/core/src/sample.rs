//! Reproducible random smooth fields for scenarios and tests.

use std::f64::consts::PI;

use rand::Rng;

use crate::field::{MatrixField, Twist};
use crate::lattice::TorusLattice;
use crate::linalg;
use crate::C64;

/// Smooth random matrix field made of low Fourier modes. Entries with a
/// nonzero charge on a factor use a Gaussian theta series in that factor so
/// that the result is quasi-periodic with the right twist.
///
/// When `factors` is `Some(k)`, the field only depends on the first `k`
/// complex factors.
pub fn smooth_random_in<R: Rng>(
    lat: &TorusLattice,
    tw: &Twist,
    rng: &mut R,
    amp: f64,
    factors: Option<usize>,
) -> MatrixField {
    let r = tw.row.len();
    let c = tw.col.len();
    let n = lat.n();
    let active = factors.unwrap_or(n).min(n);
    let coeffs: Vec<(usize, [i64; 4], C64)> = (0..r * c)
        .flat_map(|e| {
            (0..3)
                .map(|_| {
                    let ks = [
                        rng.gen_range(-1..=1),
                        rng.gen_range(-1..=1),
                        rng.gen_range(-1..=1),
                        rng.gen_range(-1..=1),
                    ];
                    (e, ks, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    MatrixField::from_fn(lat, r, c, tw, |p, m| {
        for &(e, ks, z) in &coeffs {
            let (k, l) = (e / c, e % c);
            let mut v = z * amp;
            for a in 0..n {
                let q = tw.charge(k, l, a);
                let x = lat.coord(p, 2 * a);
                let y = lat.coord(p, 2 * a + 1);
                let (kx, ky) = if a < active { (ks[2 * a], ks[2 * a + 1]) } else { (0, 0) };
                if q == 0 {
                    v *= C64::cis(2.0 * PI * (kx as f64 * x + ky as f64 * y));
                } else {
                    let mut s = linalg::ZERO;
                    for mm in -6i64..=6 {
                        let xx = x + mm as f64;
                        s += C64::cis(2.0 * PI * ((ky - q * mm) as f64) * y) * (-2.0 * (xx - 0.5).powi(2)).exp();
                    }
                    v *= s;
                }
            }
            m[e] += v;
        }
    })
}

pub fn smooth_random<R: Rng>(lat: &TorusLattice, tw: &Twist, rng: &mut R, amp: f64) -> MatrixField {
    smooth_random_in(lat, tw, rng, amp, None)
}

/// Random smooth positive metric `exp(s)` with `s` hermitian, normalized to
/// `det = 1` pointwise.
pub fn random_metric<R: Rng>(lat: &TorusLattice, tw: &Twist, rng: &mut R, amp: f64, factors: Option<usize>) -> MatrixField {
    let mut s = smooth_random_in(lat, tw, rng, amp, factors);
    let r = tw.row.len();
    for p in 0..lat.npts() {
        let m = s.at_mut(p);
        linalg::hermitize(m, r);
        let tr = linalg::trace(m, r) / r as f64;
        for i in 0..r {
            m[i * r + i] -= tr;
        }
    }
    exp_hermitian(&s)
}

/// Pointwise matrix exponential of a hermitian field.
pub fn exp_hermitian(s: &MatrixField) -> MatrixField {
    let r = s.rows();
    let mut out = s.zeros_like();
    for p in 0..s.npts() {
        let (vals, vecs) = linalg::eigh(s.at(p), r);
        let m = out.at_mut(p);
        for i in 0..r {
            for j in 0..r {
                let mut acc = linalg::ZERO;
                for k in 0..r {
                    acc += vecs[i * r + k] * vals[k].exp() * vecs[j * r + k].conj();
                }
                m[i * r + j] = acc;
            }
        }
    }
    out
}
