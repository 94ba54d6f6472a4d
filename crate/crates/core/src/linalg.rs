//! Dense kernels for the small (R <= 8) complex matrices stored at every
//! grid point. Matrices are row-major slices of length `r * r`.

use crate::C64;

pub const MAX_RANK: usize = 8;

/// Scratch buffer big enough for any per-point matrix.
pub type Buf = [C64; MAX_RANK * MAX_RANK];

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn buf() -> Buf {
    [ZERO; MAX_RANK * MAX_RANK]
}

pub fn identity(r: usize) -> Vec<C64> {
    let mut m = vec![ZERO; r * r];
    for i in 0..r {
        m[i * r + i] = ONE;
    }
    m
}

#[inline]
pub fn matmul(a: &[C64], b: &[C64], out: &mut [C64], r: usize) {
    for i in 0..r {
        for j in 0..r {
            let mut s = ZERO;
            for k in 0..r {
                s += a[i * r + k] * b[k * r + j];
            }
            out[i * r + j] = s;
        }
    }
}

/// `out = a * b^dagger`
#[inline]
pub fn matmul_adj(a: &[C64], b: &[C64], out: &mut [C64], r: usize) {
    for i in 0..r {
        for j in 0..r {
            let mut s = ZERO;
            for k in 0..r {
                s += a[i * r + k] * b[j * r + k].conj();
            }
            out[i * r + j] = s;
        }
    }
}

/// `out = a^dagger * b`
#[inline]
pub fn adj_matmul(a: &[C64], b: &[C64], out: &mut [C64], r: usize) {
    for i in 0..r {
        for j in 0..r {
            let mut s = ZERO;
            for k in 0..r {
                s += a[k * r + i].conj() * b[k * r + j];
            }
            out[i * r + j] = s;
        }
    }
}

#[inline]
pub fn adjoint(a: &[C64], out: &mut [C64], r: usize) {
    for i in 0..r {
        for j in 0..r {
            out[i * r + j] = a[j * r + i].conj();
        }
    }
}

#[inline]
pub fn trace(a: &[C64], r: usize) -> C64 {
    (0..r).map(|i| a[i * r + i]).sum()
}

/// `tr(a b)` without forming the product.
#[inline]
pub fn trace_prod(a: &[C64], b: &[C64], r: usize) -> C64 {
    let mut s = ZERO;
    for i in 0..r {
        for k in 0..r {
            s += a[i * r + k] * b[k * r + i];
        }
    }
    s
}

/// Frobenius norm squared, `tr(a a^dagger)`.
#[inline]
pub fn frob2(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `out = a b - b a`
#[inline]
pub fn commutator(a: &[C64], b: &[C64], out: &mut [C64], r: usize) {
    for i in 0..r {
        for j in 0..r {
            let mut s = ZERO;
            for k in 0..r {
                s += a[i * r + k] * b[k * r + j] - b[i * r + k] * a[k * r + j];
            }
            out[i * r + j] = s;
        }
    }
}

/// Replace `a` by `(a + a^dagger) / 2`.
#[inline]
pub fn hermitize(a: &mut [C64], r: usize) {
    for i in 0..r {
        a[i * r + i].im = 0.0;
        for j in (i + 1)..r {
            let m = 0.5 * (a[i * r + j] + a[j * r + i].conj());
            a[i * r + j] = m;
            a[j * r + i] = m.conj();
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `a = L L^dagger`, or `None`
/// if `a` is not positive definite.
pub fn cholesky(a: &[C64], out: &mut [C64], r: usize) -> Option<()> {
    for v in out[..r * r].iter_mut() {
        *v = ZERO;
    }
    for j in 0..r {
        let mut d = a[j * r + j].re;
        for k in 0..j {
            d -= out[j * r + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        out[j * r + j] = C64::new(ljj, 0.0);
        for i in (j + 1)..r {
            let mut s = a[i * r + j];
            for k in 0..j {
                s -= out[i * r + k] * out[j * r + k].conj();
            }
            out[i * r + j] = s / ljj;
        }
    }
    Some(())
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse(l: &[C64], out: &mut [C64], r: usize) {
    for v in out[..r * r].iter_mut() {
        *v = ZERO;
    }
    for j in 0..r {
        out[j * r + j] = ONE / l[j * r + j];
        for i in (j + 1)..r {
            let mut s = ZERO;
            for k in j..i {
                s += l[i * r + k] * out[k * r + j];
            }
            out[i * r + j] = -s / l[i * r + i];
        }
    }
}

/// General inverse by Gauss-Jordan elimination with partial pivoting.
/// Returns `None` for (numerically) singular input.
pub fn inverse(a: &[C64], out: &mut [C64], r: usize) -> Option<()> {
    if r == 1 {
        if a[0].norm() == 0.0 {
            return None;
        }
        out[0] = ONE / a[0];
        return Some(());
    }
    if r == 2 {
        let det = a[0] * a[3] - a[1] * a[2];
        if det.norm() == 0.0 {
            return None;
        }
        out[0] = a[3] / det;
        out[1] = -a[1] / det;
        out[2] = -a[2] / det;
        out[3] = a[0] / det;
        return Some(());
    }
    let mut m = buf();
    m[..r * r].copy_from_slice(&a[..r * r]);
    for (i, v) in out[..r * r].iter_mut().enumerate() {
        *v = if i / r == i % r { ONE } else { ZERO };
    }
    for c in 0..r {
        let p = (c..r)
            .max_by(|&x, &y| m[x * r + c].norm().total_cmp(&m[y * r + c].norm()))
            .unwrap();
        if m[p * r + c].norm() == 0.0 {
            return None;
        }
        if p != c {
            for k in 0..r {
                m.swap(p * r + k, c * r + k);
                out.swap(p * r + k, c * r + k);
            }
        }
        let piv = ONE / m[c * r + c];
        for k in 0..r {
            m[c * r + k] *= piv;
            out[c * r + k] *= piv;
        }
        for i in 0..r {
            if i != c {
                let f = m[i * r + c];
                if f != ZERO {
                    for k in 0..r {
                        let mk = m[c * r + k];
                        let ok = out[c * r + k];
                        m[i * r + k] -= f * mk;
                        out[i * r + k] -= f * ok;
                    }
                }
            }
        }
    }
    Some(())
}

/// Log-determinant of a positive hermitian matrix through its Cholesky
/// factor.
pub fn log_det_pos(a: &[C64], r: usize) -> Option<f64> {
    let mut l = buf();
    cholesky(a, &mut l, r)?;
    Some((0..r).map(|i| 2.0 * l[i * r + i].re.ln()).sum())
}

/// Eigenvalues of a hermitian matrix, sorted nonincreasingly.
///
/// Closed form for `r <= 2`, cyclic Jacobi otherwise.
pub fn eigvalsh(a: &[C64], r: usize) -> Vec<f64> {
    match r {
        1 => vec![a[0].re],
        2 => {
            let m = 0.5 * (a[0].re + a[3].re);
            let d = 0.5 * (a[0].re - a[3].re);
            let rad = (d * d + a[1].norm_sqr()).sqrt();
            vec![m + rad, m - rad]
        }
        _ => eigh(a, r).0,
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues sorted nonincreasingly and the unitary matrix whose
/// columns are the matching eigenvectors (row-major).
pub fn eigh(a: &[C64], r: usize) -> (Vec<f64>, Vec<C64>) {
    let mut m = a[..r * r].to_vec();
    hermitize(&mut m, r);
    let mut v = identity(r);
    let scale = frob2(&m).sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..r {
            for q in (p + 1)..r {
                off += m[p * r + q].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..r {
            for q in (p + 1)..r {
                let b = m[p * r + q];
                let babs = b.norm();
                if babs <= 1e-300 {
                    continue;
                }
                let ph = b / babs;
                let tau = (m[q * r + q].re - m[p * r + p].re) / (2.0 * babs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = [[c, s], [-s conj(ph), c conj(ph)]] on the (p, q) plane.
                let jqp = -s * ph.conj();
                let jqq = c * ph.conj();
                for k in 0..r {
                    let mkp = m[k * r + p];
                    let mkq = m[k * r + q];
                    m[k * r + p] = mkp * c + mkq * jqp;
                    m[k * r + q] = mkp * s + mkq * jqq;
                    let vkp = v[k * r + p];
                    let vkq = v[k * r + q];
                    v[k * r + p] = vkp * c + vkq * jqp;
                    v[k * r + q] = vkp * s + vkq * jqq;
                }
                for k in 0..r {
                    let mpk = m[p * r + k];
                    let mqk = m[q * r + k];
                    m[p * r + k] = mpk * c + mqk * jqp.conj();
                    m[q * r + k] = mpk * s + mqk * jqq.conj();
                }
                m[p * r + q] = ZERO;
                m[q * r + p] = ZERO;
            }
        }
    }
    let mut idx: Vec<usize> = (0..r).collect();
    idx.sort_by(|&x, &y| m[y * r + y].re.total_cmp(&m[x * r + x].re));
    let vals = idx.iter().map(|&i| m[i * r + i].re).collect();
    let mut vecs = vec![ZERO; r * r];
    for (col, &i) in idx.iter().enumerate() {
        for k in 0..r {
            vecs[k * r + col] = v[k * r + i];
        }
    }
    (vals, vecs)
}

/// Positive square root of a positive hermitian matrix.
pub fn sqrt_pos(a: &[C64], r: usize) -> Vec<C64> {
    let (vals, vecs) = eigh(a, r);
    let mut out = vec![ZERO; r * r];
    for i in 0..r {
        for j in 0..r {
            let mut s = ZERO;
            for k in 0..r {
                s += vecs[i * r + k] * vals[k].max(0.0).sqrt() * vecs[j * r + k].conj();
            }
            out[i * r + j] = s;
        }
    }
    out
}

/// Transport an endomorphism of the metric frame `h = L L^dagger` into the
/// unitary frame: `L^dagger x L^{-dagger}`. The coordinate flags
/// `span(e_1..e_k)` are preserved because `L` is lower triangular.
pub fn to_unitary_frame(x: &[C64], l: &[C64], linv: &[C64], out: &mut [C64], r: usize) {
    let mut t = buf();
    adj_matmul(l, x, &mut t, r);
    matmul_adj(&t, linv, out, r);
}
