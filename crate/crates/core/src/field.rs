//! Grid-sampled matrix fields on twisted bundles.
//!
//! A line-bundle block with charge `q` on factor `a` is represented in the
//! gauge `A = -2πi q x_a dy_a`. Fields are stored on the fundamental domain
//! and are quasi-periodic: crossing `x_a -> x_a + 1` multiplies an entry of
//! charge `q` by `exp(2πi q y_a)`; the `y_a` direction is periodic.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{TorusLattice, STENCIL};
use crate::linalg::{self, ZERO};
use crate::C64;

/// Integer charges attached to the rows and columns of a matrix field. The
/// entry `(k, l)` transforms with charge `row[k] - col[l]` on each factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Twist {
    pub row: Vec<Vec<i64>>,
    pub col: Vec<Vec<i64>>,
}

impl Twist {
    /// Untwisted endomorphisms of a rank-`r` bundle on an `n`-fold torus.
    pub fn trivial(r: usize, n: usize) -> Self {
        Self { row: vec![vec![0; n]; r], col: vec![vec![0; n]; r] }
    }

    /// Endomorphisms of a sum of line bundles; `charges[k]` lists the charge
    /// of basis vector `k` on each factor.
    pub fn endomorphism(charges: &[Vec<i64>]) -> Self {
        Self { row: charges.to_vec(), col: charges.to_vec() }
    }

    /// Sections (column vectors).
    pub fn section(charges: &[Vec<i64>]) -> Self {
        let n = charges.first().map_or(1, |c| c.len());
        Self { row: charges.to_vec(), col: vec![vec![0; n]] }
    }

    pub fn n(&self) -> usize {
        self.row.first().map_or(0, |c| c.len())
    }

    pub fn adjoint(&self) -> Self {
        Self { row: self.col.clone(), col: self.row.clone() }
    }

    /// Charge of entry `(k, l)` on factor `a`.
    #[inline]
    pub fn charge(&self, k: usize, l: usize, a: usize) -> i64 {
        self.row[k][a] - self.col[l][a]
    }

    fn entry_charges(&self, a: usize) -> Vec<i64> {
        let mut v = Vec::with_capacity(self.row.len() * self.col.len());
        for k in 0..self.row.len() {
            for l in 0..self.col.len() {
                v.push(self.charge(k, l, a));
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    rows: usize,
    cols: usize,
    twist: Twist,
    dims: Vec<usize>,
    data: Vec<C64>,
}

impl MatrixField {
    pub fn zeros(lat: &TorusLattice, rows: usize, cols: usize, twist: &Twist) -> Self {
        assert_eq!(twist.row.len(), rows);
        assert_eq!(twist.col.len(), cols);
        Self {
            rows,
            cols,
            twist: twist.clone(),
            dims: lat.dims().to_vec(),
            data: vec![ZERO; lat.npts() * rows * cols],
        }
    }

    pub fn from_fn(
        lat: &TorusLattice,
        rows: usize,
        cols: usize,
        twist: &Twist,
        mut f: impl FnMut(usize, &mut [C64]),
    ) -> Self {
        let mut out = Self::zeros(lat, rows, cols, twist);
        let m = rows * cols;
        for (p, chunk) in out.data.chunks_mut(m).enumerate() {
            f(p, chunk);
        }
        out
    }

    pub fn identity(lat: &TorusLattice, r: usize, twist: &Twist) -> Self {
        Self::from_fn(lat, r, r, twist, |_, m| {
            for i in 0..r {
                m[i * r + i] = linalg::ONE;
            }
        })
    }

    /// Field with raw storage, e.g. from a checkpoint.
    pub fn from_raw(dims: Vec<usize>, rows: usize, cols: usize, twist: Twist, data: Vec<C64>) -> Result<Self> {
        let npts: usize = dims.iter().product();
        if data.len() != npts * rows * cols || twist.row.len() != rows || twist.col.len() != cols {
            return Err(Error::Shape(format!(
                "raw field of {} values does not match {rows}x{cols} on {dims:?}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, twist, dims, data })
    }

    pub fn zeros_like(&self) -> Self {
        Self { data: vec![ZERO; self.data.len()], ..self.clone() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn twist(&self) -> &Twist {
        &self.twist
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn npts(&self) -> usize {
        self.data.len() / (self.rows * self.cols)
    }

    #[inline]
    pub fn at(&self, p: usize) -> &[C64] {
        let m = self.rows * self.cols;
        &self.data[p * m..(p + 1) * m]
    }

    #[inline]
    pub fn at_mut(&mut self, p: usize) -> &mut [C64] {
        let m = self.rows * self.cols;
        &mut self.data[p * m..(p + 1) * m]
    }

    pub fn check_lattice(&self, lat: &TorusLattice) -> Result<()> {
        if self.dims != lat.dims() {
            return Err(Error::Shape(format!("field grid {:?} vs lattice grid {:?}", self.dims, lat.dims())));
        }
        Ok(())
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims || self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} on {:?} vs {}x{} on {:?}",
                self.rows, self.cols, self.dims, other.rows, other.cols, other.dims
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { data: self.data.iter().map(|z| z * c).collect(), ..self.clone() }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: C64, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(linalg::ONE, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    pub fn adjoint(&self) -> Self {
        let (r, c) = (self.rows, self.cols);
        let mut out = Self {
            rows: c,
            cols: r,
            twist: self.twist.adjoint(),
            dims: self.dims.clone(),
            data: vec![ZERO; self.data.len()],
        };
        let m = r * c;
        for p in 0..self.npts() {
            let src = &self.data[p * m..(p + 1) * m];
            let dst = &mut out.data[p * m..(p + 1) * m];
            for i in 0..r {
                for j in 0..c {
                    dst[j * r + i] = src[i * c + j].conj();
                }
            }
        }
        out
    }

    /// Pointwise matrix product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let (r, m, c) = (self.rows, self.cols, other.cols);
        let twist = Twist { row: self.twist.row.clone(), col: other.twist.col.clone() };
        let mut data = vec![ZERO; self.npts() * r * c];
        for p in 0..self.npts() {
            let a = &self.data[p * r * m..(p + 1) * r * m];
            let b = &other.data[p * m * c..(p + 1) * m * c];
            let o = &mut data[p * r * c..(p + 1) * r * c];
            for i in 0..r {
                for j in 0..c {
                    let mut s = ZERO;
                    for k in 0..m {
                        s += a[i * m + k] * b[k * c + j];
                    }
                    o[i * c + j] = s;
                }
            }
        }
        Self { rows: r, cols: c, twist, dims: self.dims.clone(), data }
    }

    /// Pointwise `[self, other]` for square fields.
    pub fn commutator(&self, other: &Self) -> Self {
        let mut out = self.mul(other);
        out.axpy(C64::new(-1.0, 0.0), &other.mul(self));
        out
    }

    /// Largest pointwise deviation from hermiticity, `max |a - a^dagger|`.
    pub fn hermitian_defect(&self) -> f64 {
        let r = self.rows;
        let mut worst: f64 = 0.0;
        for p in 0..self.npts() {
            let m = self.at(p);
            for i in 0..r {
                for j in 0..r {
                    worst = worst.max((m[i * r + j] - m[j * r + i].conj()).norm());
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Plain (real-valued) L² norm `(∫ |f|²_F)^{1/2}`.
    pub fn l2(&self, lat: &TorusLattice) -> f64 {
        let m = self.rows * self.cols;
        let s: f64 = self.data.chunks(m).map(linalg::frob2).sum();
        (s * lat.weight()).sqrt()
    }

    /// Grid translation by `offset` steps along `dir`, applying the twist
    /// factor to every value that wraps the boundary.
    pub fn shift(&self, lat: &TorusLattice, dir: usize, offset: isize) -> Self {
        let mut out = self.zeros_like();
        let m = self.rows * self.cols;
        let a = dir / 2;
        let charges = self.twist.entry_charges(a);
        for p in 0..lat.npts() {
            let (q, wraps) = lat.neighbor(p, dir, offset);
            let src = &self.data[q * m..(q + 1) * m];
            let dst = &mut out.data[p * m..(p + 1) * m];
            if wraps != 0 && dir % 2 == 0 {
                let y = lat.coord(p, dir + 1);
                for e in 0..m {
                    dst[e] = src[e] * C64::cis(2.0 * PI * (wraps * charges[e]) as f64 * y);
                }
            } else {
                dst.copy_from_slice(src);
            }
        }
        out
    }

    /// Background-covariant derivative along a real direction: fourth-order
    /// central differences with twisted wrapping, plus the gauge potential
    /// `-2πi q x_a` on the `y_a` direction.
    pub fn deriv(&self, lat: &TorusLattice, dir: usize) -> Self {
        let mut out = self.zeros_like();
        let m = self.rows * self.cols;
        let a = dir / 2;
        let charges = self.twist.entry_charges(a);
        let twisted = charges.iter().any(|&c| c != 0);
        let inv_h = 1.0 / lat.spacing(dir);
        let nd = lat.dims()[dir] as isize;
        let stride = lat.stride(dir);
        for p in 0..lat.npts() {
            let i = lat.index_along(p, dir) as isize;
            let base = p - i as usize * stride;
            let dst = &mut out.data[p * m..(p + 1) * m];
            for &(o, w) in STENCIL.iter() {
                let j = i + o;
                let (jj, wraps) = if j < 0 {
                    (j + nd, -1)
                } else if j >= nd {
                    (j - nd, 1)
                } else {
                    (j, 0)
                };
                let q = base + jj as usize * stride;
                let src = &self.data[q * m..(q + 1) * m];
                let wt = w * inv_h;
                if twisted && wraps != 0 && dir % 2 == 0 {
                    let y = lat.coord(p, dir + 1);
                    for e in 0..m {
                        dst[e] += src[e] * C64::cis(2.0 * PI * (wraps * charges[e]) as f64 * y) * wt;
                    }
                } else {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s * wt;
                    }
                }
            }
            if twisted && dir % 2 == 1 {
                let x = lat.coord(p, dir - 1);
                let src = &self.data[p * m..(p + 1) * m];
                for e in 0..m {
                    dst[e] += src[e] * C64::new(0.0, -2.0 * PI * charges[e] as f64 * x);
                }
            }
        }
        out
    }

    /// `∂_a = (D_x - i D_y) / 2` with the background connection.
    pub fn del(&self, lat: &TorusLattice, a: usize) -> Self {
        let mut out = self.deriv(lat, 2 * a).scaled(C64::new(0.5, 0.0));
        out.axpy(C64::new(0.0, -0.5), &self.deriv(lat, 2 * a + 1));
        out
    }

    /// `∂̄_a = (D_x + i D_y) / 2` with the background connection.
    pub fn delbar(&self, lat: &TorusLattice, a: usize) -> Self {
        let mut out = self.deriv(lat, 2 * a).scaled(C64::new(0.5, 0.0));
        out.axpy(C64::new(0.0, 0.5), &self.deriv(lat, 2 * a + 1));
        out
    }
}

/// A two-form valued in matrices, in the complex basis: `f11[a * n + b]` is
/// the coefficient of `dz_a ∧ dz̄_b`, and `f02` (surfaces only) the
/// coefficient of `dz̄_1 ∧ dz̄_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm {
    pub f11: Vec<MatrixField>,
    pub f02: Option<MatrixField>,
}

impl TwoForm {
    pub fn zeros(lat: &TorusLattice, r: usize, twist: &Twist) -> Self {
        let n = lat.n();
        let z = MatrixField::zeros(lat, r, r, twist);
        Self { f11: vec![z.clone(); n * n], f02: if n == 2 { Some(z) } else { None } }
    }

    pub fn n(&self) -> usize {
        if self.f11.len() == 4 {
            2
        } else {
            1
        }
    }
}
