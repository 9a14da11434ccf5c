//! Minimal differentiable building blocks. Every op has an explicit forward
//! pass that returns what the backward pass needs, and a backward pass that
//! accumulates parameter gradients and returns input gradients.

pub mod conv;
pub mod loss;
pub mod lstm;

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;

/// Floating-point type the model is generic over. Training runs in `f32`,
/// gradient checks in `f64`.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape {rows}x{cols} vs {} values", data.len());
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Uniform in `[-scale, scale]`.
    pub fn uniform<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| F::c(rng.gen_range(-scale..=scale)))
            .collect();
        Mat { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> F {
        self.data[r * self.cols + c]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(F::zero());
    }

    pub fn add_assign(&mut self, other: &Mat<F>) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    pub fn scale(&mut self, k: F) {
        for a in &mut self.data {
            *a = *a * k;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<G: Scalar>(&self) -> Mat<G> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| G::c(x.as_f64())).collect(),
        }
    }

    /// Concatenates equal-height matrices column-wise.
    pub fn hcat(parts: &[&Mat<F>]) -> Mat<F> {
        let rows = parts.first().map_or(0, |m| m.rows);
        let cols: usize = parts.iter().map(|m| m.cols).sum();
        let mut out = Mat::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for m in parts {
                assert_eq!(m.rows, rows, "hcat height mismatch");
                out.row_mut(r)[off..off + m.cols].copy_from_slice(m.row(r));
                off += m.cols;
            }
        }
        out
    }

    /// Copies columns `[from, from + width)`.
    pub fn columns(&self, from: usize, width: usize) -> Mat<F> {
        let mut out = Mat::zeros(self.rows, width);
        for r in 0..self.rows {
            out.row_mut(r).copy_from_slice(&self.row(r)[from..from + width]);
        }
        out
    }
}

#[inline]
pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `y += W x` for `W` of shape `y.len() x x.len()`.
#[inline]
pub fn gemv_acc<F: Scalar>(w: &Mat<F>, x: &[F], y: &mut [F]) {
    debug_assert_eq!(w.cols, x.len());
    debug_assert_eq!(w.rows, y.len());
    for (r, yr) in y.iter_mut().enumerate() {
        *yr = *yr + dot(w.row(r), x);
    }
}

/// `x_grad += W^T g`.
#[inline]
pub fn gemv_t_acc<F: Scalar>(w: &Mat<F>, g: &[F], x_grad: &mut [F]) {
    debug_assert_eq!(w.rows, g.len());
    for (r, &gr) in g.iter().enumerate() {
        if gr == F::zero() {
            continue;
        }
        for (xg, &wv) in x_grad.iter_mut().zip(w.row(r)) {
            *xg = *xg + gr * wv;
        }
    }
}

/// `W_grad += g x^T`.
#[inline]
pub fn outer_acc<F: Scalar>(w_grad: &mut Mat<F>, g: &[F], x: &[F]) {
    for (r, &gr) in g.iter().enumerate() {
        if gr == F::zero() {
            continue;
        }
        for (wg, &xv) in w_grad.row_mut(r).iter_mut().zip(x) {
            *wg = *wg + gr * xv;
        }
    }
}

#[inline]
pub fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Dense affine map `y = W x + b` applied row-wise to a `T x in` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine<F> {
    /// `out x in`
    pub w: Mat<F>,
    pub b: Mat<F>,
}

impl<F: Scalar> Affine<F> {
    pub fn zeros(inp: usize, out: usize) -> Self {
        Affine {
            w: Mat::zeros(out, inp),
            b: Mat::zeros(1, out),
        }
    }

    pub fn init<R: Rng>(inp: usize, out: usize, rng: &mut R) -> Self {
        Affine {
            w: Mat::uniform(out, inp, 1.0 / (inp as f64).sqrt(), rng),
            b: Mat::zeros(1, out),
        }
    }

    pub fn forward(&self, x: &Mat<F>) -> Mat<F> {
        let mut y = Mat::zeros(x.rows, self.w.rows);
        for t in 0..x.rows {
            let yr = y.row_mut(t);
            yr.copy_from_slice(&self.b.data);
            gemv_acc(&self.w, x.row(t), yr);
        }
        y
    }

    /// Accumulates into `grad` and returns the input gradient.
    pub fn backward(&self, x: &Mat<F>, dy: &Mat<F>, grad: &mut Affine<F>) -> Mat<F> {
        let mut dx = Mat::zeros(x.rows, x.cols);
        for t in 0..x.rows {
            let g = dy.row(t);
            outer_acc(&mut grad.w, g, x.row(t));
            for (b, &gv) in grad.b.data.iter_mut().zip(g) {
                *b = *b + gv;
            }
            gemv_t_acc(&self.w, g, dx.row_mut(t));
        }
        dx
    }
}

/// Inverted dropout: kept entries are scaled by `1 / (1 - p)`.
pub fn dropout_mask<F: Scalar, R: Rng>(rows: usize, cols: usize, p: f64, rng: &mut R) -> Mat<F> {
    let keep = F::c(1.0 / (1.0 - p));
    let data = (0..rows * cols)
        .map(|_| if rng.gen::<f64>() < p { F::zero() } else { keep })
        .collect();
    Mat { rows, cols, data }
}

pub fn hadamard<F: Scalar>(a: &Mat<F>, b: &Mat<F>) -> Mat<F> {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    Mat {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| x * y).collect(),
    }
}
