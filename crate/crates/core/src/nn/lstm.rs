use rand::Rng;

use super::{gemv_acc, gemv_t_acc, outer_acc, sigmoid, Mat, Scalar};

/// One LSTM direction. Gate blocks are stacked in the order input, forget,
/// cell candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<F> {
    /// `4H x D`
    pub w_x: Mat<F>,
    /// `4H x H`
    pub w_h: Mat<F>,
    /// `1 x 4H`
    pub b: Mat<F>,
}

pub const FORGET_BIAS: f64 = 1.0;

impl<F: Scalar> LstmParams<F> {
    pub fn zeros(d_in: usize, hidden: usize) -> Self {
        LstmParams {
            w_x: Mat::zeros(4 * hidden, d_in),
            w_h: Mat::zeros(4 * hidden, hidden),
            b: Mat::zeros(1, 4 * hidden),
        }
    }

    /// Uniform `±1/sqrt(fan_in)` weights, zero bias except the forget gate (+1).
    pub fn init<R: Rng>(d_in: usize, hidden: usize, rng: &mut R) -> Self {
        let mut b = Mat::zeros(1, 4 * hidden);
        b.data[hidden..2 * hidden].fill(F::c(FORGET_BIAS));
        LstmParams {
            w_x: Mat::uniform(4 * hidden, d_in, 1.0 / (d_in as f64).sqrt(), rng),
            w_h: Mat::uniform(4 * hidden, hidden, 1.0 / (hidden as f64).sqrt(), rng),
            b,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.cols
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.cols
    }
}

#[derive(Debug, Clone)]
pub struct LstmCache<F> {
    reverse: bool,
    /// Post-activation gates per timestep, `T x 4H`.
    gates: Mat<F>,
    c: Mat<F>,
    tanh_c: Mat<F>,
    h: Mat<F>,
}

/// Runs one direction over `x` (`T x D`) and returns hidden states `T x H`
/// indexed by original position.
pub fn lstm_forward<F: Scalar>(p: &LstmParams<F>, x: &Mat<F>, reverse: bool) -> (Mat<F>, LstmCache<F>) {
    let hd = p.hidden();
    let t_len = x.rows;
    let mut gates = Mat::zeros(t_len, 4 * hd);
    let mut c = Mat::zeros(t_len, hd);
    let mut tanh_c = Mat::zeros(t_len, hd);
    let mut h = Mat::zeros(t_len, hd);
    let zero = vec![F::zero(); hd];
    let mut prev: Option<usize> = None;
    let mut pre = vec![F::zero(); 4 * hd];
    for step in 0..t_len {
        let t = if reverse { t_len - 1 - step } else { step };
        pre.copy_from_slice(&p.b.data);
        gemv_acc(&p.w_x, x.row(t), &mut pre);
        let (h_prev, c_prev) = match prev {
            Some(s) => (h.row(s).to_vec(), c.row(s).to_vec()),
            None => (zero.clone(), zero.clone()),
        };
        gemv_acc(&p.w_h, &h_prev, &mut pre);
        let g = gates.row_mut(t);
        for k in 0..hd {
            g[k] = sigmoid(pre[k]);
            g[hd + k] = sigmoid(pre[hd + k]);
            g[2 * hd + k] = pre[2 * hd + k].tanh();
            g[3 * hd + k] = sigmoid(pre[3 * hd + k]);
        }
        let g = gates.row(t).to_vec();
        for k in 0..hd {
            let ck = g[hd + k] * c_prev[k] + g[k] * g[2 * hd + k];
            let tc = ck.tanh();
            c.row_mut(t)[k] = ck;
            tanh_c.row_mut(t)[k] = tc;
            h.row_mut(t)[k] = g[3 * hd + k] * tc;
        }
        prev = Some(t);
    }
    let out = h.clone();
    (
        out,
        LstmCache {
            reverse,
            gates,
            c,
            tanh_c,
            h,
        },
    )
}

/// Backpropagation through time. Accumulates into `grad`, returns `dx`.
pub fn lstm_backward<F: Scalar>(
    p: &LstmParams<F>,
    x: &Mat<F>,
    cache: &LstmCache<F>,
    dh_out: &Mat<F>,
    grad: &mut LstmParams<F>,
) -> Mat<F> {
    let hd = p.hidden();
    let t_len = x.rows;
    let mut dx = Mat::zeros(t_len, x.cols);
    let mut dh_next = vec![F::zero(); hd];
    let mut dc_next = vec![F::zero(); hd];
    let mut da = vec![F::zero(); 4 * hd];
    let zero = vec![F::zero(); hd];
    let one = F::one();
    for step in (0..t_len).rev() {
        let t = if cache.reverse { t_len - 1 - step } else { step };
        let prev = if step == 0 {
            None
        } else if cache.reverse {
            Some(t + 1)
        } else {
            Some(t - 1)
        };
        let (h_prev, c_prev) = match prev {
            Some(s) => (cache.h.row(s), cache.c.row(s)),
            None => (zero.as_slice(), zero.as_slice()),
        };
        let g = cache.gates.row(t);
        let tc = cache.tanh_c.row(t);
        for k in 0..hd {
            let (i, f, gg, o) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
            let dh = dh_out.get(t, k) + dh_next[k];
            let d_o = dh * tc[k];
            let dc = dh * o * (one - tc[k] * tc[k]) + dc_next[k];
            da[k] = dc * gg * i * (one - i);
            da[hd + k] = dc * c_prev[k] * f * (one - f);
            da[2 * hd + k] = dc * i * (one - gg * gg);
            da[3 * hd + k] = d_o * o * (one - o);
            dc_next[k] = dc * f;
        }
        outer_acc(&mut grad.w_x, &da, x.row(t));
        outer_acc(&mut grad.w_h, &da, h_prev);
        for (b, &d) in grad.b.data.iter_mut().zip(&da) {
            *b = *b + d;
        }
        gemv_t_acc(&p.w_x, &da, dx.row_mut(t));
        dh_next.fill(F::zero());
        gemv_t_acc(&p.w_h, &da, &mut dh_next);
    }
    dx
}
