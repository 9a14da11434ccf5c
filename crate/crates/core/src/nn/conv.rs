use rand::Rng;

use super::{Mat, Scalar};

/// 1-D convolution over a sequence of channel vectors, followed by ReLU and
/// a global max over positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<F> {
    /// `filters x (kernel * channels)`; column `k * channels + c` weights
    /// channel `c` at kernel offset `k`.
    pub w: Mat<F>,
    /// `1 x filters`
    pub b: Mat<F>,
    pub kernel: usize,
}

impl<F: Scalar> ConvParams<F> {
    pub fn zeros(channels: usize, filters: usize, kernel: usize) -> Self {
        ConvParams {
            w: Mat::zeros(filters, kernel * channels),
            b: Mat::zeros(1, filters),
            kernel,
        }
    }

    pub fn init<R: Rng>(channels: usize, filters: usize, kernel: usize, rng: &mut R) -> Self {
        let fan_in = (kernel * channels) as f64;
        ConvParams {
            w: Mat::uniform(filters, kernel * channels, 1.0 / fan_in.sqrt(), rng),
            b: Mat::zeros(1, filters),
            kernel,
        }
    }

    pub fn filters(&self) -> usize {
        self.w.rows
    }

    pub fn channels(&self) -> usize {
        self.w.cols / self.kernel
    }

    fn left_pad(&self) -> usize {
        (self.kernel - 1) / 2
    }
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    /// Winning output position per filter, `None` when the filter never fired.
    argmax: Vec<Option<usize>>,
}

/// Forward pass on `x` (`L x C`). `x` is expected to already hold at least
/// `kernel` rows; see [`pad_to_kernel`].
pub fn conv_max_forward<F: Scalar>(p: &ConvParams<F>, x: &Mat<F>) -> (Vec<F>, ConvCache) {
    let (len, ch) = (x.rows, x.cols);
    assert_eq!(ch, p.channels(), "conv channel mismatch");
    let pad = p.left_pad() as isize;
    let mut out = vec![F::zero(); p.filters()];
    let mut argmax = vec![None; p.filters()];
    for f in 0..p.filters() {
        let wf = p.w.row(f);
        for pos in 0..len {
            let mut z = p.b.data[f];
            for k in 0..p.kernel {
                let src = pos as isize + k as isize - pad;
                if src < 0 || src >= len as isize {
                    continue;
                }
                let xr = x.row(src as usize);
                let wk = &wf[k * ch..(k + 1) * ch];
                for c in 0..ch {
                    z = z + wk[c] * xr[c];
                }
            }
            // ReLU then max; strictly positive activations only can win
            if z > out[f] {
                out[f] = z;
                argmax[f] = Some(pos);
            }
        }
    }
    (out, ConvCache { argmax })
}

/// Accumulates into `grad` and returns `dx` (`L x C`).
pub fn conv_max_backward<F: Scalar>(
    p: &ConvParams<F>,
    x: &Mat<F>,
    cache: &ConvCache,
    d_out: &[F],
    grad: &mut ConvParams<F>,
) -> Mat<F> {
    let (len, ch) = (x.rows, x.cols);
    let pad = p.left_pad() as isize;
    let mut dx = Mat::zeros(len, ch);
    for f in 0..p.filters() {
        let Some(pos) = cache.argmax[f] else { continue };
        let g = d_out[f];
        if g == F::zero() {
            continue;
        }
        grad.b.data[f] = grad.b.data[f] + g;
        for k in 0..p.kernel {
            let src = pos as isize + k as isize - pad;
            if src < 0 || src >= len as isize {
                continue;
            }
            let src = src as usize;
            for c in 0..ch {
                let col = k * ch + c;
                let gw = grad.w.row_mut(f);
                gw[col] = gw[col] + g * x.get(src, c);
                let dxr = dx.row_mut(src);
                dxr[c] = dxr[c] + g * p.w.get(f, col);
            }
        }
    }
    dx
}

/// Appends zero rows so the sequence has at least `kernel` positions.
pub fn pad_to_kernel<F: Scalar>(x: Mat<F>, kernel: usize) -> Mat<F> {
    if x.rows >= kernel {
        return x;
    }
    let mut data = x.data;
    data.resize(kernel * x.cols, F::zero());
    Mat::from_vec(kernel, x.cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct convolution: explicitly zero-padded input, every window summed.
    fn oracle(p: &ConvParams<f64>, x: &Mat<f64>) -> Vec<f64> {
        let pad = (p.kernel - 1) / 2;
        let right = p.kernel - 1 - pad;
        let ch = x.cols;
        let mut padded = vec![vec![0.0; ch]; pad];
        for r in 0..x.rows {
            padded.push(x.row(r).to_vec());
        }
        padded.extend(vec![vec![0.0; ch]; right]);
        (0..p.filters())
            .map(|f| {
                (0..x.rows)
                    .map(|pos| {
                        let mut s = p.b.data[f];
                        for k in 0..p.kernel {
                            for c in 0..ch {
                                s += p.w.get(f, k * ch + c) * padded[pos + k][c];
                            }
                        }
                        s.max(0.0)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    #[test]
    fn matches_direct_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..50 {
            let ch = 1 + trial % 5;
            let len = 1 + trial % 7;
            let p: ConvParams<f64> = ConvParams {
                w: Mat::uniform(6, 3 * ch, 1.0, &mut rng),
                b: Mat::uniform(1, 6, 0.5, &mut rng),
                kernel: 3,
            };
            let x = pad_to_kernel(Mat::uniform(len, ch, 1.0, &mut rng), 3);
            let (got, _) = conv_max_forward(&p, &x);
            let want = oracle(&p, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-10, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let p: ConvParams<f64> = ConvParams::zeros(4, 8, 3);
        let x = Mat::from_vec(3, 4, vec![1.0; 12]);
        assert_eq!(conv_max_forward(&p, &x).0, vec![0.0; 8]);
    }

    #[test]
    fn short_input_padded_to_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let one: Mat<f64> = Mat::uniform(1, 2, 1.0, &mut rng);
        let padded = pad_to_kernel(one.clone(), 3);
        assert_eq!(padded.rows, 3);
        assert_eq!(padded.row(0), one.row(0));
        assert!(padded.data[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p: ConvParams<f64> = ConvParams {
            w: Mat::uniform(4, 9, 1.0, &mut rng),
            b: Mat::uniform(1, 4, 0.5, &mut rng),
            kernel: 3,
        };
        let x = Mat::uniform(5, 3, 1.0, &mut rng);
        let probe: Vec<f64> = (0..4).map(|i| 0.3 + i as f64).collect();
        let f = |p: &ConvParams<f64>, x: &Mat<f64>| {
            conv_max_forward(p, x).0.iter().zip(&probe).map(|(a, b)| a * b).sum::<f64>()
        };
        let (_, cache) = conv_max_forward(&p, &x);
        let mut g = ConvParams::zeros(3, 4, 3);
        let dx = conv_max_backward(&p, &x, &cache, &probe, &mut g);
        let h = 1e-7;
        for i in 0..x.len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a.data[i] += h;
            b.data[i] -= h;
            let fd = (f(&p, &a) - f(&p, &b)) / (2.0 * h);
            assert!((fd - dx.data[i]).abs() < 1e-6);
        }
        for i in 0..p.w.len() {
            let (mut a, mut b) = (p.clone(), p.clone());
            a.w.data[i] += h;
            b.w.data[i] -= h;
            let fd = (f(&a, &x) - f(&b, &x)) / (2.0 * h);
            assert!((fd - g.w.data[i]).abs() < 1e-6);
        }
    }
}
