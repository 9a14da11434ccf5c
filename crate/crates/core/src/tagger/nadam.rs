use crate::error::{Error, Result};
use crate::nn::{Mat, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

/// First and second moments per parameter tensor plus the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct Nadam<F> {
    pub m: Vec<Mat<F>>,
    pub v: Vec<Mat<F>>,
    pub step: u64,
}

impl<F: Scalar> Nadam<F> {
    pub fn new<'a>(shapes: impl IntoIterator<Item = &'a Mat<F>>) -> Self {
        let m: Vec<Mat<F>> = shapes.into_iter().map(|p| Mat::zeros(p.rows, p.cols)).collect();
        Nadam {
            v: m.clone(),
            m,
            step: 0,
        }
    }

    /// One Nesterov-accelerated Adam update with a constant momentum schedule:
    ///
    /// `m_hat = b1 m_t / (1 - b1^(t+1)) + (1 - b1) g / (1 - b1^t)`,
    /// `v_hat = v_t / (1 - b2^t)`, `theta -= lr m_hat / (sqrt(v_hat) + eps)`.
    ///
    /// Nothing is modified when any gradient is non-finite.
    pub fn update(&mut self, params: Vec<&mut Mat<F>>, grads: &[&Mat<F>], cfg: &NadamConfig) -> Result<()> {
        assert_eq!(params.len(), self.m.len(), "optimizer state does not match the parameters");
        assert_eq!(grads.len(), self.m.len());
        if let Some(i) = grads.iter().position(|g| !g.all_finite()) {
            return Err(Error::Divergence(format!("non-finite gradient in parameter group {i} at step {}", self.step + 1)));
        }
        self.step += 1;
        let t = self.step as f64;
        let (b1, b2) = (F::c(cfg.beta1), F::c(cfg.beta2));
        let one = F::one();
        let c_next = F::c(1.0 - cfg.beta1.powf(t + 1.0));
        let c_now = F::c(1.0 - cfg.beta1.powf(t));
        let c_v = F::c(1.0 - cfg.beta2.powf(t));
        let (lr, eps) = (F::c(cfg.lr), F::c(cfg.eps));
        for (k, p) in params.into_iter().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], grads[k]);
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = b1 * m.data[i] + (one - b1) * gi;
                v.data[i] = b2 * v.data[i] + (one - b2) * gi * gi;
                let m_hat = b1 * m.data[i] / c_next + (one - b1) * gi / c_now;
                let v_hat = v.data[i] / c_v;
                p.data[i] = p.data[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lr: f64) -> NadamConfig {
        NadamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    #[test]
    fn single_step_by_hand() {
        let mut p: Mat<f64> = Mat::zeros(1, 1);
        let g = Mat::from_vec(1, 1, vec![1.0]);
        let mut opt = Nadam::new([&p]);
        opt.update(vec![&mut p], &[&g], &cfg(0.1)).unwrap();
        // m = 0.1, v = 0.001; m_hat = 0.9*0.1/0.19 + 0.1/0.1; v_hat = 1
        let want = -0.1 * (0.09 / 0.19 + 1.0) / (1.0 + 1e-8);
        assert!((p.data[0] - want).abs() < 1e-15, "{}", p.data[0]);
        assert!((want + 0.147_368_42).abs() < 1e-8);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p: Mat<f64> = Mat::from_vec(1, 2, vec![0.5, -2.0]);
        let mut opt = Nadam::new([&p]);
        opt.m[0].data = vec![0.2, 0.2];
        opt.v[0].data = vec![0.0, 0.0];
        let before_m = opt.m[0].clone();
        let zero = Mat::zeros(1, 2);
        let mut q = Mat::from_vec(1, 2, vec![0.5, -2.0]);
        opt.update(vec![&mut q], &[&zero], &cfg(0.1)).unwrap();
        assert_eq!(opt.m[0].data, [0.9 * before_m.data[0], 0.9 * before_m.data[1]]);
        // with fresh moments a zero gradient is a no-op
        let mut fresh = Nadam::new([&p]);
        fresh.update(vec![&mut p], &[&zero], &cfg(0.1)).unwrap();
        assert_eq!(p.data, [0.5, -2.0]);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p: Mat<f32> = Mat::zeros(1, 1);
        let mut opt = Nadam::new([&p]);
        let g = Mat::from_vec(1, 1, vec![f32::NAN]);
        let e = opt.update(vec![&mut p], &[&g], &cfg(0.1)).unwrap_err();
        assert!(matches!(e, Error::Divergence(_)));
        assert_eq!(opt.step, 0);
    }

    #[test]
    fn quadratic_converges() {
        // f(x) = 0.5 * (x - 3)^2
        let mut x: Mat<f64> = Mat::from_vec(1, 1, vec![-4.0]);
        let mut opt = Nadam::new([&x]);
        let mut steps = 0;
        let c = NadamConfig { lr: 0.05, ..cfg(0.05) };
        while (x.data[0] - 3.0).abs() > 1e-6 && steps < 5000 {
            let g = Mat::from_vec(1, 1, vec![x.data[0] - 3.0]);
            opt.update(vec![&mut x], &[&g], &c).unwrap();
            steps += 1;
        }
        assert!((x.data[0] - 3.0).abs() <= 1e-6, "x = {} after {steps} steps", x.data[0]);
    }
}
