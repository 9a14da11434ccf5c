use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::annotate::Tag;
use crate::error::{Error, Result};
use crate::features::{encode, encode_backward, EmbeddingTable, EncodeCache, FeatureConfig, FeatureParams, FeatureSpace, PreparedTokens};
use crate::nn::loss::cross_entropy;
use crate::nn::lstm::{lstm_backward, lstm_forward, LstmCache, LstmParams};
use crate::nn::{dropout_mask, hadamard, Affine, Mat, Scalar};

pub const N_MAIN: usize = 5;
pub const N_AUX: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub features: FeatureConfig,
    /// Hidden units per direction.
    pub d_hidden: usize,
    /// Weight of the keyword (auxiliary) loss.
    pub aux_weight: f64,
    /// Dropout on the inputs of both Bi-LSTM layers.
    pub dropout: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            features: FeatureConfig::default(),
            d_hidden: 300,
            aux_weight: 0.5,
            dropout: 0.5,
            lr: 0.0015,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 7,
            epochs: 30,
            batch_size: 16,
            patience: 5,
        }
    }
}

impl ModelConfig {
    pub fn d_input(&self) -> usize {
        self.features.input_dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        let mut bad = Vec::new();
        if self.d_hidden == 0 {
            bad.push("d_hidden must be positive".to_string());
        }
        if !(0.0..=1.0).contains(&self.aux_weight) {
            bad.push(format!("aux_weight {} outside [0, 1]", self.aux_weight));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            bad.push(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            bad.push(format!("lr {} must be positive", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                bad.push(format!("{name} {b} outside [0, 1)"));
            }
        }
        if !(self.eps > 0.0) {
            bad.push("eps must be positive".into());
        }
        if self.epochs == 0 || self.batch_size == 0 {
            bad.push("epochs and batch_size must be positive".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstm<F> {
    pub fwd: LstmParams<F>,
    pub bwd: LstmParams<F>,
}

impl<F: Scalar> BiLstm<F> {
    fn zeros(d_in: usize, h: usize) -> Self {
        BiLstm {
            fwd: LstmParams::zeros(d_in, h),
            bwd: LstmParams::zeros(d_in, h),
        }
    }

    fn init<R: Rng>(d_in: usize, h: usize, rng: &mut R) -> Self {
        BiLstm {
            fwd: LstmParams::init(d_in, h, rng),
            bwd: LstmParams::init(d_in, h, rng),
        }
    }
}

struct BiCache<F> {
    fwd: LstmCache<F>,
    bwd: LstmCache<F>,
}

fn bilstm_forward<F: Scalar>(p: &BiLstm<F>, x: &Mat<F>) -> (Mat<F>, BiCache<F>) {
    let (hf, cf) = lstm_forward(&p.fwd, x, false);
    let (hb, cb) = lstm_forward(&p.bwd, x, true);
    (Mat::hcat(&[&hf, &hb]), BiCache { fwd: cf, bwd: cb })
}

fn bilstm_backward<F: Scalar>(p: &BiLstm<F>, x: &Mat<F>, c: &BiCache<F>, dh: &Mat<F>, g: &mut BiLstm<F>) -> Mat<F> {
    let h = p.fwd.hidden();
    let mut dx = lstm_backward(&p.fwd, x, &c.fwd, &dh.columns(0, h), &mut g.fwd);
    dx.add_assign(&lstm_backward(&p.bwd, x, &c.bwd, &dh.columns(h, h), &mut g.bwd));
    dx
}

/// Every trainable tensor of the tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    pub features: FeatureParams<F>,
    pub layer1: BiLstm<F>,
    pub layer2: BiLstm<F>,
    pub aux: Affine<F>,
    pub main: Affine<F>,
}

impl<F: Scalar> ModelParams<F> {
    pub fn zeros(space: &FeatureSpace, cfg: &ModelConfig) -> Self {
        let (d, h) = (cfg.d_input(), cfg.d_hidden);
        ModelParams {
            features: FeatureParams::zeros(space),
            layer1: BiLstm::zeros(d, h),
            layer2: BiLstm::zeros(2 * h, h),
            aux: Affine::zeros(2 * h, N_AUX),
            main: Affine::zeros(2 * h, N_MAIN),
        }
    }

    pub fn init<R: Rng>(
        space: &FeatureSpace,
        cfg: &ModelConfig,
        pretrained: Option<&EmbeddingTable<f32>>,
        rng: &mut R,
    ) -> Result<Self> {
        let (d, h) = (cfg.d_input(), cfg.d_hidden);
        Ok(ModelParams {
            features: FeatureParams::init(space, pretrained, rng)?,
            layer1: BiLstm::init(d, h, rng),
            layer2: BiLstm::init(2 * h, h, rng),
            aux: Affine::init(2 * h, N_AUX, rng),
            main: Affine::init(2 * h, N_MAIN, rng),
        })
    }

    /// Named parameter tensors in a fixed order.
    pub fn groups(&self) -> Vec<(&'static str, &Mat<F>)> {
        let f = &self.features;
        let mut out = vec![("word_emb", &f.word)];
        if let (Some(pos), Some(ipa), Some(cnn)) = (&f.pos, &f.ipa, &f.cnn) {
            out.extend([("pos_emb", pos), ("ipa_emb", ipa), ("cnn.w", &cnn.w), ("cnn.b", &cnn.b)]);
        }
        for (name, l) in [
            (["l1f.w_x", "l1f.w_h", "l1f.b"], &self.layer1.fwd),
            (["l1b.w_x", "l1b.w_h", "l1b.b"], &self.layer1.bwd),
            (["l2f.w_x", "l2f.w_h", "l2f.b"], &self.layer2.fwd),
            (["l2b.w_x", "l2b.w_h", "l2b.b"], &self.layer2.bwd),
        ] {
            out.extend([(name[0], &l.w_x), (name[1], &l.w_h), (name[2], &l.b)]);
        }
        out.extend([("aux.w", &self.aux.w), ("aux.b", &self.aux.b), ("main.w", &self.main.w), ("main.b", &self.main.b)]);
        out
    }

    /// Mutable view in the same order as [`groups`](Self::groups).
    pub fn groups_mut(&mut self) -> Vec<&mut Mat<F>> {
        let f = &mut self.features;
        let mut out = vec![&mut f.word];
        if let (Some(pos), Some(ipa), Some(cnn)) = (f.pos.as_mut(), f.ipa.as_mut(), f.cnn.as_mut()) {
            out.extend([pos, ipa, &mut cnn.w, &mut cnn.b]);
        }
        for l in [&mut self.layer1.fwd, &mut self.layer1.bwd, &mut self.layer2.fwd, &mut self.layer2.bwd] {
            out.extend([&mut l.w_x, &mut l.w_h, &mut l.b]);
        }
        out.extend([&mut self.aux.w, &mut self.aux.b, &mut self.main.w, &mut self.main.b]);
        out
    }

    pub fn add_assign(&mut self, other: &ModelParams<F>) {
        for (a, (_, b)) in self.groups_mut().into_iter().zip(other.groups()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, k: F) {
        for a in self.groups_mut() {
            a.scale(k);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.groups().iter().all(|(_, m)| m.all_finite())
    }

    pub fn cast<G: Scalar>(&self, space: &FeatureSpace, cfg: &ModelConfig) -> ModelParams<G> {
        let mut out = ModelParams::zeros(space, cfg);
        for (dst, (_, src)) in out.groups_mut().into_iter().zip(self.groups()) {
            *dst = src.cast();
        }
        out
    }
}

/// Intermediates kept for the backward pass.
pub struct ForwardCache<F> {
    x: Mat<F>,
    enc: EncodeCache<F>,
    mask1: Option<Mat<F>>,
    x_in: Mat<F>,
    c1: BiCache<F>,
    h1: Mat<F>,
    mask2: Option<Mat<F>>,
    h1_in: Mat<F>,
    c2: BiCache<F>,
    h2: Mat<F>,
}

pub struct Forward<F> {
    pub aux_logits: Mat<F>,
    pub main_logits: Mat<F>,
    pub cache: ForwardCache<F>,
}

/// Runs the model on one sequence. Passing `dropout` switches on training
/// mode with masks drawn from the given rng.
pub fn forward<F: Scalar, R: Rng>(
    space: &FeatureSpace,
    cfg: &ModelConfig,
    p: &ModelParams<F>,
    prep: &PreparedTokens<F>,
    dropout: Option<&mut R>,
) -> Forward<F> {
    let (x, enc) = encode(space, &p.features, prep);
    assert_eq!(x.cols, p.layer1.fwd.input_dim(), "feature width does not match the model");
    let (mask1, mask2) = match dropout {
        Some(rng) if cfg.dropout > 0.0 => {
            let m1 = dropout_mask(x.rows, x.cols, cfg.dropout, rng);
            let m2 = dropout_mask(x.rows, 2 * cfg.d_hidden, cfg.dropout, rng);
            (Some(m1), Some(m2))
        }
        _ => (None, None),
    };
    let x_in = mask1.as_ref().map_or_else(|| x.clone(), |m| hadamard(&x, m));
    let (h1, c1) = bilstm_forward(&p.layer1, &x_in);
    let aux_logits = p.aux.forward(&h1);
    let h1_in = mask2.as_ref().map_or_else(|| h1.clone(), |m| hadamard(&h1, m));
    let (h2, c2) = bilstm_forward(&p.layer2, &h1_in);
    let main_logits = p.main.forward(&h2);
    Forward {
        aux_logits,
        main_logits,
        cache: ForwardCache {
            x,
            enc,
            mask1,
            x_in,
            c1,
            h1,
            mask2,
            h1_in,
            c2,
            h2,
        },
    }
}

/// Main cross-entropy plus `aux_weight` times the keyword cross-entropy,
/// both averaged over tokens. Returns the loss and the logit gradients.
pub fn loss<F: Scalar>(aux_logits: &Mat<F>, main_logits: &Mat<F>, tags: &[Tag], aux_weight: f64) -> (F, Mat<F>, Mat<F>) {
    let main_y: Vec<usize> = tags.iter().map(|t| t.index()).collect();
    let aux_y: Vec<usize> = tags.iter().map(|t| t.is_keyword() as usize).collect();
    let (lm, dm) = cross_entropy(main_logits, &main_y, F::one());
    let w = F::c(aux_weight);
    let (la, da) = cross_entropy(aux_logits, &aux_y, w);
    (lm + w * la, da, dm)
}

/// Exact gradients of [`loss`] for one sequence, accumulated into `grad`.
pub fn backward<F: Scalar>(
    space: &FeatureSpace,
    p: &ModelParams<F>,
    prep: &PreparedTokens<F>,
    cache: &ForwardCache<F>,
    d_aux: &Mat<F>,
    d_main: &Mat<F>,
    grad: &mut ModelParams<F>,
) {
    let dh2 = p.main.backward(&cache.h2, d_main, &mut grad.main);
    let dh1_in = bilstm_backward(&p.layer2, &cache.h1_in, &cache.c2, &dh2, &mut grad.layer2);
    let mut dh1 = match &cache.mask2 {
        Some(m) => hadamard(&dh1_in, m),
        None => dh1_in,
    };
    dh1.add_assign(&p.aux.backward(&cache.h1, d_aux, &mut grad.aux));
    let dx_in = bilstm_backward(&p.layer1, &cache.x_in, &cache.c1, &dh1, &mut grad.layer1);
    let dx = match &cache.mask1 {
        Some(m) => hadamard(&dx_in, m),
        None => dx_in,
    };
    debug_assert_eq!(dx.cols, cache.x.cols);
    encode_backward(space, &p.features, prep, &cache.enc, &dx, &mut grad.features);
}

/// Loss and gradient for a single labeled sequence.
pub fn sequence_gradient<F: Scalar, R: Rng>(
    space: &FeatureSpace,
    cfg: &ModelConfig,
    p: &ModelParams<F>,
    prep: &PreparedTokens<F>,
    tags: &[Tag],
    dropout: Option<&mut R>,
) -> (F, ModelParams<F>) {
    let fwd = forward(space, cfg, p, prep, dropout);
    let (l, da, dm) = loss(&fwd.aux_logits, &fwd.main_logits, tags, cfg.aux_weight);
    let mut g = ModelParams::zeros(space, cfg);
    backward(space, p, prep, &fwd.cache, &da, &dm, &mut g);
    (l, g)
}
