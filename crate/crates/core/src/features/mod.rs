//! Per-token input vectors for the tagger variants.
//!
//! A token vector is laid out as `[word block | contextual | POS | phonetic CNN]`,
//! where the word block is a three-word window of embeddings for variants
//! without contextual vectors and the plain embedding otherwise.

pub mod context;
pub mod embedding;
pub mod phonetics;
pub mod pos;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::conv::{conv_max_backward, conv_max_forward, pad_to_kernel, ConvCache, ConvParams};
use crate::nn::{Mat, Scalar};

pub use context::ContextualVectors;
pub use embedding::{load_word_embeddings, window_backward, window_concat, EmbeddingTable, LoadedEmbeddings, Vocab};
pub use phonetics::{grapheme_to_phoneme, G2PRules, PhonemeInventory};
pub use pos::{PosTagger, TAGSET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Mtl,
    MtlCtx,
    MtlIpaPos,
    MtlCtxIpaPos,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Mtl, Variant::MtlCtx, Variant::MtlIpaPos, Variant::MtlCtxIpaPos];

    pub fn uses_ctx(self) -> bool {
        matches!(self, Variant::MtlCtx | Variant::MtlCtxIpaPos)
    }

    pub fn uses_ipa_pos(self) -> bool {
        matches!(self, Variant::MtlIpaPos | Variant::MtlCtxIpaPos)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Mtl => "mtl",
            Variant::MtlCtx => "mtl_ctx",
            Variant::MtlIpaPos => "mtl_ipa_pos",
            Variant::MtlCtxIpaPos => "mtl_ctx_ipa_pos",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub variant: Variant,
    pub d_word: usize,
    pub d_pos: usize,
    pub d_ipa: usize,
    pub n_filters: usize,
    pub kernel: usize,
    pub d_ctx: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            variant: Variant::Mtl,
            d_word: 100,
            d_pos: 64,
            d_ipa: 22,
            n_filters: 128,
            kernel: 3,
            d_ctx: 1024,
        }
    }
}

impl FeatureConfig {
    fn word_block(&self) -> usize {
        if self.variant.uses_ctx() {
            self.d_word
        } else {
            3 * self.d_word
        }
    }

    /// Length of every token vector.
    pub fn input_dim(&self) -> usize {
        let mut d = self.word_block();
        if self.variant.uses_ctx() {
            d += self.d_ctx;
        }
        if self.variant.uses_ipa_pos() {
            d += self.d_pos + self.n_filters;
        }
        d
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.d_word == 0 {
            bad.push("d_word");
        }
        if self.variant.uses_ctx() && self.d_ctx == 0 {
            bad.push("d_ctx");
        }
        if self.variant.uses_ipa_pos() {
            for (name, v) in [("d_pos", self.d_pos), ("d_ipa", self.d_ipa), ("n_filters", self.n_filters), ("kernel", self.kernel)] {
                if v == 0 {
                    bad.push(name);
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("must be positive: {}", bad.join(", "))))
        }
    }
}

/// Frozen lookup resources shared by every sequence.
#[derive(Debug, Clone)]
pub struct FeatureSpace {
    pub config: FeatureConfig,
    pub words: Vocab,
    pub pos_tags: Vocab,
    pub inventory: PhonemeInventory,
    pub g2p: G2PRules,
    pub pos_tagger: PosTagger,
}

impl FeatureSpace {
    pub fn new(config: FeatureConfig, words: Vocab) -> Result<Self> {
        Self::with_resources(config, words, PhonemeInventory::bundled(), G2PRules::bundled(), PosTagger::bundled())
    }

    pub fn with_resources(
        config: FeatureConfig,
        words: Vocab,
        inventory: PhonemeInventory,
        g2p: G2PRules,
        pos_tagger: PosTagger,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(s) = g2p.symbols().into_iter().find(|s| inventory.index_of(s).is_none()) {
            return Err(Error::Data(format!("g2p emits phoneme {s:?} absent from the inventory")));
        }
        Ok(FeatureSpace {
            config,
            words,
            pos_tags: Vocab::new(TAGSET),
            inventory,
            g2p,
            pos_tagger,
        })
    }

    pub fn word_key(token: &str) -> String {
        token.to_lowercase()
    }

    pub fn cnn_channels(&self) -> usize {
        self.config.d_ipa + self.inventory.feature_dim()
    }

    /// Phoneme inventory rows for `word`; symbols outside the inventory are skipped.
    pub fn phonemes(&self, word: &str) -> Vec<usize> {
        grapheme_to_phoneme(word, &self.g2p)
            .iter()
            .filter_map(|p| self.inventory.index_of(p))
            .collect()
    }

    /// Resolves tokens to table rows. `pos` is required for POS variants and
    /// `ctx` for contextual ones.
    pub fn prepare<F: Scalar, S: AsRef<str>>(
        &self,
        tokens: &[S],
        pos: Option<&[String]>,
        ctx: Option<&[Vec<f32>]>,
    ) -> Result<PreparedTokens<F>> {
        let v = self.config.variant;
        let words = tokens.iter().map(|t| self.words.id(&Self::word_key(t.as_ref()))).collect();
        let (pos_rows, phonemes) = if v.uses_ipa_pos() {
            let pos = pos.ok_or_else(|| Error::MissingResource {
                variant: v.to_string(),
                what: "POS tags".into(),
            })?;
            if pos.len() != tokens.len() {
                return Err(Error::Data(format!("{} POS tags for {} tokens", pos.len(), tokens.len())));
            }
            let rows = pos.iter().map(|p| self.pos_tags.id(p)).collect();
            let ph = tokens.iter().map(|t| self.phonemes(t.as_ref())).collect();
            (Some(rows), Some(ph))
        } else {
            (None, None)
        };
        let ctx = if v.uses_ctx() {
            let c = ctx.ok_or_else(|| Error::MissingResource {
                variant: v.to_string(),
                what: "contextual vectors".into(),
            })?;
            if c.len() != tokens.len() {
                return Err(Error::Data(format!("{} contextual vectors for {} tokens", c.len(), tokens.len())));
            }
            let mut m = Mat::zeros(c.len(), self.config.d_ctx);
            for (t, row) in c.iter().enumerate() {
                if row.len() != self.config.d_ctx {
                    return Err(Error::Data(format!(
                        "contextual vector length {}, expected {}",
                        row.len(),
                        self.config.d_ctx
                    )));
                }
                for (dst, &x) in m.row_mut(t).iter_mut().zip(row) {
                    *dst = F::c(x as f64);
                }
            }
            Some(m)
        } else {
            None
        };
        Ok(PreparedTokens {
            words,
            pos: pos_rows,
            phonemes,
            ctx,
        })
    }
}

/// Token rows resolved against a [`FeatureSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTokens<F> {
    pub words: Vec<usize>,
    pub pos: Option<Vec<usize>>,
    pub phonemes: Option<Vec<Vec<usize>>>,
    pub ctx: Option<Mat<F>>,
}

impl<F> PreparedTokens<F> {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Trainable feature tables.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureParams<F> {
    pub word: Mat<F>,
    pub pos: Option<Mat<F>>,
    pub ipa: Option<Mat<F>>,
    pub cnn: Option<ConvParams<F>>,
}

impl<F: Scalar> FeatureParams<F> {
    pub fn zeros(space: &FeatureSpace) -> Self {
        let c = &space.config;
        let ipa_pos = c.variant.uses_ipa_pos();
        FeatureParams {
            word: Mat::zeros(space.words.rows(), c.d_word),
            pos: ipa_pos.then(|| Mat::zeros(space.pos_tags.rows(), c.d_pos)),
            ipa: ipa_pos.then(|| Mat::zeros(space.inventory.len() + 1, c.d_ipa)),
            cnn: ipa_pos.then(|| ConvParams::zeros(space.cnn_channels(), c.n_filters, c.kernel)),
        }
    }

    /// Word rows come from `pretrained` when given (absent words take its
    /// unknown vector), otherwise uniform in `[-0.1, 0.1]`.
    pub fn init<R: Rng>(space: &FeatureSpace, pretrained: Option<&EmbeddingTable<f32>>, rng: &mut R) -> Result<Self> {
        let c = &space.config;
        let word = match pretrained {
            Some(t) => {
                if t.dim() != c.d_word {
                    return Err(Error::Config(format!(
                        "embedding file has dimension {}, config d_word is {}",
                        t.dim(),
                        c.d_word
                    )));
                }
                t.project(space.words.items()).vectors.cast()
            }
            None => Mat::uniform(space.words.rows(), c.d_word, 0.1, rng),
        };
        let ipa_pos = c.variant.uses_ipa_pos();
        Ok(FeatureParams {
            word,
            pos: ipa_pos.then(|| Mat::uniform(space.pos_tags.rows(), c.d_pos, 0.1, rng)),
            ipa: ipa_pos.then(|| Mat::uniform(space.inventory.len() + 1, c.d_ipa, 0.1, rng)),
            cnn: ipa_pos.then(|| ConvParams::init(space.cnn_channels(), c.n_filters, c.kernel, rng)),
        })
    }
}

/// Builds the CNN input for one word: per phoneme `[ipa embedding | phonological features]`,
/// zero-padded to the kernel width.
pub fn phonetic_input<F: Scalar>(space: &FeatureSpace, ipa: &Mat<F>, phonemes: &[usize], kernel: usize) -> Mat<F> {
    let d_ipa = ipa.cols;
    let ch = d_ipa + space.inventory.feature_dim();
    let mut x = Mat::zeros(phonemes.len(), ch);
    for (r, &p) in phonemes.iter().enumerate() {
        let row = x.row_mut(r);
        row[..d_ipa].copy_from_slice(ipa.row(p + 1));
        for (dst, &f) in row[d_ipa..].iter_mut().zip(space.inventory.features(p)) {
            *dst = F::c(f);
        }
    }
    pad_to_kernel(x, kernel)
}

/// Character-level phonetic encoding of a single word: G2P, then the
/// convolution with ReLU and global max pooling.
pub fn encode_phonetics<F: Scalar>(word: &str, space: &FeatureSpace, ipa: &Mat<F>, cnn: &ConvParams<F>) -> Vec<F> {
    let x = phonetic_input(space, ipa, &space.phonemes(word), cnn.kernel);
    conv_max_forward(cnn, &x).0
}

#[derive(Debug, Clone)]
pub struct EncodeCache<F> {
    cnn: Vec<(Mat<F>, ConvCache)>,
}

/// Assembles the `T x input_dim` feature matrix.
pub fn encode<F: Scalar>(space: &FeatureSpace, params: &FeatureParams<F>, prep: &PreparedTokens<F>) -> (Mat<F>, EncodeCache<F>) {
    let c = &space.config;
    let t_len = prep.len();
    let mut e = Mat::zeros(t_len, c.d_word);
    for (t, &w) in prep.words.iter().enumerate() {
        e.row_mut(t).copy_from_slice(params.word.row(w));
    }
    let word_block = if c.variant.uses_ctx() { e } else { window_concat(&e) };
    let mut parts = vec![word_block];
    if let Some(ctx) = &prep.ctx {
        parts.push(ctx.clone());
    }
    let mut cnn_cache = Vec::new();
    if c.variant.uses_ipa_pos() {
        let (pos_t, ipa_t, cnn) = (
            params.pos.as_ref().expect("POS table"),
            params.ipa.as_ref().expect("IPA table"),
            params.cnn.as_ref().expect("CNN params"),
        );
        let pos_rows = prep.pos.as_ref().expect("prepared POS rows");
        let mut pm = Mat::zeros(t_len, c.d_pos);
        for (t, &p) in pos_rows.iter().enumerate() {
            pm.row_mut(t).copy_from_slice(pos_t.row(p));
        }
        parts.push(pm);
        let mut cm = Mat::zeros(t_len, cnn.filters());
        for (t, ph) in prep.phonemes.as_ref().expect("prepared phonemes").iter().enumerate() {
            let x = phonetic_input(space, ipa_t, ph, cnn.kernel);
            let (out, cache) = conv_max_forward(cnn, &x);
            cm.row_mut(t).copy_from_slice(&out);
            cnn_cache.push((x, cache));
        }
        parts.push(cm);
    }
    let refs: Vec<&Mat<F>> = parts.iter().collect();
    let out = Mat::hcat(&refs);
    assert_eq!(out.cols, c.input_dim(), "feature dimension formula violated");
    (out, EncodeCache { cnn: cnn_cache })
}

/// Accumulates gradients of the trainable tables given `d` (`T x input_dim`).
pub fn encode_backward<F: Scalar>(
    space: &FeatureSpace,
    params: &FeatureParams<F>,
    prep: &PreparedTokens<F>,
    cache: &EncodeCache<F>,
    d: &Mat<F>,
    grad: &mut FeatureParams<F>,
) {
    let c = &space.config;
    let wb = c.word_block();
    let d_word_rows = if c.variant.uses_ctx() {
        d.columns(0, wb)
    } else {
        window_backward(&d.columns(0, wb), c.d_word)
    };
    for (t, &w) in prep.words.iter().enumerate() {
        for (g, &v) in grad.word.row_mut(w).iter_mut().zip(d_word_rows.row(t)) {
            *g = *g + v;
        }
    }
    if !c.variant.uses_ipa_pos() {
        return;
    }
    let mut off = wb + if c.variant.uses_ctx() { c.d_ctx } else { 0 };
    let gpos = grad.pos.as_mut().expect("POS grad");
    for (t, &p) in prep.pos.as_ref().expect("prepared POS rows").iter().enumerate() {
        for (g, &v) in gpos.row_mut(p).iter_mut().zip(&d.row(t)[off..off + c.d_pos]) {
            *g = *g + v;
        }
    }
    off += c.d_pos;
    let cnn = params.cnn.as_ref().expect("CNN params");
    let phonemes = prep.phonemes.as_ref().expect("prepared phonemes");
    for (t, (x, cc)) in cache.cnn.iter().enumerate() {
        let d_out = &d.row(t)[off..off + cnn.filters()];
        let dx = conv_max_backward(cnn, x, cc, d_out, grad.cnn.as_mut().expect("CNN grad"));
        let gipa = grad.ipa.as_mut().expect("IPA grad");
        for (r, &p) in phonemes[t].iter().enumerate() {
            for (g, &v) in gipa.row_mut(p + 1).iter_mut().zip(&dx.row(r)[..c.d_ipa]) {
                *g = *g + v;
            }
        }
    }
}
