//! Joint-layer Bi-LSTM tagger: the first layer feeds a keyword head, the
//! second a S/B/M/E/O head, and both losses are trained together.

pub mod checkpoint;
pub mod gradcheck;
mod model;
mod nadam;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::{repair_tags, spans_from_tags, AnnotatedRecord, Tag};
use crate::error::{Error, Result};
use crate::eval::{score_spans, MatchMode, Score, Span};
use crate::features::{ContextualVectors, FeatureSpace, PreparedTokens, Vocab};
use crate::nn::{Mat, Scalar};

pub use model::{backward, forward, loss, sequence_gradient, BiLstm, Forward, ForwardCache, ModelConfig, ModelParams, N_AUX, N_MAIN};
pub use nadam::{Nadam, NadamConfig};

/// One training or evaluation sequence resolved against a feature space.
#[derive(Debug, Clone)]
pub struct Example<F> {
    pub id: String,
    pub prep: PreparedTokens<F>,
    pub tags: Vec<Tag>,
    pub spans: Vec<Span>,
}

/// Lowercased word vocabulary of `records` in first-seen order.
pub fn build_vocab(records: &[AnnotatedRecord]) -> Vocab {
    Vocab::new(records.iter().flat_map(|r| r.tokens.iter().map(|t| FeatureSpace::word_key(t))))
}

/// Resolves annotated records. Records without POS tags are tagged with the
/// space's fallback tagger when the variant needs them.
pub fn prepare_examples<F: Scalar>(
    records: &[AnnotatedRecord],
    space: &FeatureSpace,
    ctx: Option<&ContextualVectors>,
) -> Result<Vec<Example<F>>> {
    let v = space.config.variant;
    if v.uses_ctx() {
        let c = ctx.ok_or_else(|| Error::MissingResource {
            variant: v.to_string(),
            what: "contextual vectors file".into(),
        })?;
        if c.dim != space.config.d_ctx {
            return Err(Error::Config(format!(
                "contextual vectors have dimension {}, config d_ctx is {}",
                c.dim, space.config.d_ctx
            )));
        }
    }
    records
        .iter()
        .map(|r| {
            let fallback;
            let pos = match (&r.pos, v.uses_ipa_pos()) {
                (Some(p), _) => Some(p.as_slice()),
                (None, true) => {
                    fallback = space.pos_tagger.tag_all(&r.tokens);
                    Some(fallback.as_slice())
                }
                (None, false) => None,
            };
            let c = match ctx {
                Some(c) if v.uses_ctx() => Some(c.get(&r.id, r.tokens.len())?),
                _ => None,
            };
            let prep = space
                .prepare(&r.tokens, pos, c)
                .map_err(|e| match e {
                    Error::Data(m) => Error::Data(format!("record {}: {m}", r.id)),
                    other => other,
                })?;
            Ok(Example {
                id: r.id.clone(),
                prep,
                tags: r.tags.clone(),
                spans: r.spans.iter().map(|s| s.range()).collect(),
            })
        })
        .collect()
}

/// Per-token argmax (lowest index on ties), repair, then span extraction.
pub fn decode<F: Scalar>(main_logits: &Mat<F>) -> (Vec<Tag>, Vec<Span>) {
    let raw: Vec<Tag> = (0..main_logits.rows)
        .map(|t| {
            let row = main_logits.row(t);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            Tag::from_index(best)
        })
        .collect();
    let tags = repair_tags(&raw);
    let spans = spans_from_tags(&tags).expect("repaired tags are well-formed");
    (tags, spans)
}

pub fn predict<F: Scalar>(space: &FeatureSpace, cfg: &ModelConfig, p: &ModelParams<F>, prep: &PreparedTokens<F>) -> Vec<Span> {
    if prep.is_empty() {
        return Vec::new();
    }
    decode(&forward::<F, ChaCha8Rng>(space, cfg, p, prep, None).main_logits).1
}

/// Predicted spans keyed by example id, computed in parallel.
pub fn predict_all<F: Scalar>(
    space: &FeatureSpace,
    cfg: &ModelConfig,
    p: &ModelParams<F>,
    examples: &[Example<F>],
) -> BTreeMap<String, Vec<Span>> {
    examples
        .par_iter()
        .map(|e| (e.id.clone(), predict(space, cfg, p, &e.prep)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn evaluate<F: Scalar>(
    space: &FeatureSpace,
    cfg: &ModelConfig,
    p: &ModelParams<F>,
    examples: &[Example<F>],
) -> Result<Score> {
    let pred = predict_all(space, cfg, p, examples);
    let gold: BTreeMap<String, Vec<Span>> = examples.iter().map(|e| (e.id.clone(), e.spans.clone())).collect();
    Ok(score_spans("dev", &pred, &gold, MatchMode::ExactSpan)?.score)
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_precision: f64,
    pub dev_recall: f64,
    pub dev_f1: f64,
    pub seconds: f64,
}

/// Everything needed to continue or reproduce a run.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: ModelParams<f32>,
    pub optimizer: Nadam<f32>,
    pub rng: ChaCha8Rng,
    pub epoch: usize,
    pub best_f1: f64,
    pub best_epoch: usize,
    /// Epochs since the last dev improvement.
    pub stale_epochs: usize,
}

impl TrainState {
    pub fn new(params: ModelParams<f32>, seed: u64) -> Self {
        let optimizer = Nadam::new(params.groups().into_iter().map(|(_, m)| m));
        TrainState {
            params,
            optimizer,
            rng: ChaCha8Rng::seed_from_u64(seed),
            epoch: 0,
            best_f1: -1.0,
            best_epoch: 0,
            stale_epochs: 0,
        }
    }
}

pub struct TrainOutcome {
    /// Parameters of the best epoch on the dev set.
    pub best: ModelParams<f32>,
    pub state: TrainState,
    pub log: Vec<EpochLog>,
}

fn nadam_config(cfg: &ModelConfig) -> NadamConfig {
    NadamConfig {
        lr: cfg.lr,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        eps: cfg.eps,
    }
}

/// Mean loss and mean gradient over a batch. Sequences are processed in
/// parallel, each with its own dropout stream, and summed in index order.
fn batch_gradient(
    space: &FeatureSpace,
    cfg: &ModelConfig,
    p: &ModelParams<f32>,
    batch: &[&Example<f32>],
    seeds: &[u64],
) -> (f64, ModelParams<f32>) {
    let parts: Vec<(f32, ModelParams<f32>)> = batch
        .par_iter()
        .zip(seeds)
        .map(|(ex, &seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sequence_gradient(space, cfg, p, &ex.prep, &ex.tags, Some(&mut rng))
        })
        .collect();
    let mut iter = parts.into_iter();
    let (l0, mut g) = iter.next().expect("nonempty batch");
    let mut total = l0 as f64;
    for (l, gi) in iter {
        total += l as f64;
        g.add_assign(&gi);
    }
    g.scale(1.0 / batch.len() as f32);
    (total, g)
}

/// Epoch loop with seeded shuffling, dev F1 after every epoch, best-epoch
/// retention and early stopping once `patience` epochs pass without a dev
/// improvement (0 disables early stopping).
pub fn train(
    space: &FeatureSpace,
    cfg: &ModelConfig,
    train_set: &[Example<f32>],
    dev_set: &[Example<f32>],
    mut state: TrainState,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let train_set: Vec<&Example<f32>> = train_set.iter().filter(|e| !e.prep.is_empty()).collect();
    if train_set.is_empty() {
        return Err(Error::Data("training corpus is empty".into()));
    }
    if dev_set.is_empty() {
        return Err(Error::Data("validation corpus is empty".into()));
    }
    let opt_cfg = nadam_config(cfg);
    let mut best = state.params.clone();
    let mut log = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    while state.epoch < cfg.epochs {
        let started = Instant::now();
        state.epoch += 1;
        order.sort_unstable();
        order.shuffle(&mut state.rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example<f32>> = chunk.iter().map(|&i| train_set[i]).collect();
            let seeds: Vec<u64> = (0..batch.len()).map(|_| state.rng.gen()).collect();
            let (l, g) = batch_gradient(space, cfg, &state.params, &batch, &seeds);
            if !l.is_finite() {
                return Err(Error::Divergence(format!("loss is {l} in epoch {}", state.epoch)));
            }
            loss_sum += l;
            let grads: Vec<&Mat<f32>> = g.groups().into_iter().map(|(_, m)| m).collect();
            state.optimizer.update(state.params.groups_mut(), &grads, &opt_cfg)?;
            if !state.params.all_finite() {
                return Err(Error::Divergence(format!("non-finite parameters after step {}", state.optimizer.step)));
            }
        }
        let dev = evaluate(space, cfg, &state.params, dev_set)?;
        let entry = EpochLog {
            epoch: state.epoch,
            train_loss: loss_sum / train_set.len() as f64,
            dev_precision: dev.precision,
            dev_recall: dev.recall,
            dev_f1: dev.f1,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {} loss {:.4} dev P {:.4} R {:.4} F1 {:.4}",
            entry.epoch,
            entry.train_loss,
            entry.dev_precision,
            entry.dev_recall,
            entry.dev_f1
        );
        on_epoch(&entry);
        log.push(entry);
        if dev.f1 > state.best_f1 {
            state.best_f1 = dev.f1;
            state.best_epoch = state.epoch;
            state.stale_epochs = 0;
            best = state.params.clone();
        } else {
            state.stale_epochs += 1;
            if cfg.patience > 0 && state.stale_epochs >= cfg.patience {
                log::info!("no dev improvement for {} epochs, stopping", state.stale_epochs);
                break;
            }
        }
    }
    Ok(TrainOutcome { best, state, log })
}
