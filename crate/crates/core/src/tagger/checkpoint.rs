//! Versioned binary checkpoint.
//!
//! Layout: magic, `u32` version, `u64` metadata length, metadata JSON, then
//! for parameters, first moments and second moments the `f32` tensors in
//! group order, then the optimizer step, the rng state and a SHA-256 of
//! everything before it. All integers and floats are little-endian.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::model::{ModelConfig, ModelParams};
use super::nadam::Nadam;
use super::TrainState;
use crate::error::{Error, Result};
use crate::features::{FeatureSpace, G2PRules, PhonemeInventory, PosTagger, Vocab};
use crate::nn::Mat;

pub const MAGIC: &[u8; 8] = b"DTAGCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub config: ModelConfig,
    pub words: Vec<String>,
    pub phoneme_inventory: String,
    pub g2p_rules: String,
    pub g2p_exceptions: String,
    pub pos_lexicon: String,
    pub epoch: usize,
    pub best_f1: f64,
    pub best_epoch: usize,
    pub stale_epochs: usize,
    pub groups: Vec<(String, usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub meta: Meta,
    /// Best-on-dev parameters.
    pub params: ModelParams<f32>,
    pub optimizer: Nadam<f32>,
    pub rng: ChaCha8Rng,
}

impl Checkpoint {
    pub fn new(space: &FeatureSpace, cfg: &ModelConfig, best: ModelParams<f32>, state: &TrainState) -> Self {
        let (rules, exceptions) = space.g2p.source();
        let groups = best
            .groups()
            .into_iter()
            .map(|(n, m)| (n.to_string(), m.rows, m.cols))
            .collect();
        Checkpoint {
            meta: Meta {
                config: cfg.clone(),
                words: space.words.items().to_vec(),
                phoneme_inventory: space.inventory.to_tsv(),
                g2p_rules: rules.to_string(),
                g2p_exceptions: exceptions.to_string(),
                pos_lexicon: space.pos_tagger.source().to_string(),
                epoch: state.epoch,
                best_f1: state.best_f1,
                best_epoch: state.best_epoch,
                stale_epochs: state.stale_epochs,
                groups,
            },
            params: best,
            optimizer: state.optimizer.clone(),
            rng: state.rng.clone(),
        }
    }

    /// Rebuilds the feature space stored with the model.
    pub fn space(&self) -> Result<FeatureSpace> {
        Checkpoint::space_from(&self.meta)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&self.meta).expect("metadata serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        let params: Vec<&Mat<f32>> = self.params.groups().into_iter().map(|(_, m)| m).collect();
        for section in [params, self.optimizer.m.iter().collect(), self.optimizer.v.iter().collect()] {
            for m in section {
                for x in &m.data {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out.extend_from_slice(&self.optimizer.step.to_le_bytes());
        out.extend_from_slice(&self.rng.get_seed());
        out.extend_from_slice(&self.rng.get_stream().to_le_bytes());
        out.extend_from_slice(&self.rng.get_word_pos().to_le_bytes());
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(bad("not a checkpoint file (bad magic)"));
        }
        if bytes.len() < MAGIC.len() + 12 + 32 {
            return Err(bad("checksum mismatch: file is truncated"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(bad("checksum mismatch: file is corrupt or truncated"));
        }
        let mut r = Reader { buf: body, pos: MAGIC.len() };
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}, expected {VERSION}")));
        }
        let meta_len = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
        let meta: Meta = serde_json::from_slice(r.take(meta_len)?).map_err(|e| Error::Checkpoint(format!("metadata: {e}")))?;
        let space = Checkpoint::space_from(&meta)?;
        let mut params: ModelParams<f32> = ModelParams::zeros(&space, &meta.config);
        let shapes: Vec<(String, usize, usize)> =
            params.groups().into_iter().map(|(n, m)| (n.to_string(), m.rows, m.cols)).collect();
        if shapes != meta.groups {
            return Err(bad("stored tensor shapes do not match the stored config"));
        }
        let mut read_section = |dst: Vec<&mut Mat<f32>>| -> Result<()> {
            for m in dst {
                for x in m.data.iter_mut() {
                    *x = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
                }
            }
            Ok(())
        };
        read_section(params.groups_mut())?;
        let mut optimizer = Nadam::new(params.groups().into_iter().map(|(_, m)| m));
        read_section(optimizer.m.iter_mut().collect())?;
        read_section(optimizer.v.iter_mut().collect())?;
        optimizer.step = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
        let stream = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
        if r.pos != body.len() {
            return Err(bad("trailing bytes after rng state"));
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        Ok(Checkpoint {
            meta,
            params,
            optimizer,
            rng,
        })
    }

    fn space_from(meta: &Meta) -> Result<FeatureSpace> {
        FeatureSpace::with_resources(
            meta.config.features.clone(),
            Vocab::new(&meta.words),
            PhonemeInventory::parse(&meta.phoneme_inventory)?,
            G2PRules::parse(&meta.g2p_rules, &meta.g2p_exceptions)?,
            PosTagger::parse(&meta.pos_lexicon)?,
        )
    }

    /// Writes through a temporary file so a crash never leaves a partial checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Errors with the list of differing fields when `expected` differs from
    /// the stored config.
    pub fn check_config(&self, expected: &ModelConfig) -> Result<()> {
        let diff = diff_configs(&self.meta.config, expected);
        if diff.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigMismatch(diff))
        }
    }

    pub fn into_state(self) -> TrainState {
        TrainState {
            params: self.params,
            optimizer: self.optimizer,
            rng: self.rng,
            epoch: self.meta.epoch,
            best_f1: self.meta.best_f1,
            best_epoch: self.meta.best_epoch,
            stale_epochs: self.meta.stale_epochs,
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Checkpoint("unexpected end of data".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
}

/// Dotted paths of the config fields whose values differ.
pub fn diff_configs(a: &ModelConfig, b: &ModelConfig) -> Vec<String> {
    fn walk(prefix: &str, a: &Value, b: &Value, out: &mut Vec<String>) {
        match (a, b) {
            (Value::Object(x), Value::Object(y)) => {
                for (k, va) in x {
                    let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    match y.get(k) {
                        Some(vb) => walk(&path, va, vb, out),
                        None => out.push(path),
                    }
                }
            }
            _ if a != b => out.push(prefix.to_string()),
            _ => {}
        }
    }
    let mut out = Vec::new();
    let va = serde_json::to_value(a).expect("config serializes");
    let vb = serde_json::to_value(b).expect("config serializes");
    walk("", &va, &vb, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Variant;
    use crate::tagger::gradcheck::tiny_config;
    use crate::tagger::{forward, Nadam};
    use rand::Rng;

    fn sample() -> (FeatureSpace, ModelConfig, Checkpoint) {
        let cfg = tiny_config(Variant::MtlIpaPos);
        let space = FeatureSpace::new(cfg.features.clone(), Vocab::new(["need", "help"])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params: ModelParams<f32> = ModelParams::init(&space, &cfg, None, &mut rng).unwrap();
        let mut state = TrainState::new(params.clone(), 9);
        state.optimizer = Nadam::new(params.groups().into_iter().map(|(_, m)| m));
        for m in state.optimizer.m.iter_mut().chain(state.optimizer.v.iter_mut()) {
            for x in m.data.iter_mut() {
                *x = rng.gen();
            }
        }
        state.optimizer.step = 17;
        let _: u64 = state.rng.gen();
        state.epoch = 3;
        state.best_f1 = 0.1 + 0.2;
        (space.clone(), cfg.clone(), Checkpoint::new(&space, &cfg, params, &state))
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (space, cfg, ck) = sample();
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.meta, ck.meta);
        assert_eq!(back.params, ck.params);
        assert_eq!(back.optimizer, ck.optimizer);
        assert_eq!(back.rng, ck.rng);
        assert_eq!(back.to_bytes(), bytes);

        let toks = ["need", "help", "Houston"];
        let pos = space.pos_tagger.tag_all(&toks);
        let prep = space.prepare::<f32, _>(&toks, Some(&pos), None).unwrap();
        let s2 = back.space().unwrap();
        let prep2 = s2.prepare::<f32, _>(&toks, Some(&pos), None).unwrap();
        let a = forward::<f32, ChaCha8Rng>(&space, &cfg, &ck.params, &prep, None).main_logits;
        let b = forward::<f32, ChaCha8Rng>(&s2, &back.meta.config, &back.params, &prep2, None).main_logits;
        assert_eq!(a, b);
    }

    #[test]
    fn truncation_and_corruption_fail_checksum() {
        let (_, _, ck) = sample();
        let bytes = ck.to_bytes();
        for cut in [bytes.len() - 1, bytes.len() / 2, 20] {
            let e = Checkpoint::from_bytes(&bytes[..cut]).unwrap_err().to_string();
            assert!(e.contains("checksum"), "{e}");
        }
        let mut flipped = bytes.clone();
        flipped[100] ^= 1;
        assert!(Checkpoint::from_bytes(&flipped).unwrap_err().to_string().contains("checksum"));
        assert!(Checkpoint::from_bytes(b"GARBAGE!").is_err());
    }

    #[test]
    fn version_mismatch() {
        let (_, _, ck) = sample();
        let mut bytes = ck.to_bytes();
        bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
        let n = bytes.len() - 32;
        let digest = Sha256::digest(&bytes[..n]);
        bytes[n..].copy_from_slice(&digest);
        let e = Checkpoint::from_bytes(&bytes).unwrap_err().to_string();
        assert!(e.contains("version 2"), "{e}");
    }

    #[test]
    fn config_mismatch_lists_fields() {
        let (_, cfg, ck) = sample();
        assert!(ck.check_config(&cfg).is_ok());
        let mut other = cfg.clone();
        other.d_hidden = 7;
        other.features.variant = Variant::Mtl;
        match ck.check_config(&other).unwrap_err() {
            Error::ConfigMismatch(fields) => {
                assert_eq!(fields, ["d_hidden", "features.variant"]);
            }
            e => panic!("{e}"),
        }
    }
}
