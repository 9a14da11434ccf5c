//! Central finite-difference verification of the full tagger gradient.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{forward, loss, sequence_gradient, ModelConfig, ModelParams};
use crate::annotate::Tag;
use crate::features::{FeatureConfig, FeatureSpace, PreparedTokens, Variant, Vocab};
use crate::nn::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCheck {
    pub variant: Variant,
    pub group: &'static str,
    pub size: usize,
    /// `|analytic - numeric| / (|analytic| + |numeric|)` over the whole tensor.
    pub rel_error: f64,
}

/// A config with every tunable dimension at most 5.
pub fn tiny_config(variant: Variant) -> ModelConfig {
    let features = FeatureConfig {
        variant,
        d_word: 3,
        d_pos: 2,
        d_ipa: 2,
        n_filters: 3,
        kernel: 3,
        d_ctx: 2,
    };
    ModelConfig {
        features,
        d_hidden: 3,
        dropout: 0.3,
        aux_weight: 0.5,
        ..Default::default()
    }
}

/// Checks every parameter group of `variant` on a four-token sequence with
/// dropout active (masks are replayed from a fixed seed).
pub fn check_variant(variant: Variant, seed: u64) -> Vec<GroupCheck> {
    let cfg = tiny_config(variant);
    let space = FeatureSpace::new(cfg.features.clone(), Vocab::new(["need", "help", "houston"])).expect("tiny space");
    let tokens = ["need", "help", "in", "Houston"];
    let tags = [Tag::B, Tag::E, Tag::O, Tag::S];
    let pos = space.pos_tagger.tag_all(&tokens);
    let ctx: Vec<Vec<f32>> = (0..tokens.len()).map(|t| vec![0.25 * t as f32 - 0.5, 0.75]).collect();
    let prep: PreparedTokens<f64> = space.prepare(&tokens, Some(&pos), Some(&ctx)).expect("tiny prep");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: ModelParams<f64> = ModelParams::zeros(&space, &cfg);
    for m in p.groups_mut() {
        *m = Mat::uniform(m.rows, m.cols, 0.5, &mut rng);
    }
    let mask_seed = seed ^ 0x5eed;
    let objective = |p: &ModelParams<f64>| {
        let mut r = ChaCha8Rng::seed_from_u64(mask_seed);
        let f = forward(&space, &cfg, p, &prep, Some(&mut r));
        loss(&f.aux_logits, &f.main_logits, &tags, cfg.aux_weight).0
    };
    let mut r = ChaCha8Rng::seed_from_u64(mask_seed);
    let (_, grad) = sequence_gradient(&space, &cfg, &p, &prep, &tags, Some(&mut r));

    let h = 1e-6;
    let names: Vec<&'static str> = p.groups().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Vec<f64>> = grad.groups().into_iter().map(|(_, m)| m.data.clone()).collect();
    let mut out = Vec::new();
    for (k, name) in names.into_iter().enumerate() {
        let n = analytic[k].len();
        let (mut diff, mut norm_a, mut norm_n) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..n {
            let orig = p.groups_mut()[k].data[i];
            p.groups_mut()[k].data[i] = orig + h;
            let up = objective(&p);
            p.groups_mut()[k].data[i] = orig - h;
            let down = objective(&p);
            p.groups_mut()[k].data[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            diff += (numeric - analytic[k][i]).powi(2);
            norm_a += analytic[k][i].powi(2);
            norm_n += numeric.powi(2);
        }
        let denom = norm_a.sqrt() + norm_n.sqrt();
        out.push(GroupCheck {
            variant,
            group: name,
            size: n,
            rel_error: if denom == 0.0 { 0.0 } else { diff.sqrt() / denom },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_groups_of_all_variants() {
        for v in Variant::ALL {
            let checks = check_variant(v, 3);
            let expected = if v.uses_ipa_pos() { 21 } else { 17 };
            assert_eq!(checks.len(), expected);
            for c in checks {
                assert!(c.rel_error < 1e-4, "{} {}: {:e}", c.variant, c.group, c.rel_error);
            }
        }
    }
}
