//! Subcommand implementations behind the `disaster-tagger` binary. Every
//! command takes a [`RunConfig`] and writes into its output directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotate::{annotate_tweet, read_annotated, write_annotated, write_conll, AnnotatedRecord, Lexicon};
use crate::error::{Error, Result};
use crate::eval::{render_agreement, score_spans, EvalReport, MatchMode, Span};
use crate::features::phonetics::{BUNDLED_G2P_EXCEPTIONS, BUNDLED_G2P_RULES};
use crate::features::{
    load_word_embeddings, ContextualVectors, FeatureSpace, G2PRules, PhonemeInventory, PosTagger, Variant, Vocab,
};
use crate::ingest::{
    classify_relevance, deduplicate, filter_language, load_corpus, split_benchmark, train_naive_bayes, CorpusFormat,
    NaiveBayesModel, Relevance, SplitSpec, TweetRecord,
};
use crate::tagger::checkpoint::Checkpoint;
use crate::tagger::{
    build_vocab, predict, predict_all, prepare_examples, train, EpochLog, ModelConfig, ModelParams, TrainState,
};
use crate::textnorm::{Lemmatizer, SegmentationDict, TextPipeline};

pub const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub lemma_exceptions: Option<PathBuf>,
    pub segmentation_words: Option<PathBuf>,
    pub relevance_model: Option<PathBuf>,
    /// Annotated JSONL to split (by `split`, or in memory by `train`).
    pub annotated: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub dev: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub phoneme_inventory: Option<PathBuf>,
    pub g2p_rules: Option<PathBuf>,
    pub g2p_exceptions: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub contextual: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// Precomputed `{id, spans}` JSONL scored by `eval` instead of a checkpoint.
    pub predictions: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    /// Overrides `model.features.variant` for training; checked against the
    /// checkpoint everywhere else.
    pub variant: Option<Variant>,
    pub model: ModelConfig,
    pub split: SplitSpec,
    pub corpus_format: Option<String>,
    pub max_errors: usize,
    pub lang: Option<String>,
    pub alpha: f64,
    pub conll: bool,
    pub eval_mode: MatchMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            variant: None,
            model: ModelConfig::default(),
            split: SplitSpec::default(),
            corpus_format: None,
            max_errors: 100,
            lang: None,
            alpha: 1.0,
            conll: false,
            eval_mode: MatchMode::ExactSpan,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.model.seed = seed;
        self.split.seed = seed;
    }

    fn model_config(&self) -> ModelConfig {
        let mut m = self.model.clone();
        if let Some(v) = self.variant {
            m.features.variant = v;
        }
        m
    }

    fn out_dir(&self) -> Result<&Path> {
        self.paths.out.as_deref().ok_or_else(|| Error::Config("--out is required".into()))
    }

    pub fn pipeline(&self) -> Result<TextPipeline> {
        let lemmatizer = match &self.paths.lemma_exceptions {
            Some(p) => Lemmatizer::load(require(p, "--lemma-exceptions")?)?,
            None => Lemmatizer::bundled(),
        };
        let segmentation = match &self.paths.segmentation_words {
            Some(p) => SegmentationDict::load(require(p, "--segmentation-words")?)?,
            None => SegmentationDict::bundled(),
        };
        Ok(TextPipeline::new(lemmatizer, segmentation))
    }
}

fn require<'a>(path: &'a Path, flag: &str) -> Result<&'a Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::Config(format!("{flag} {}: no such file", path.display())))
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    match path {
        Some(p) => require(p, flag),
        None => Err(Error::Config(format!("{flag} is required"))),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Checks every resource the variant will read before any work starts.
fn check_resources(cfg: &RunConfig, variant: Variant) -> Result<()> {
    let missing = |what: String| Error::MissingResource {
        variant: variant.to_string(),
        what,
    };
    let p = &cfg.paths;
    for (flag, path) in [
        ("--embeddings", &p.embeddings),
        ("--phoneme-inventory", &p.phoneme_inventory),
        ("--g2p-rules", &p.g2p_rules),
        ("--g2p-exceptions", &p.g2p_exceptions),
        ("--pos-lexicon", &p.pos_lexicon),
        ("--contextual", &p.contextual),
    ] {
        if let Some(path) = path {
            if !path.is_file() {
                return Err(missing(format!("{flag} {} not found", path.display())));
            }
        }
    }
    if variant.uses_ctx() && p.contextual.is_none() {
        return Err(missing("--contextual vectors file is required".into()));
    }
    Ok(())
}

fn feature_space(cfg: &RunConfig, model: &ModelConfig, words: Vocab) -> Result<FeatureSpace> {
    let p = &cfg.paths;
    let inventory = match &p.phoneme_inventory {
        Some(path) => PhonemeInventory::parse(&read_text(path)?)?,
        None => PhonemeInventory::bundled(),
    };
    let g2p = match (&p.g2p_rules, &p.g2p_exceptions) {
        (None, None) => G2PRules::bundled(),
        (rules, exceptions) => {
            let rules = match rules {
                Some(path) => read_text(path)?,
                None => BUNDLED_G2P_RULES.to_string(),
            };
            let exceptions = match exceptions {
                Some(path) => read_text(path)?,
                None => BUNDLED_G2P_EXCEPTIONS.to_string(),
            };
            G2PRules::parse(&rules, &exceptions)?
        }
    };
    let pos = match &p.pos_lexicon {
        Some(path) => PosTagger::parse(&read_text(path)?)?,
        None => PosTagger::bundled(),
    };
    FeatureSpace::with_resources(model.features.clone(), words, inventory, g2p, pos)
}

fn load_contextual(cfg: &RunConfig, variant: Variant) -> Result<Option<ContextualVectors>> {
    match &cfg.paths.contextual {
        Some(path) if variant.uses_ctx() => Ok(Some(ContextualVectors::read(path)?)),
        _ => Ok(None),
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(OutputLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// File-name-safe form of a subset name.
pub fn sanitize_name(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "_".into()
    } else {
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotateStats {
    pub lines_rejected: usize,
    pub duplicates_removed: usize,
    pub language_removed: usize,
    pub off_topic_removed: usize,
    pub tweets: usize,
    pub tweets_with_spans: usize,
    pub spans: usize,
    pub warnings: usize,
}

pub fn cmd_annotate(cfg: &RunConfig) -> Result<AnnotateStats> {
    let corpus_path = required(&cfg.paths.corpus, "--corpus")?;
    let lexicon_path = required(&cfg.paths.lexicon, "--lexicon")?;
    let out = cfg.out_dir()?;
    let relevance = match &cfg.paths.relevance_model {
        Some(p) => Some(NaiveBayesModel::load(require(p, "--relevance-model")?)?),
        None => None,
    };
    let format = match &cfg.corpus_format {
        Some(f) => f.parse()?,
        None => CorpusFormat::from_path(corpus_path),
    };
    let pipeline = cfg.pipeline()?;
    let lexicon = Lexicon::load(lexicon_path, &pipeline)?;
    let _lock = OutputLock::acquire(out)?;

    let corpus = load_corpus(corpus_path, format, cfg.max_errors)?;
    let mut stats = AnnotateStats {
        lines_rejected: corpus.errors.len(),
        ..Default::default()
    };
    let n = corpus.records.len();
    let mut records = deduplicate(corpus.records);
    stats.duplicates_removed = n - records.len();
    if let Some(lang) = &cfg.lang {
        let n = records.len();
        records = filter_language(records, lang);
        stats.language_removed = n - records.len();
    }
    if let Some(model) = &relevance {
        let n = records.len();
        records.retain(|r| {
            let label = r.relevance_label.unwrap_or_else(|| classify_relevance(model, r).0);
            label == Relevance::OnTopic
        });
        stats.off_topic_removed = n - records.len();
    }

    let mut annotated = Vec::with_capacity(records.len());
    for r in &records {
        let a = annotate_tweet(r, &lexicon, &pipeline)?;
        for w in &a.warnings {
            log::warn!("{w}");
        }
        stats.warnings += a.warnings.len();
        stats.spans += a.record.spans.len();
        stats.tweets_with_spans += usize::from(!a.record.spans.is_empty());
        annotated.push(a.record);
    }
    stats.tweets = annotated.len();

    write_annotated(&out.join("annotated.jsonl"), &annotated)?;
    if cfg.conll {
        write_conll(&out.join("annotated.conll"), &annotated)?;
    }
    write_json(&out.join("annotate_stats.json"), &stats)?;
    Ok(stats)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub train: usize,
    pub validation: BTreeMap<String, usize>,
    pub test: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

pub fn cmd_split(cfg: &RunConfig) -> Result<SplitStats> {
    let annotated = required(&cfg.paths.annotated, "--annotated")?;
    let out = cfg.out_dir()?;
    let records = read_annotated(annotated)?;
    let split = split_benchmark(&records, &cfg.split)?;
    let _lock = OutputLock::acquire(out)?;

    write_annotated(&out.join("train.jsonl"), &split.train)?;
    for (dir, subsets) in [("dev", &split.validation), ("test", &split.test)] {
        let d = out.join(dir);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        for (name, recs) in subsets {
            write_annotated(&d.join(format!("{}.jsonl", sanitize_name(name))), recs)?;
        }
    }
    let count = |m: &BTreeMap<String, Vec<AnnotatedRecord>>| m.iter().map(|(k, v)| (k.clone(), v.len())).collect();
    let stats = SplitStats {
        train: split.train.len(),
        validation: count(&split.validation),
        test: count(&split.test),
        warnings: split.warnings,
    };
    write_json(&out.join("split_stats.json"), &stats)?;
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub variant: Variant,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_dev_f1: f64,
    pub n_train: usize,
    pub n_dev: usize,
    pub vocab_size: usize,
    pub embeddings_rejected: usize,
}

fn read_many(paths: &[PathBuf], flag: &str) -> Result<Vec<AnnotatedRecord>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_annotated(require(p, flag)?)?);
    }
    Ok(out)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    let model = cfg.model_config();
    model.validate()?;
    let variant = model.features.variant;
    check_resources(cfg, variant)?;
    let out = cfg.out_dir()?;

    let (train_recs, dev_recs) = match (&cfg.paths.train, &cfg.paths.annotated) {
        (Some(t), _) => {
            if cfg.paths.dev.is_empty() {
                return Err(Error::Config("--dev is required with --train".into()));
            }
            (read_annotated(require(t, "--train")?)?, read_many(&cfg.paths.dev, "--dev")?)
        }
        (None, Some(a)) => {
            let split = split_benchmark(&read_annotated(require(a, "--annotated")?)?, &cfg.split)?;
            (split.train, split.validation.into_values().flatten().collect())
        }
        (None, None) => return Err(Error::Config("--train or --annotated is required".into())),
    };

    let pretrained = match &cfg.paths.embeddings {
        Some(p) => Some(load_word_embeddings(p, model.features.d_word)?),
        None => None,
    };
    let mut words = build_vocab(&train_recs).items().to_vec();
    if let Some(e) = &pretrained {
        let known: BTreeSet<&str> = words.iter().map(String::as_str).collect();
        let extra: Vec<String> = build_vocab(&dev_recs)
            .items()
            .iter()
            .filter(|w| !known.contains(w.as_str()) && e.table.vocab.contains(w))
            .cloned()
            .collect();
        words.extend(extra);
    }
    let space = feature_space(cfg, &model, Vocab::new(&words))?;
    let ctx = load_contextual(cfg, variant)?;
    let train_set = prepare_examples::<f32>(&train_recs, &space, ctx.as_ref())?;
    let dev_set = prepare_examples::<f32>(&dev_recs, &space, ctx.as_ref())?;

    let _lock = OutputLock::acquire(out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let params = ModelParams::init(&space, &model, pretrained.as_ref().map(|e| &e.table), &mut rng)?;
    let state = TrainState::new(params, model.seed.wrapping_add(1));

    let log_path = out.join("train_log.jsonl");
    let mut log_file = BufWriter::new(File::create(&log_path).map_err(|e| Error::io(&log_path, e))?);
    let mut log_err = None;
    let outcome = train(&space, &model, &train_set, &dev_set, state, |entry: &EpochLog| {
        let line = serde_json::to_string(entry).expect("log serializes");
        if let Err(e) = writeln!(log_file, "{line}").and_then(|_| log_file.flush()) {
            log_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_err {
        return Err(Error::io(&log_path, e));
    }

    let ckpt = Checkpoint::new(&space, &model, outcome.best, &outcome.state);
    ckpt.save(&out.join("model.ckpt"))?;
    let summary = TrainSummary {
        variant,
        epochs_run: outcome.log.len(),
        best_epoch: outcome.state.best_epoch,
        best_dev_f1: outcome.state.best_f1,
        n_train: train_set.len(),
        n_dev: dev_set.len(),
        vocab_size: space.words.rows(),
        embeddings_rejected: pretrained.map_or(0, |e| e.rejected.len()),
    };
    write_json(&out.join("train_summary.json"), &summary)?;
    Ok(summary)
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub spans: Vec<Span>,
}

fn read_predictions(path: &Path) -> Result<BTreeMap<String, Vec<Span>>> {
    let mut out = BTreeMap::new();
    for (n, line) in read_text(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: PredictionRecord = serde_json::from_str(line)
            .map_err(|e| Error::Data(format!("{}: line {}: {e}", path.display(), n + 1)))?;
        if out.insert(r.id.clone(), r.spans).is_some() {
            return Err(Error::Data(format!("{}: line {}: duplicate id {}", path.display(), n + 1, r.id)));
        }
    }
    Ok(out)
}

fn load_checkpoint(cfg: &RunConfig) -> Result<Checkpoint> {
    let ckpt = Checkpoint::load(required(&cfg.paths.checkpoint, "--checkpoint")?)?;
    if let Some(v) = cfg.variant {
        if v != ckpt.meta.config.features.variant {
            return Err(Error::ConfigMismatch(vec!["features.variant".into()]));
        }
    }
    Ok(ckpt)
}

fn agreement_html(name: &str, rows: &[(String, String)]) -> String {
    let mut html = format!("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{name}</title></head><body>\n");
    for (id, body) in rows {
        html.push_str(&format!("<div id=\"{id}\">{body}</div>\n"));
    }
    html.push_str("</body></html>\n");
    html
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalReport> {
    if cfg.paths.test.is_empty() {
        return Err(Error::Config("--test is required".into()));
    }
    let out = cfg.out_dir()?;
    let mut subsets = Vec::new();
    for p in &cfg.paths.test {
        let name = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "test".into());
        subsets.push((name, read_annotated(require(p, "--test")?)?));
    }

    let mut predicted: Vec<BTreeMap<String, Vec<Span>>> = Vec::new();
    if let Some(p) = &cfg.paths.predictions {
        let all = read_predictions(require(p, "--predictions")?)?;
        for (_, recs) in &subsets {
            predicted.push(
                recs.iter()
                    .filter_map(|r| all.get(&r.id).map(|s| (r.id.clone(), s.clone())))
                    .collect(),
            );
        }
    } else {
        let ckpt = load_checkpoint(cfg)?;
        let model = ckpt.meta.config.clone();
        check_resources(cfg, model.features.variant)?;
        let space = ckpt.space()?;
        let ctx = load_contextual(cfg, model.features.variant)?;
        for (_, recs) in &subsets {
            let ex = prepare_examples::<f32>(recs, &space, ctx.as_ref())?;
            predicted.push(predict_all(&space, &model, &ckpt.params, &ex));
        }
    }

    let _lock = OutputLock::acquire(out)?;
    let agree_dir = out.join("agreement");
    fs::create_dir_all(&agree_dir).map_err(|e| Error::io(&agree_dir, e))?;
    let mut reports = Vec::new();
    for ((name, recs), pred) in subsets.iter().zip(&predicted) {
        let gold: BTreeMap<String, Vec<Span>> =
            recs.iter().map(|r| (r.id.clone(), r.spans.iter().map(|s| s.range()).collect())).collect();
        let report = score_spans(name, pred, &gold, cfg.eval_mode)?;
        let (mut text, mut html) = (String::new(), Vec::new());
        for r in recs {
            let g = &gold[&r.id];
            let rendered = render_agreement(&r.tokens, &pred[&r.id], g);
            text.push_str(&format!("{}\t{}\n", r.id, rendered.text));
            html.push((r.id.clone(), rendered.html));
        }
        let stem = sanitize_name(name);
        let txt = agree_dir.join(format!("{stem}.txt"));
        fs::write(&txt, text).map_err(|e| Error::io(&txt, e))?;
        let page = agree_dir.join(format!("{stem}.html"));
        fs::write(&page, agreement_html(name, &html)).map_err(|e| Error::io(&page, e))?;
        reports.push(report);
    }
    let report = EvalReport::new(reports);
    write_json(&out.join("eval_report.json"), &report)?;
    let table = out.join("eval_report.txt");
    fs::write(&table, report.table()).map_err(|e| Error::io(&table, e))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// One output line of `extract`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub id: String,
    pub hashtags: Vec<String>,
    pub spans: Vec<ExtractedSpan>,
}

/// `#` followed by the span words, lowercased and joined without separators.
pub fn render_hashtag<S: AsRef<str>>(words: &[S]) -> String {
    let mut tag = String::from("#");
    for w in words {
        tag.push_str(&w.as_ref().to_lowercase());
    }
    tag
}

/// Builds an [`Extraction`]; hashtags keep first-occurrence order without repeats.
pub fn extraction(id: &str, tokens: &[String], spans: &[Span]) -> Extraction {
    let mut hashtags: Vec<String> = Vec::new();
    let mut out = Vec::with_capacity(spans.len());
    for &(s, e) in spans {
        let tag = render_hashtag(&tokens[s..e]);
        if !hashtags.contains(&tag) {
            hashtags.push(tag);
        }
        out.push(ExtractedSpan {
            start: s,
            end: e,
            text: tokens[s..e].join(" "),
        });
    }
    Extraction {
        id: id.to_string(),
        hashtags,
        spans: out,
    }
}

/// Reads tweets line by line (JSON records, or raw text numbered from 1) and
/// writes one JSON [`Extraction`] per nonblank line, flushing as it goes.
/// Returns the number of tweets processed.
pub fn cmd_extract<R: BufRead, W: Write>(cfg: &RunConfig, input: R, mut output: W) -> Result<usize> {
    let ckpt = load_checkpoint(cfg)?;
    let model = ckpt.meta.config.clone();
    let variant = model.features.variant;
    check_resources(cfg, variant)?;
    let space = ckpt.space()?;
    let ctx = load_contextual(cfg, variant)?;
    let pipeline = cfg.pipeline()?;
    let out_err = |e| Error::io("<output>", e);

    let mut count = 0;
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let tweet = if trimmed.starts_with('{') {
            serde_json::from_str::<TweetRecord>(trimmed)
                .map_err(|e| Error::Data(format!("input line {}: {e}", n + 1)))?
        } else {
            TweetRecord::new((n + 1).to_string(), trimmed)
        };
        let (tokens, pos) = pipeline
            .prepare_with_pos(&tweet.text, tweet.pos_tags.as_deref())
            .map_err(|e| Error::Data(format!("input line {}: {e}", n + 1)))?;
        let surfaces: Vec<String> = tokens.into_iter().map(|t| t.surface).collect();
        let pos = match pos {
            Some(p) => Some(p),
            None if variant.uses_ipa_pos() => Some(space.pos_tagger.tag_all(&surfaces)),
            None => None,
        };
        let c = match &ctx {
            Some(c) => Some(c.get(&tweet.id, surfaces.len())?),
            None => None,
        };
        let prep = space.prepare::<f32, _>(&surfaces, pos.as_deref(), c)?;
        let spans = predict(&space, &model, &ckpt.params, &prep);
        let line = serde_json::to_string(&extraction(&tweet.id, &surfaces, &spans)).expect("extraction serializes");
        writeln!(output, "{line}").map_err(out_err)?;
        output.flush().map_err(out_err)?;
        count += 1;
    }
    Ok(count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceSummary {
    pub on_topic: usize,
    pub off_topic: usize,
    pub unlabeled_skipped: usize,
}

pub fn cmd_train_relevance(cfg: &RunConfig) -> Result<RelevanceSummary> {
    let corpus_path = required(&cfg.paths.corpus, "--corpus")?;
    let out = cfg.out_dir()?;
    let format = match &cfg.corpus_format {
        Some(f) => f.parse()?,
        None => CorpusFormat::from_path(corpus_path),
    };
    let corpus = load_corpus(corpus_path, format, cfg.max_errors)?;
    let n = corpus.records.len();
    let labeled: Vec<TweetRecord> = corpus.records.into_iter().filter(|r| r.relevance_label.is_some()).collect();
    let model = train_naive_bayes(&labeled, cfg.alpha)?;
    let _lock = OutputLock::acquire(out)?;
    model.save(&out.join("relevance_model.json"))?;
    let on = labeled.iter().filter(|r| r.relevance_label == Some(Relevance::OnTopic)).count();
    Ok(RelevanceSummary {
        on_topic: on,
        off_topic: labeled.len() - on,
        unlabeled_skipped: n - labeled.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashtag_rendering() {
        assert_eq!(render_hashtag(&["hurricane", "maria"]), "#hurricanemaria");
        assert_eq!(render_hashtag(&["Houston"]), "#houston");
        let toks: Vec<String> = "need help in Houston".split(' ').map(String::from).collect();
        let e = extraction("1", &toks, &[(0, 2), (3, 4)]);
        assert_eq!(e.hashtags, ["#needhelp", "#houston"]);
        assert_eq!(e.spans[0].text, "need help");
        assert!(extraction("2", &toks, &[]).hashtags.is_empty());
    }

    #[test]
    fn repeated_span_text_gives_one_hashtag() {
        let toks: Vec<String> = "flood flood".split(' ').map(String::from).collect();
        let e = extraction("1", &toks, &[(0, 1), (1, 2)]);
        assert_eq!(e.hashtags, ["#flood"]);
        assert_eq!(e.spans.len(), 2);
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let lock = OutputLock::acquire(dir.path()).unwrap();
        assert!(matches!(OutputLock::acquire(dir.path()), Err(Error::Locked(_))));
        drop(lock);
        assert!(!dir.path().join(LOCK_FILE).exists());
        OutputLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn toml_config_with_defaults() {
        let cfg = RunConfig::from_toml(
            "variant = \"mtl_ipa_pos\"\n[paths]\ncorpus = \"c.jsonl\"\ndev = [\"a.jsonl\", \"b.jsonl\"]\n[model]\nd_hidden = 64\n[model.features]\nd_word = 32\n[split]\nseed = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.variant, Some(Variant::MtlIpaPos));
        assert_eq!(cfg.paths.dev.len(), 2);
        assert_eq!(cfg.model.d_hidden, 64);
        assert_eq!(cfg.model.features.d_word, 32);
        assert_eq!(cfg.model.features.d_pos, 64);
        assert_eq!(cfg.split.test_fraction, 0.07);
        assert_eq!(cfg.model_config().features.variant, Variant::MtlIpaPos);
        assert!(RunConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn missing_pos_lexicon_names_the_path() {
        let cfg = RunConfig {
            paths: Paths {
                pos_lexicon: Some("/nonexistent/pos.tsv".into()),
                ..Default::default()
            },
            ..Default::default()
        };
        let err = check_resources(&cfg, Variant::MtlIpaPos).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("/nonexistent/pos.tsv"));
        let err = check_resources(&RunConfig::default(), Variant::MtlCtx).unwrap_err();
        assert!(err.to_string().contains("--contextual"));
    }

    #[test]
    fn names_are_file_safe() {
        assert_eq!(sanitize_name("hurricane harvey/2017"), "hurricane_harvey_2017");
        assert_eq!(sanitize_name(""), "_");
    }
}
