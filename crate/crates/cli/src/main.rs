use std::io::{self, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use disaster_tagger::commands::{self, RunConfig};
use disaster_tagger::eval::MatchMode;
use disaster_tagger::features::Variant;
use disaster_tagger::Error;

#[derive(Parser, Debug)]
#[command(name = "disaster-tagger", version, about = "Hashtag annotation, training and extraction for disaster tweets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Annotate a corpus with a lexicon.
    Annotate(Opts),
    /// Split annotated tweets into train / dev / test subsets.
    Split(Opts),
    /// Train a tagger and save the best checkpoint.
    Train(Opts),
    /// Score a checkpoint (or a predictions file) on test subsets.
    Eval(Opts),
    /// Extract hashtags from tweets, one line in and one line out.
    Extract(Opts),
    /// Train the relevance filter on labeled tweets.
    TrainRelevance(Opts),
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    corpus_format: Option<String>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    lemma_exceptions: Option<PathBuf>,
    #[arg(long)]
    segmentation_words: Option<PathBuf>,
    #[arg(long)]
    relevance_model: Option<PathBuf>,
    #[arg(long)]
    annotated: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    /// Repeatable.
    #[arg(long)]
    dev: Vec<PathBuf>,
    /// Repeatable; each file is one subset named after its stem.
    #[arg(long)]
    test: Vec<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    phoneme_inventory: Option<PathBuf>,
    #[arg(long)]
    g2p_rules: Option<PathBuf>,
    #[arg(long)]
    g2p_exceptions: Option<PathBuf>,
    #[arg(long)]
    pos_lexicon: Option<PathBuf>,
    #[arg(long)]
    contextual: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Input tweets for extract (default: stdin).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    d_word: Option<usize>,
    #[arg(long)]
    d_hidden: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    lang: Option<String>,
    #[arg(long)]
    max_errors: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Also write CoNLL output from annotate.
    #[arg(long)]
    conll: bool,
    /// Score overlapping tokens instead of exact spans.
    #[arg(long)]
    token_level: bool,
    /// -v info, -vv debug.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
    #[arg(short, long)]
    quiet: bool,
}

impl Opts {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                RunConfig::from_toml(&text)?
            }
            None => RunConfig::default(),
        };
        let p = &mut cfg.paths;
        for (slot, value) in [
            (&mut p.corpus, self.corpus),
            (&mut p.lexicon, self.lexicon),
            (&mut p.lemma_exceptions, self.lemma_exceptions),
            (&mut p.segmentation_words, self.segmentation_words),
            (&mut p.relevance_model, self.relevance_model),
            (&mut p.annotated, self.annotated),
            (&mut p.train, self.train),
            (&mut p.embeddings, self.embeddings),
            (&mut p.phoneme_inventory, self.phoneme_inventory),
            (&mut p.g2p_rules, self.g2p_rules),
            (&mut p.g2p_exceptions, self.g2p_exceptions),
            (&mut p.pos_lexicon, self.pos_lexicon),
            (&mut p.contextual, self.contextual),
            (&mut p.checkpoint, self.checkpoint),
            (&mut p.predictions, self.predictions),
            (&mut p.input, self.input),
            (&mut p.out, self.out),
        ] {
            if value.is_some() {
                *slot = value;
            }
        }
        if !self.dev.is_empty() {
            p.dev = self.dev;
        }
        if !self.test.is_empty() {
            p.test = self.test;
        }
        if self.variant.is_some() {
            cfg.variant = self.variant;
        }
        if let Some(s) = self.seed {
            cfg.set_seed(s);
        }
        let m = &mut cfg.model;
        if let Some(v) = self.epochs {
            m.epochs = v;
        }
        if let Some(v) = self.batch_size {
            m.batch_size = v;
        }
        if let Some(v) = self.patience {
            m.patience = v;
        }
        if let Some(v) = self.d_word {
            m.features.d_word = v;
        }
        if let Some(v) = self.d_hidden {
            m.d_hidden = v;
        }
        if let Some(v) = self.lr {
            m.lr = v;
        }
        if let Some(v) = self.dropout {
            m.dropout = v;
        }
        if self.corpus_format.is_some() {
            cfg.corpus_format = self.corpus_format;
        }
        if self.lang.is_some() {
            cfg.lang = self.lang;
        }
        if let Some(v) = self.max_errors {
            cfg.max_errors = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        cfg.conll |= self.conll;
        if self.token_level {
            cfg.eval_mode = MatchMode::TokenLevel;
        }
        Ok(cfg)
    }
}

fn init_logging(opts: &Opts) {
    let level = match (opts.quiet, opts.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Annotate(o) => {
            let s = commands::cmd_annotate(&o.into_config()?)?;
            println!("tweets: {}", s.tweets);
            println!("tweets with spans: {}", s.tweets_with_spans);
            println!("spans: {}", s.spans);
        }
        Command::Split(o) => {
            let s = commands::cmd_split(&o.into_config()?)?;
            println!("train: {}", s.train);
            for (name, n) in &s.validation {
                println!("dev/{name}: {n}");
            }
            for (name, n) in &s.test {
                println!("test/{name}: {n}");
            }
        }
        Command::Train(o) => {
            let s = commands::cmd_train(&o.into_config()?)?;
            println!(
                "{}: {} epochs, best dev F1 {:.4} at epoch {}",
                s.variant, s.epochs_run, s.best_dev_f1, s.best_epoch
            );
        }
        Command::Eval(o) => {
            let r = commands::cmd_eval(&o.into_config()?)?;
            print!("{}", r.table());
        }
        Command::Extract(o) => {
            let cfg = o.into_config()?;
            let stdout = io::stdout().lock();
            match &cfg.paths.input {
                Some(p) => {
                    let f = std::fs::File::open(p).map_err(|e| Error::io(p, e))?;
                    commands::cmd_extract(&cfg, BufReader::new(f), stdout)?;
                }
                None => {
                    commands::cmd_extract(&cfg, io::stdin().lock(), stdout)?;
                }
            }
        }
        Command::TrainRelevance(o) => {
            let s = commands::cmd_train_relevance(&o.into_config()?)?;
            println!("on_topic: {}, off_topic: {}", s.on_topic, s.off_topic);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let opts = match &cli.command {
        Command::Annotate(o)
        | Command::Split(o)
        | Command::Train(o)
        | Command::Eval(o)
        | Command::Extract(o)
        | Command::TrainRelevance(o) => o,
    };
    init_logging(opts);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
