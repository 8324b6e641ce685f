//! Run configuration: a flat TOML file overlaid with command-line flags.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::Args;
use serde::Deserialize;

use sentasm::assembly::TreeConfig;
use sentasm::harness::HarnessConfig;
use sentasm::ingest::Task;
use sentasm::metamorphic::MrcConfig;
use sentasm::mutation::{MutationLimits, Strategy};

/// Keys accepted in the config file. Relative paths are resolved against
/// the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub conllu: Option<PathBuf>,
    pub trees: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub task: Option<Task>,
    pub strategy: Option<Strategy>,
    pub beam: Option<usize>,
    pub per_word: Option<usize>,
    pub per_adjunct: Option<usize>,
    pub top_k: Option<usize>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    pub mrc_sentences: Option<usize>,
    pub mrc_leaves: Option<usize>,
    pub max_tests: Option<usize>,
    pub endpoint: Option<String>,
    pub mlm_endpoint: Option<String>,
    pub mask_token: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub max_in_flight: Option<usize>,
    pub retries: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub timeout_ms: Option<u64>,
}

/// Flags shared by every subcommand; they win over the config file.
#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    /// Flat TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub task: Option<Task>,
    #[arg(long, global = true)]
    pub strategy: Option<Strategy>,
    /// Beam width per tree level.
    #[arg(long, global = true)]
    pub beam: Option<usize>,
    /// RNG seed for sentence selection.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// SA probability increase counted as a violation.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Base URL of the model under test.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Base URL of the fill-mask service.
    #[arg(long, global = true)]
    pub mlm_endpoint: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed dataset for the task.
    #[arg(long, global = true)]
    pub seeds: Option<PathBuf>,
    /// Worker cap for per-seed generation.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub conllu: Option<PathBuf>,
    #[arg(long, global = true)]
    pub trees: Option<PathBuf>,
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub conllu: Option<PathBuf>,
    pub trees: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub task: Option<Task>,
    pub strategy: Strategy,
    pub beam: usize,
    pub limits: MutationLimits,
    pub threshold: f64,
    pub seed: u64,
    pub mrc_sentences: usize,
    pub mrc_leaves: usize,
    pub max_tests: usize,
    pub endpoint: Option<String>,
    pub mlm_endpoint: Option<String>,
    pub mask_token: String,
    pub out: PathBuf,
    pub workers: usize,
    pub max_in_flight: usize,
    pub retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

fn resolve(base: Option<&Path>, p: Option<PathBuf>) -> Option<PathBuf> {
    p.map(|p| match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    })
}

impl RunConfig {
    pub fn load(flags: &Overrides) -> anyhow::Result<RunConfig> {
        let (file, dir) = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let file: FileConfig =
                    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
                (file, path.parent().map(Path::to_path_buf))
            }
            None => (FileConfig::default(), None),
        };
        Ok(RunConfig::merge(file, dir.as_deref(), flags.clone()))
    }

    pub fn merge(file: FileConfig, dir: Option<&Path>, flags: Overrides) -> RunConfig {
        let defaults = MutationLimits::default();
        let path = |flag: Option<PathBuf>, key: Option<PathBuf>| flag.or_else(|| resolve(dir, key));
        RunConfig {
            conllu: path(flags.conllu, file.conllu),
            trees: path(flags.trees, file.trees),
            labels: path(flags.labels, file.labels),
            lexicon: path(flags.lexicon, file.lexicon),
            embeddings: path(flags.embeddings, file.embeddings),
            stopwords: resolve(dir, file.stopwords),
            seeds: path(flags.seeds, file.seeds),
            task: flags.task.or(file.task),
            strategy: flags.strategy.or(file.strategy).unwrap_or(Strategy::Synonym),
            beam: flags.beam.or(file.beam).unwrap_or(4),
            limits: MutationLimits {
                per_word: file.per_word.unwrap_or(defaults.per_word),
                per_adjunct: file.per_adjunct.unwrap_or(defaults.per_adjunct),
                top_k: file.top_k.unwrap_or(defaults.top_k),
            },
            threshold: flags.threshold.or(file.threshold).unwrap_or(0.1),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            mrc_sentences: file.mrc_sentences.unwrap_or(4),
            mrc_leaves: file.mrc_leaves.unwrap_or(4),
            max_tests: file.max_tests.unwrap_or(256),
            endpoint: flags.endpoint.or(file.endpoint),
            mlm_endpoint: flags.mlm_endpoint.or(file.mlm_endpoint),
            mask_token: file.mask_token.unwrap_or_else(|| "[MASK]".into()),
            out: flags.out.or_else(|| resolve(dir, file.out)).unwrap_or_else(|| PathBuf::from("out")),
            workers: flags.workers.or(file.workers).unwrap_or(1),
            max_in_flight: file.max_in_flight.unwrap_or(4),
            retries: file.retries.unwrap_or(2),
            backoff: Duration::from_millis(file.backoff_ms.unwrap_or(100)),
            timeout: Duration::from_millis(file.timeout_ms.unwrap_or(10_000)),
        }
    }

    /// Range checks that do not depend on the command.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.beam < 1 {
            bail!("beam must be at least 1");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            bail!("threshold must lie in (0, 1), got {}", self.threshold);
        }
        if self.limits.per_adjunct < 1 || self.limits.per_word < 1 || self.limits.top_k < 1 {
            bail!("mutation limits must be at least 1");
        }
        if self.workers < 1 || self.max_in_flight < 1 {
            bail!("workers and max_in_flight must be at least 1");
        }
        for p in [&self.conllu, &self.trees, &self.labels, &self.lexicon, &self.embeddings, &self.stopwords, &self.seeds]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                bail!("{} does not exist", p.display());
            }
        }
        Ok(())
    }

    pub fn task(&self) -> anyhow::Result<Task> {
        self.task.context("no task given (use --task mrc|sa|ssm)")
    }

    pub fn required<'a>(&self, path: &'a Option<PathBuf>, what: &str) -> anyhow::Result<&'a Path> {
        path.as_deref().with_context(|| format!("no {what} path given"))
    }

    pub fn tree(&self) -> TreeConfig {
        TreeConfig {
            beam: Some(self.beam),
            workers: 1,
        }
    }

    pub fn mrc(&self) -> MrcConfig {
        MrcConfig {
            sentences: self.mrc_sentences,
            leaves: self.mrc_leaves,
            max_tests: Some(self.max_tests),
            tree: self.tree(),
            limits: self.limits,
            rng_seed: self.seed,
        }
    }

    pub fn harness(&self) -> HarnessConfig {
        HarnessConfig {
            threshold: self.threshold,
            max_in_flight: self.max_in_flight,
            retries: self.retries,
            backoff: self.backoff,
        }
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}
