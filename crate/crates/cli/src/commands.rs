use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;

use sentasm::assembly::build_derivation_tree;
use sentasm::harness::{
    apply_verdicts, parse_verdicts, precision, run_mrc_suite, run_sa_suite, run_ssm_suite, BugReport, HarnessError,
    ModelError, RunStats,
};
use sentasm::ingest::{self, Corpus, EmbeddingTable, Lexicon, SeedTest, Stopwords, Task};
use sentasm::jsonl::{read_jsonl, tree_records, write_jsonl, NodeRecord, TemplateRecord};
use sentasm::metamorphic::{gen_mrc_tests, gen_sa_tests, gen_ssm_tests, MrcTest, SaTest, SsmTest};
use sentasm::morph::Inflector;
use sentasm::mutation::{FillMask, MutationStats, Mutator, Resources, Strategy};
use sentasm::parallel::parallel_map;
use sentasm::{disassemble, DerivationTree};

use crate::config::RunConfig;
use crate::http::HttpService;

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Usage = 1,
    Data = 2,
    Endpoint = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub error: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Classify<T> {
    fn or_exit(self, exit: Exit) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_exit(self, exit: Exit) -> CliResult<T> {
        self.map_err(|e| CliError { exit, error: e.into() })
    }
}

fn fail<T>(exit: Exit, error: anyhow::Error) -> CliResult<T> {
    Err(CliError { exit, error })
}

fn write_lines<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .or_exit(Exit::Data)?;
    }
    let file = fs::File::create(path)
        .with_context(|| format!("writing {}", path.display()))
        .or_exit(Exit::Data)?;
    write_jsonl(std::io::BufWriter::new(file), items)
        .with_context(|| format!("writing {}", path.display()))
        .or_exit(Exit::Data)
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .or_exit(Exit::Data)?;
    read_jsonl(&text)
        .with_context(|| format!("in {}", path.display()))
        .or_exit(Exit::Data)
}

fn load_corpus(cfg: &RunConfig) -> CliResult<Corpus> {
    let conllu = cfg.required(&cfg.conllu, "CoNLL-U").or_exit(Exit::Usage)?;
    let corpus = Corpus::load(conllu, cfg.trees.as_deref(), cfg.labels.as_deref())
        .with_context(|| format!("loading corpus {}", conllu.display()))
        .or_exit(Exit::Data)?;
    if corpus.is_empty() {
        return fail(Exit::Data, anyhow!("corpus {} contains no sentences", conllu.display()));
    }
    Ok(corpus)
}

/// Writes `templates.jsonl`, one record per sentence that disassembles.
pub fn disassemble_cmd(cfg: &RunConfig) -> CliResult<PathBuf> {
    let corpus = load_corpus(cfg)?;
    let mut records = Vec::new();
    let mut failed = 0;
    for sentence in corpus.iter() {
        match disassemble(sentence) {
            Ok(t) => records.push(TemplateRecord::from(&t)),
            Err(e) => {
                log::warn!("{}: {e}", sentence.id);
                failed += 1;
            }
        }
    }
    if records.is_empty() {
        return fail(Exit::Data, anyhow!("none of the {failed} sentences could be disassembled"));
    }
    let path = cfg.output("templates.jsonl");
    let degenerate = records.iter().filter(|r| r.degenerate.is_some()).count();
    write_lines(&path, &records)?;
    println!(
        "templates: {} written to {} ({failed} failed, {degenerate} degenerate)",
        records.len(),
        path.display()
    );
    Ok(path)
}

struct Lexical {
    lexicon: Lexicon,
    embeddings: EmbeddingTable,
    stopwords: Stopwords,
    inflector: Inflector,
}

fn load_lexical(cfg: &RunConfig) -> CliResult<Lexical> {
    let lexicon = match (&cfg.lexicon, cfg.strategy) {
        (Some(path), _) => {
            let (lexicon, report) = ingest::load_lexicon(path)
                .with_context(|| format!("loading lexicon {}", path.display()))
                .or_exit(Exit::Data)?;
            log::info!("lexicon: {} entries, {:?}", lexicon.len(), report);
            lexicon
        }
        (None, Strategy::Mlm) => Lexicon::default(),
        (None, Strategy::Synonym) => return fail(Exit::Usage, anyhow!("no lexicon path given")),
    };
    let path = cfg.required(&cfg.embeddings, "embeddings").or_exit(Exit::Usage)?;
    let embeddings = ingest::load_embeddings(path)
        .with_context(|| format!("loading embeddings {}", path.display()))
        .or_exit(Exit::Data)?;
    let stopwords = match &cfg.stopwords {
        Some(path) => ingest::load_stopwords(path)
            .with_context(|| format!("loading stopwords {}", path.display()))
            .or_exit(Exit::Data)?,
        None => Stopwords::english(),
    };
    Ok(Lexical {
        lexicon,
        embeddings,
        stopwords,
        inflector: Inflector::english(),
    })
}

fn seed_dataset(cfg: &RunConfig, task: Task, corpus: &Corpus) -> CliResult<Vec<SeedTest>> {
    let path = cfg.required(&cfg.seeds, "seed dataset").or_exit(Exit::Usage)?;
    ingest::load_seed_dataset(task, path, corpus)
        .with_context(|| format!("loading seeds {}", path.display()))
        .or_exit(Exit::Data)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateSummary {
    pub task: Task,
    pub seeds: usize,
    pub trees: usize,
    pub tests: usize,
    pub avg_tests_per_seed: f64,
    pub mutation: MutationStats,
}

impl fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: seeds {}, trees {}, tests {}, avg tests/seed {:.2}",
            self.task, self.seeds, self.trees, self.tests, self.avg_tests_per_seed
        )
    }
}

/// Builds one tree per id, in parallel, skipping sentences that fail to
/// disassemble.
fn build_trees(
    ids: &[&str],
    corpus: &Corpus,
    mutator: &Mutator<'_>,
    cfg: &RunConfig,
) -> Vec<Option<DerivationTree>> {
    let tree_cfg = cfg.tree();
    parallel_map(ids, cfg.workers, |id| {
        let sentence = corpus.get(id).expect("seed ids are validated against the corpus");
        match disassemble(sentence) {
            Ok(t) => Some(build_derivation_tree(&t, mutator, &tree_cfg)),
            Err(e) => {
                log::warn!("{id}: {e}");
                None
            }
        }
    })
}

/// Writes `suite.<task>.jsonl` and, for SA and SSM, `trees.<task>.jsonl`.
pub fn generate_cmd(cfg: &RunConfig) -> CliResult<GenerateSummary> {
    let task = cfg.task().or_exit(Exit::Usage)?;
    let fill_mask = match (cfg.strategy, &cfg.mlm_endpoint) {
        (Strategy::Mlm, None) => {
            return fail(Exit::Usage, anyhow!("strategy mlm needs a fill-mask service (--mlm-endpoint)"))
        }
        (Strategy::Mlm, Some(url)) => {
            let svc = HttpService::new(url, "/fill-mask", cfg.timeout).or_exit(Exit::Usage)?;
            svc.reachable()
                .map_err(|e| anyhow!("fill-mask service unreachable: {e}"))
                .or_exit(Exit::Endpoint)?;
            Some(svc)
        }
        (Strategy::Synonym, _) => None,
    };
    let corpus = load_corpus(cfg)?;
    let lex = load_lexical(cfg)?;
    let seeds = seed_dataset(cfg, task, &corpus)?;
    let resources = Resources {
        lexicon: &lex.lexicon,
        embeddings: &lex.embeddings,
        stopwords: &lex.stopwords,
        inflector: &lex.inflector,
        fill_mask: fill_mask.as_ref().map(|s| s as &dyn FillMask),
        mask_token: &cfg.mask_token,
    };
    let mutator = Mutator::new(cfg.strategy, resources, cfg.limits);
    let suite_path = cfg.output(&format!("suite.{task}.jsonl"));
    let trees_path = cfg.output(&format!("trees.{task}.jsonl"));
    let mut mutation = MutationStats::default();

    let (trees, tests) = match task {
        Task::Mrc => {
            if cfg.strategy == Strategy::Mlm {
                log::warn!("MRC generation always uses synonym mutation");
            }
            let indexed: Vec<(u64, &SeedTest)> = seeds.iter().enumerate().map(|(i, s)| (i as u64, s)).collect();
            let mrc_cfg = cfg.mrc();
            let results = parallel_map(&indexed, cfg.workers, |(stream, seed)| match seed {
                SeedTest::Mrc(s) => gen_mrc_tests(s, *stream, &corpus, resources, &mrc_cfg),
                _ => unreachable!("seed dataset was loaded for MRC"),
            });
            let mut tests: Vec<MrcTest> = Vec::new();
            for r in results {
                tests.extend(r.or_exit(Exit::Data)?);
            }
            write_lines(&suite_path, &tests)?;
            (0, tests.len())
        }
        Task::Sa => {
            let ids: Vec<&str> = seeds.iter().map(SeedTest::id).collect();
            let sentences: Vec<&str> = seeds.iter().map(|s| s.sentence_ids()[0]).collect();
            let trees = build_trees(&sentences, &corpus, &mutator, cfg);
            let mut tests: Vec<SaTest> = Vec::new();
            let mut nodes: Vec<NodeRecord> = Vec::new();
            for (id, tree) in ids.iter().zip(&trees) {
                if let Some(tree) = tree {
                    mutation.merge(&tree.stats);
                    tests.extend(gen_sa_tests(tree, id).tests);
                    nodes.extend(tree_records(tree));
                }
            }
            write_lines(&suite_path, &tests)?;
            write_lines(&trees_path, &nodes)?;
            (trees.iter().flatten().count(), tests.len())
        }
        Task::Ssm => {
            // Sentences shared between pairs get one tree.
            let distinct: BTreeSet<&str> = seeds.iter().flat_map(SeedTest::sentence_ids).collect();
            let sentences: Vec<&str> = distinct.into_iter().collect();
            let trees = build_trees(&sentences, &corpus, &mutator, cfg);
            let mut tests: Vec<SsmTest> = Vec::new();
            let mut nodes: Vec<NodeRecord> = Vec::new();
            for (id, tree) in sentences.iter().zip(&trees) {
                if let Some(tree) = tree {
                    mutation.merge(&tree.stats);
                    tests.extend(gen_ssm_tests(tree, id, &lex.stopwords));
                    nodes.extend(tree_records(tree));
                }
            }
            write_lines(&suite_path, &tests)?;
            write_lines(&trees_path, &nodes)?;
            (trees.iter().flatten().count(), tests.len())
        }
    };
    if cfg.strategy == Strategy::Mlm && mutation.mlm_requests > 0 && mutation.mlm_failures == mutation.mlm_requests {
        return fail(Exit::Endpoint, anyhow!("every fill-mask request failed"));
    }
    let summary = GenerateSummary {
        task,
        seeds: seeds.len(),
        trees,
        tests,
        avg_tests_per_seed: if seeds.is_empty() { 0.0 } else { tests as f64 / seeds.len() as f64 },
        mutation,
    };
    println!("{summary}");
    println!("suite written to {}", suite_path.display());
    Ok(summary)
}

fn harness_error(e: HarnessError) -> CliError {
    let exit = match e {
        HarnessError::Model(ModelError::Unreachable(_) | ModelError::Transport(_)) => Exit::Endpoint,
        _ => Exit::Data,
    };
    CliError {
        exit,
        error: anyhow!(e),
    }
}

/// Runs `suite.<task>.jsonl` (or `suite`) against the model endpoint.
pub fn test_cmd(cfg: &RunConfig, suite: Option<&Path>) -> CliResult<RunStats> {
    let task = cfg.task().or_exit(Exit::Usage)?;
    let url = cfg
        .endpoint
        .as_deref()
        .ok_or_else(|| anyhow!("no model endpoint given (--endpoint)"))
        .or_exit(Exit::Usage)?;
    let endpoint = HttpService::new(url, "/predict", cfg.timeout).or_exit(Exit::Usage)?;
    let suite = suite.map(Path::to_path_buf).unwrap_or_else(|| cfg.output(&format!("suite.{task}.jsonl")));
    let harness = cfg.harness();
    let (reports, stats) = match task {
        Task::Mrc => run_mrc_suite(&read_lines::<MrcTest>(&suite)?, &endpoint, &harness),
        Task::Sa => run_sa_suite(&read_lines::<SaTest>(&suite)?, &endpoint, &harness),
        Task::Ssm => run_ssm_suite(&read_lines::<SsmTest>(&suite)?, &endpoint, &harness),
    }
    .map_err(harness_error)?;
    let reports_path = cfg.output(&format!("reports.{task}.jsonl"));
    write_lines(&reports_path, &reports)?;
    let stats_path = cfg.output(&format!("stats.{task}.json"));
    let json = serde_json::to_string_pretty(&stats).expect("stats serialize");
    fs::write(&stats_path, json + "\n")
        .with_context(|| format!("writing {}", stats_path.display()))
        .or_exit(Exit::Data)?;
    println!(
        "{task}: tests {}, executed {}, unexecuted {}, rejected {}, violations {}, requests {}",
        stats.total, stats.executed, stats.unexecuted, stats.rejected, stats.violations, stats.requests
    );
    println!("reports written to {}", reports_path.display());
    if stats.executed == 0 && stats.unexecuted > 0 {
        return fail(Exit::Endpoint, anyhow!("no test could be executed against {}", endpoint.url()));
    }
    Ok(stats)
}

/// Prints the report count, true positives and precision. Verdicts come from
/// the reports themselves or from a `report_id,verdict` CSV.
pub fn report_cmd(reports: &Path, verdicts: Option<&Path>) -> CliResult<sentasm::harness::PrecisionResult> {
    let mut reports: Vec<BugReport> = read_lines(reports)?;
    if let Some(path) = verdicts {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .or_exit(Exit::Data)?;
        let table = parse_verdicts(&text)
            .with_context(|| format!("in {}", path.display()))
            .or_exit(Exit::Data)?;
        apply_verdicts(&mut reports, &table)
            .with_context(|| format!("{} does not cover every report", path.display()))
            .or_exit(Exit::Data)?;
    }
    let result = precision(&reports).or_exit(Exit::Data)?;
    println!("reports: {}", result.total_reports);
    println!("TP: {}", result.true_positives);
    match result.precision {
        Some(p) => println!("precision: {:.4}", p),
        None => println!("precision: n/a"),
    }
    Ok(result)
}
