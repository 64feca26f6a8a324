use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use lexdep::chart::{Parser as ChartParser, ParserConfig, Variant};
use lexdep::counts::train_parallel;
use lexdep::distance::DistanceStats;
use lexdep::estimator::Estimator;
use lexdep::parseval::{evaluate, EvalOptions};
use lexdep::treebank::{read_trees_from, ReaderConfig};
use lexdep::{read_tagged_sentence, Extraction, HeadRuleTable, Model, ParseTree, TaggedSentence, TrainConfig};

#[derive(Parser)]
#[command(name = "lexdep", version, about = "Train, run and evaluate a lexicalized dependency parser")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Head-rule table replacing the built-in one.
    #[arg(long, global = true, value_name = "FILE")]
    head_rules: Option<PathBuf>,
    /// TOML file with [reader], [train] and [parse] sections.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Count a treebank into a model file.
    Train {
        #[arg(short, long = "input", required = true, num_args = 1.., value_name = "TREEBANK")]
        input: Vec<PathBuf>,
        #[arg(short, long, value_name = "MODEL")]
        output: PathBuf,
        /// Keep unary chains instead of collapsing them.
        #[arg(long)]
        keep_unary: bool,
    },
    /// Parse tagged sentences, one per line.
    Parse {
        #[arg(short, long, value_name = "MODEL")]
        model: PathBuf,
        /// Tagged sentences (default: stdin).
        #[arg(short, long, value_name = "FILE")]
        input: Option<PathBuf>,
        /// Trees (default: stdout).
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[command(flatten)]
        search: SearchFlags,
        /// Append the log-score (and, unless --no-timing, milliseconds) to each tree.
        #[arg(long)]
        scores: bool,
        /// Omit all timing output.
        #[arg(long)]
        no_timing: bool,
    },
    /// PARSEVAL scores of test trees against gold trees.
    Eval {
        gold: PathBuf,
        test: PathBuf,
        /// Treat PRT as ADVP.
        #[arg(long)]
        collapse_advp_prt: bool,
        /// Do not count the sentence-spanning root constituent.
        #[arg(long)]
        exclude_root: bool,
    },
    /// Distance distributions of a treebank's dependencies.
    Stats {
        #[arg(short, long = "input", required = true, num_args = 1.., value_name = "TREEBANK")]
        input: Vec<PathBuf>,
        /// Also print each tree's reduced sentence, baseNPs and dependencies.
        #[arg(long)]
        dump_deps: bool,
    },
    /// Log-score of each gold tree under a model.
    Score {
        #[arg(short, long, value_name = "MODEL")]
        model: PathBuf,
        #[arg(short, long, value_name = "TREEBANK")]
        input: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        variant: Option<u8>,
        /// Print the per-factor breakdown after each score.
        #[arg(long)]
        explain: bool,
    },
}

#[derive(Args)]
struct SearchFlags {
    /// Per-span beam width; `inf` disables.
    #[arg(long)]
    beam: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    variant: Option<u8>,
    /// Initial per-factor probability threshold.
    #[arg(long, conflicts_with = "no_threshold")]
    threshold: Option<f64>,
    /// Search without a threshold.
    #[arg(long)]
    no_threshold: bool,
    /// Sentences with more words get a flat tree.
    #[arg(long)]
    max_len: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    reader: ReaderConfig,
    train: TrainConfig,
    parse: ParserConfig,
}

fn open(path: &Path) -> Result<Box<dyn Read>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

impl Common {
    fn file_config(&self) -> Result<FileConfig> {
        let Some(path) = &self.config else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("bad config file {}", path.display()))
    }

    fn rules(&self) -> Result<HeadRuleTable> {
        match &self.head_rules {
            None => Ok(HeadRuleTable::standard()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
                HeadRuleTable::parse(&text).with_context(|| format!("bad head rules in {}", p.display()))
            }
        }
    }
}

fn read_treebanks(paths: &[PathBuf], config: &ReaderConfig) -> Result<Vec<ParseTree>> {
    let mut trees = Vec::new();
    for p in paths {
        let t = read_trees_from(open(p)?, config).with_context(|| format!("in {}", p.display()))?;
        trees.extend(t);
    }
    Ok(trees)
}

fn load_model(path: &Path) -> Result<Model> {
    Model::load(&mut open(path)?).with_context(|| format!("cannot load model {}", path.display()))
}

fn variant(n: u8) -> Variant {
    Variant::from_number(n).expect("range checked by the argument parser")
}

fn train(common: &Common, input: &[PathBuf], output: &Path, keep_unary: bool) -> Result<()> {
    let cfg = common.file_config()?;
    let rules = common.rules()?;
    let mut tc = cfg.train;
    if keep_unary {
        tc.collapse_unary = false;
    }
    let start = Instant::now();
    let trees = read_treebanks(input, &cfg.reader)?;
    let model = train_parallel(&trees, &rules, &tc, 256)?;
    let mut out = create(output)?;
    model.save(&mut out).with_context(|| format!("cannot write {}", output.display()))?;
    out.flush().with_context(|| format!("cannot write {}", output.display()))?;
    let sizes = model.table_sizes();
    let meta = model.meta();
    eprintln!(
        "trained on {} sentences ({} skipped); {} symbols, {} triples, {} dependency and {} tag-blind entries, {} gap entries; {:.2}s",
        meta.sentences,
        meta.skipped,
        sizes.symbols,
        sizes.triples,
        sizes.dependency_entries,
        sizes.tag_blind_entries,
        sizes.gap_entries,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn read_sentences(input: Option<&Path>) -> Result<Vec<TaggedSentence>> {
    let reader: Box<dyn Read> = match input {
        Some(p) => open(p)?,
        None => Box::new(io::stdin()),
    };
    let name = input.map_or("<stdin>".to_string(), |p| p.display().to_string());
    let mut out = Vec::new();
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.with_context(|| format!("cannot read {name}"))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(read_tagged_sentence(&line).with_context(|| format!("{name}:{}", n + 1))?);
    }
    Ok(out)
}

fn parse(
    common: &Common,
    model: &Path,
    input: Option<&Path>,
    output: Option<&Path>,
    search: &SearchFlags,
    scores: bool,
    no_timing: bool,
) -> Result<()> {
    let cfg = common.file_config()?;
    let rules = common.rules()?;
    let mut pc = cfg.parse;
    if let Some(b) = search.beam {
        pc.beam = b;
    }
    if let Some(v) = search.variant {
        pc.variant = variant(v);
    }
    if let Some(t) = search.threshold {
        pc.threshold = Some(t);
        pc.threshold_floor = pc.threshold_floor.min(t);
    }
    if search.no_threshold {
        pc.threshold = None;
    }
    if search.max_len.is_some() {
        pc.max_len = search.max_len;
    }
    let model = load_model(model)?;
    let sentences = read_sentences(input)?;
    let parser = ChartParser::new(&model, &rules, pc)?;
    let start = Instant::now();
    let results: Vec<_> = sentences
        .par_iter()
        .map(|s| {
            let t0 = Instant::now();
            parser.parse(s).map(|o| (o, t0.elapsed()))
        })
        .collect();
    let elapsed = start.elapsed();
    let mut out: Box<dyn Write> = match output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut fallbacks = 0;
    for (i, r) in results.into_iter().enumerate() {
        let (o, took) = r.with_context(|| format!("sentence {}", i + 1))?;
        fallbacks += o.fallback.is_some() as usize;
        let mut line = o.tree.to_string();
        if scores {
            line.push_str(&format!("\t{}", o.log_score));
            if !no_timing {
                line.push_str(&format!("\t{:.3}", took.as_secs_f64() * 1e3));
            }
        }
        writeln!(out, "{line}").context("cannot write trees")?;
    }
    out.flush().context("cannot write trees")?;
    if !no_timing {
        let secs = elapsed.as_secs_f64();
        let rate = if secs > 0.0 { sentences.len() as f64 * 60.0 / secs } else { f64::INFINITY };
        eprintln!(
            "parsed {} sentences ({fallbacks} fallback) in {secs:.2}s: {rate:.1} sentences/minute",
            sentences.len()
        );
    } else if fallbacks > 0 {
        eprintln!("{fallbacks} fallback trees");
    }
    Ok(())
}

fn eval(common: &Common, gold: &Path, test: &Path, collapse_advp_prt: bool, exclude_root: bool) -> Result<()> {
    let cfg = common.file_config()?;
    let g = read_treebanks(&[gold.to_path_buf()], &cfg.reader)?;
    let t = read_treebanks(&[test.to_path_buf()], &cfg.reader)?;
    let opts = EvalOptions {
        collapse_advp_prt,
        exclude_root,
        punctuation: cfg.train.punctuation,
    };
    let report = evaluate(&g, &t, &opts)?;
    print!("{}", report.render());
    Ok(())
}

fn stats(common: &Common, input: &[PathBuf], dump_deps: bool) -> Result<()> {
    let cfg = common.file_config()?;
    let rules = common.rules()?;
    let trees = read_treebanks(input, &cfg.reader)?;
    let punct = &cfg.train.punctuation;
    let mut exs = Vec::with_capacity(trees.len());
    let mut stdout = io::stdout().lock();
    for (i, t) in trees.iter().enumerate() {
        match Extraction::from_tree(&cfg.train.prepare(t), &rules, punct) {
            Ok(ex) => {
                if dump_deps {
                    writeln!(stdout, "# tree {}\n{}", i + 1, ex.describe())?;
                }
                exs.push(ex);
            }
            Err(e) => log::warn!("tree {}: {e}", i + 1),
        }
    }
    let s = DistanceStats::from_extractions(&exs)?;
    write!(stdout, "{}", s.render())?;
    Ok(())
}

fn score(common: &Common, model: &Path, input: &Path, v: Option<u8>, explain: bool) -> Result<()> {
    let cfg = common.file_config()?;
    let rules = common.rules()?;
    let model = load_model(model)?;
    let v = v.map_or(cfg.parse.variant, variant);
    if v == Variant::TagDistributions {
        bail!("gold trees carry no tag distributions; use variant 1-3");
    }
    let est = Estimator::new(&model, v.tag_blind());
    let train = TrainConfig {
        punctuation: model.punctuation().clone(),
        collapse_unary: model.meta().collapse_unary,
    };
    let trees = read_treebanks(&[input.to_path_buf()], &cfg.reader)?;
    let mut stdout = io::stdout().lock();
    for (i, t) in trees.iter().enumerate() {
        match Extraction::from_tree(&train.prepare(t), &rules, model.punctuation()) {
            Ok(ex) => {
                let s = est.score_extraction(&ex);
                writeln!(stdout, "{}\t{}\t{}\t{}", i + 1, s.total(), s.dependencies, s.gaps)?;
                if explain {
                    write!(stdout, "{}", est.explain(&ex))?;
                }
            }
            Err(e) => writeln!(stdout, "{}\terror\t{e}", i + 1)?,
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.common.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    let c = &cli.common;
    match &cli.command {
        Command::Train { input, output, keep_unary } => train(c, input, output, *keep_unary),
        Command::Parse {
            model,
            input,
            output,
            search,
            scores,
            no_timing,
        } => parse(c, model, input.as_deref(), output.as_deref(), search, *scores, *no_timing),
        Command::Eval {
            gold,
            test,
            collapse_advp_prt,
            exclude_root,
        } => eval(c, gold, test, *collapse_advp_prt, *exclude_root),
        Command::Stats { input, dump_deps } => stats(c, input, *dump_deps),
        Command::Score {
            model,
            input,
            variant,
            explain,
        } => score(c, model, input, *variant, *explain),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
