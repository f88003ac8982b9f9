use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use dgkit::corpus::{self, CleanConfig, Format, McqItem, Ratios, RawRecord, SplitManifest, TrueFalsePatterns};
use dgkit::evalharness::{self, Assertion, RunSet, SampleSpec};
use dgkit::jsonl;
use dgkit::maskpattern::{self, MaskKind, Pattern, TrainingExample, DEFAULT_JOINER};
use dgkit::metrics::{self, DistractorRecord, Pairing};
use dgkit::multitask::{self, MixtureMode, PlanInput, TaskWeights};
use dgkit::promptforge::{self, Forge, ForgeConfig, Stem, Strategy, TemplateSet};
use dgkit::taxonomy::{self, PatternSet};

/// Data toolkit for Chinese multiple-choice distractor generation.
#[derive(Parser)]
#[command(name = "dgkit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw dataset files into JSONL records.
    Ingest {
        /// c3, logiqa or generic.
        #[arg(long)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Drop True/False, short and malformed records; keep 3 distractors.
    Clean {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Where to write the cleaning report (default: stderr).
        #[arg(long)]
        report: Option<PathBuf>,
        /// JSON list of option sets, e.g. [["对","错"],["是","否"]].
        #[arg(long)]
        true_false: Option<PathBuf>,
    },
    /// Partition items into train/dev/test.
    Split {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "0.8,0.1,0.1", conflicts_with = "manifest")]
        ratios: Ratios,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reuse a stored partition instead of drawing one.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Item counts, question classes and context-length histogram.
    Stats {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
    /// Tag every item as templated or non-templated.
    Classify {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
    /// Hit count per template pattern.
    Audit {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
    /// Build task stems, routed by question class.
    Forge {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "ft2")]
        strategy: Strategy,
        /// JSON template set overriding the shipped prompts.
        #[arg(long)]
        templates: Option<PathBuf>,
        /// JSON forge configuration (lengths, separator, target schemes).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        patterns: Option<PathBuf>,
        /// Emit only distractor-generation stems.
        #[arg(long)]
        dg_only: bool,
    },
    /// Turn stems into training examples.
    Expand {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// e2e or seq.
        #[arg(long, default_value = "e2e")]
        pattern: Pattern,
        /// Add every distinct ordering of each distractor triple.
        #[arg(long)]
        shuffle: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "sMASK")]
        mask_kind: MaskKind,
        #[arg(long, default_value = DEFAULT_JOINER)]
        joiner: String,
    },
    /// Weighted, interleaved training plan.
    Plan {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// summed or alternating.
        #[arg(long, default_value = "summed")]
        mode: MixtureMode,
    },
    /// Score predicted distractors against references.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value = "positional")]
        pairing: Pairing,
        /// Include per-record scores in the report.
        #[arg(long)]
        per_record: bool,
    },
    /// Compare runs and check ratio assertions; exits 1 if one fails.
    Compare {
        #[arg(long)]
        runs: PathBuf,
        /// e.g. "bleu4_ratio>=2.5" or "bleu4_increasing"; repeatable.
        #[arg(long = "assert")]
        assertions: Vec<String>,
    },
    /// Rate distractors interactively on a 1-5 scale.
    Annotate {
        /// Item file; its own distractors are rated unless --pred is given.
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        rater: String,
        /// Label of the system being rated.
        #[arg(long, default_value = "")]
        model: String,
        /// Items per bucket: short,medium,long.
        #[arg(long, default_value = "100,100,100")]
        sample: SampleSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Session file; ratings already in it are skipped.
        #[arg(long)]
        session: PathBuf,
    },
    /// Aggregate annotation sessions into a per-model table.
    Report {
        /// Directory of session .jsonl files.
        #[arg(long)]
        annotations: PathBuf,
        /// json or table.
        #[arg(long, default_value = "json")]
        format: String,
    },
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    jsonl::read(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn write_jsonl<T: Serialize>(path: Option<&Path>, values: &[T]) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            jsonl::write(BufWriter::new(file), values)?;
        }
        None => jsonl::write(io::stdout().lock(), values)?,
    }
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_patterns(path: Option<&Path>) -> Result<PatternSet> {
    match path {
        Some(p) => PatternSet::parse(&read_text(p)?).with_context(|| format!("pattern file {}", p.display())),
        None => Ok(PatternSet::default()),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Ingest { format, output, inputs } => {
            let mut records = Vec::new();
            for path in &inputs {
                let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
                records.extend(corpus::parse(format, &bytes).with_context(|| format!("parsing {}", path.display()))?);
            }
            eprintln!("ingested {} records", records.len());
            write_jsonl(output.as_deref(), &records)?;
        }
        Command::Clean {
            input,
            output,
            report,
            true_false,
        } => {
            let records: Vec<RawRecord> = read_jsonl(&input)?;
            let mut cfg = CleanConfig::default();
            if let Some(p) = true_false {
                let sets: Vec<Vec<String>> = serde_json::from_str(&read_text(&p)?)?;
                cfg.true_false = TrueFalsePatterns::new(sets);
            }
            let (items, rep) = corpus::clean(&records, &cfg);
            write_jsonl(output.as_deref(), &items)?;
            let text = serde_json::to_string_pretty(&rep)?;
            match report {
                Some(p) => std::fs::write(&p, text + "\n")?,
                None => eprintln!("{text}"),
            }
        }
        Command::Split {
            input,
            out_dir,
            ratios,
            seed,
            manifest,
        } => {
            let items: Vec<McqItem> = read_jsonl(&input)?;
            let (splits, manifest) = match manifest {
                Some(p) => {
                    let m: SplitManifest = serde_json::from_str(&read_text(&p)?)?;
                    let (splits, unassigned) = corpus::apply_manifest(&items, &m)?;
                    if !unassigned.is_empty() {
                        eprintln!("{} items are not listed in the manifest", unassigned.len());
                    }
                    (splits, m)
                }
                None => corpus::split(&items, ratios, seed),
            };
            std::fs::create_dir_all(&out_dir)?;
            for (name, part) in [("train", &splits.train), ("dev", &splits.dev), ("test", &splits.test)] {
                write_jsonl(Some(&out_dir.join(format!("{name}.jsonl"))), part)?;
            }
            std::fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
            eprintln!(
                "train {} / dev {} / test {}",
                splits.train.len(),
                splits.dev.len(),
                splits.test.len()
            );
        }
        Command::Stats { input, patterns } => {
            let items: Vec<McqItem> = read_jsonl(&input)?;
            print_json(&corpus::stats(&items, &load_patterns(patterns.as_deref())?))?;
        }
        Command::Classify { input, output, patterns } => {
            let mut items: Vec<McqItem> = read_jsonl(&input)?;
            taxonomy::tag_items(&mut items, &load_patterns(patterns.as_deref())?)?;
            write_jsonl(output.as_deref(), &items)?;
        }
        Command::Audit { input, patterns } => {
            let items: Vec<McqItem> = read_jsonl(&input)?;
            print_json(&taxonomy::audit(&items, &load_patterns(patterns.as_deref())?))?;
        }
        Command::Forge {
            input,
            output,
            strategy,
            templates,
            config,
            patterns,
            dg_only,
        } => {
            let items: Vec<McqItem> = read_jsonl(&input)?;
            let patterns = load_patterns(patterns.as_deref())?;
            let mut forge = Forge::default();
            if let Some(p) = templates {
                forge.templates = TemplateSet::from_json(&read_text(&p)?)?;
            }
            if let Some(p) = config {
                forge.config = serde_json::from_str::<ForgeConfig>(&read_text(&p)?)?;
            }
            let mut stems: Vec<Stem> = Vec::new();
            for item in &items {
                if dg_only {
                    stems.push(forge.dg(item, strategy)?);
                    continue;
                }
                let class = match &item.tags.class {
                    Some(c) => c.clone(),
                    None => taxonomy::classify(&item.question, &patterns)?,
                };
                stems.extend(promptforge::route(item, &class, strategy, &forge).with_context(|| format!("item {}", item.id))?);
            }
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for s in &stems {
                *counts.entry(s.task.to_string()).or_default() += 1;
            }
            eprintln!("{} stems {:?}", stems.len(), counts);
            write_jsonl(output.as_deref(), &stems)?;
        }
        Command::Expand {
            input,
            output,
            pattern,
            shuffle,
            seed,
            mask_kind,
            joiner,
        } => {
            let mut stems: Vec<Stem> = read_jsonl(&input)?;
            if shuffle {
                let (expanded, report) = maskpattern::shuffle_expand(&stems, seed)?;
                eprintln!("{}", serde_json::to_string(&report)?);
                stems = expanded;
            }
            let examples: Vec<TrainingExample> = maskpattern::emit_all(&stems, pattern, mask_kind, &joiner)?;
            eprintln!("{} examples", examples.len());
            write_jsonl(output.as_deref(), &examples)?;
        }
        Command::Plan {
            input,
            output,
            gamma,
            delta,
            seed,
            mode,
        } => {
            let examples: Vec<PlanInput> = read_jsonl(&input)?;
            let plan = multitask::plan_mixture(&examples, TaskWeights::new(gamma, delta)?, seed, mode);
            write_jsonl(output.as_deref(), &plan)?;
        }
        Command::Eval {
            pred,
            reference,
            pairing,
            per_record,
        } => {
            let preds: Vec<DistractorRecord> = read_jsonl(&pred)?;
            let refs: Vec<DistractorRecord> = read_jsonl(&reference)?;
            let mut report = metrics::score_run(&preds, &refs, pairing)?;
            if !per_record {
                report.per_record.clear();
            }
            print_json(&report)?;
        }
        Command::Compare { runs, assertions } => {
            let set = RunSet::load(&runs)?;
            let parsed = set
                .assertions
                .iter()
                .chain(&assertions)
                .map(|a| a.parse::<Assertion>())
                .collect::<Result<Vec<_>, _>>()?;
            let base = runs.parent().unwrap_or(Path::new("."));
            let cmp = evalharness::compare_runs(&set, base, &parsed)?;
            print_json(&cmp)?;
            for a in &cmp.assertions {
                eprintln!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.assertion, a.detail);
            }
            if !cmp.all_passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Annotate {
            items,
            pred,
            rater,
            model,
            sample,
            seed,
            session,
        } => {
            let items: Vec<McqItem> = read_jsonl(&items)?;
            let preds: Option<Vec<DistractorRecord>> = pred.map(|p| read_jsonl(&p)).transpose()?;
            let tasks = evalharness::tasks_from(&items, preds.as_deref())?;
            let tasks = evalharness::sample_tasks(&tasks, sample, seed)?;
            let done: HashSet<String> = evalharness::load_session(&session)?
                .into_iter()
                .filter(|r| r.rater_id == rater && r.model == model)
                .map(|r| r.item_id)
                .collect();
            let sink = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&session)
                .with_context(|| format!("cannot open session {}", session.display()))?;
            let stdin = io::stdin();
            if !stdin.is_terminal() {
                eprintln!("reading scores from non-interactive input");
            }
            let outcome = evalharness::annotate(&tasks, &rater, &model, &done, stdin.lock(), io::stdout().lock(), sink)?;
            eprintln!(
                "{} new ratings, {} from earlier sessions, {}",
                outcome.records.len(),
                outcome.resumed,
                if outcome.completed { "session complete" } else { "session incomplete" }
            );
        }
        Command::Report { annotations, format } => {
            let mut records = Vec::new();
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&annotations)
                .with_context(|| format!("cannot list {}", annotations.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            paths.sort();
            for p in &paths {
                records.extend(evalharness::load_session(p)?);
            }
            if records.is_empty() {
                bail!("no annotation records under {}", annotations.display());
            }
            let report = evalharness::aggregate_annotations(&records);
            match format.as_str() {
                "json" => print_json(&report)?,
                "table" => print!("{}", evalharness::render_table(&report)),
                other => bail!("unknown format `{other}` (expected json or table)"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
