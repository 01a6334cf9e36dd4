//! `smartpaste`: corpus generation, instance extraction, training,
//! evaluation and variable suggestion for pasted MiniLang snippets.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smartpaste::dataflow::{dump_dataflow, program_use_graph};
use smartpaste::eval::evaluate;
use smartpaste::infer::{paste, IcmConfig, IcmUpdate};
use smartpaste::minilang::TypedProgram;
use smartpaste::models::{ContextEncoder, Encoder, ModelConfig, Scene, TypeMode, UsageVector, Variant};
use smartpaste::taskgen::{
    extract_corpus, generate_corpus, list_sources, read_jsonl, split_corpus, write_corpus, write_jsonl, Profile, TaskInstance,
    DEFAULT_MAX_TOKENS,
};
use smartpaste::train::{fit, Checkpoint, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "smartpaste", version, about = "Fill in the variables of code pasted into MiniLang programs", args_override_self = true)]
struct Cli {
    /// File of `key=value` lines supplying flag defaults (flag names without dashes).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Upper bound on worker threads; all work currently runs on one thread.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corpus, one directory per project.
    Generate(GenerateArgs),
    /// Extract task instances from every `.ml0` file of a corpus.
    Extract(ExtractArgs),
    /// Split a corpus by file into train/valid/test/unseen partitions and extract each.
    Split(SplitArgs),
    /// Train a model and write its best-validation checkpoint.
    Train(TrainArgs),
    /// Report accuracy, MRR, exact-match and same-type metrics.
    Eval(EvalArgs),
    /// Paste a snippet into a program and choose its variables.
    Paste(PasteArgs),
    /// Print lexical and data-flow neighbours of every variable occurrence.
    DumpDataflow(DumpDataflowArgs),
    /// Print usage vectors of every candidate of every placeholder as JSON lines.
    DumpUsageVectors(DumpUsageArgs),
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Seed for all randomness.
    #[arg(long, env = "SMARTPASTE_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = 4)]
    projects: usize,
    #[arg(long, default_value_t = 20)]
    files_per_project: usize,
    /// mixed, typesep or loops.
    #[arg(long, default_value = "mixed")]
    profile: Profile,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    max_tokens: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    corpus: PathBuf,
    /// Fraction of projects held out entirely.
    #[arg(long, default_value_t = 0.0)]
    unseen_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    max_tokens: usize,
    /// Directory receiving split.json and one instance file per partition.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// loc, avgg, grug, grud or hybrid.
    #[arg(long, default_value = "hybrid")]
    variant: Variant,
    /// logbilinear or gru.
    #[arg(long, default_value = "logbilinear")]
    context_encoder: ContextEncoder,
    /// Context and usage vector size; also the embedding size.
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    /// Tokens on each side of a context window.
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// Lexical usages on each side.
    #[arg(long, default_value_t = 14)]
    lex_len: usize,
    /// Data-flow tree depth.
    #[arg(long, default_value_t = 15)]
    tree_depth: usize,
    /// Treat every variable as having the unknown type.
    #[arg(long)]
    no_types: bool,
    /// Lexemes seen fewer times in the training files map to the unknown row.
    #[arg(long, default_value_t = 2)]
    min_lexeme_count: usize,
}

impl ModelArgs {
    fn config(&self) -> ModelConfig {
        ModelConfig {
            variant: self.variant,
            context_encoder: self.context_encoder,
            embed: self.hidden,
            hidden: self.hidden,
            window: self.window,
            lex_len: self.lex_len,
            tree_depth: self.tree_depth,
            use_types: !self.no_types,
            min_lexeme_count: self.min_lexeme_count,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    model: ModelArgs,
    /// Training instances (JSON lines).
    #[arg(long)]
    data: PathBuf,
    /// Validation instances; when absent, a tenth of the training files is held out.
    #[arg(long)]
    valid: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Epochs without validation improvement before stopping.
    #[arg(long, default_value_t = 3)]
    patience: usize,
    /// Checkpoint to continue from; its model settings win over the flags.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Checkpoint path.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
    /// Also append the per-epoch log to this file.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IcmArgs {
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 10)]
    max_sweeps: usize,
    /// Move each placeholder to its own conditional argmax instead of the
    /// assignment with the best total pseudo-likelihood.
    #[arg(long)]
    conditional: bool,
}

impl IcmArgs {
    fn config(&self) -> IcmConfig {
        IcmConfig {
            restarts: self.restarts,
            max_sweeps: self.max_sweeps,
            update: if self.conditional { IcmUpdate::Conditional } else { IcmUpdate::Joint },
        }
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    icm: IcmArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Skip the structured (full-snippet) evaluation.
    #[arg(long)]
    no_full: bool,
    /// Write the report as JSON here as well.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PasteArgs {
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    icm: IcmArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    snippet: PathBuf,
    /// Insertion point, 1-based `LINE:COL`.
    #[arg(long, value_parser = parse_position)]
    at: (u32, u32),
    /// Expected variant of the checkpoint.
    #[arg(long)]
    variant: Option<Variant>,
    /// Write the rewritten program here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DumpDataflowArgs {
    #[arg(long)]
    program: PathBuf,
}

#[derive(Debug, Args)]
struct DumpUsageArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Instances to dump, from the start of the file.
    #[arg(long, default_value_t = 1)]
    limit: usize,
}

fn parse_position(s: &str) -> Result<(u32, u32), String> {
    let (l, c) = s.split_once(':').ok_or_else(|| format!("expected LINE:COL, got {s:?}"))?;
    let num = |x: &str| x.parse::<u32>().ok().filter(|&n| n > 0).ok_or_else(|| format!("bad position {s:?}"));
    Ok((num(l)?, num(c)?))
}

/// `argv` with `--key value` pairs from the config file inserted right after
/// the subcommand, so that flags given on the command line take precedence.
fn with_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let Some(i) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv);
    };
    let path = argv.get(i + 1).ok_or("--config needs a file")?;
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("{path}:{}: expected key=value", n + 1))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        match v {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            _ => extra.extend([format!("--{k}"), v.to_string()]),
        }
    }
    let mut rest: Vec<String> = argv[..i].iter().chain(&argv[i + 2..]).cloned().collect();
    let sub = rest.iter().skip(1).position(|a| !a.starts_with('-')).map_or(rest.len(), |p| p + 2);
    rest.splice(sub..sub, extra);
    Ok(rest)
}

fn read_instances(path: &Path) -> Result<Vec<TaskInstance>> {
    let insts = read_jsonl(path)?;
    if insts.is_empty() {
        bail!("{}: no instances", path.display());
    }
    Ok(insts)
}

/// Moves every instance of a seeded tenth of the files out of `train`.
fn hold_out(train: Vec<TaskInstance>, seed: u64) -> Result<(Vec<TaskInstance>, Vec<TaskInstance>)> {
    let files: BTreeSet<String> = train.iter().map(|i| i.program.file_id.clone()).collect();
    if files.len() < 2 {
        bail!("insufficient data: need at least two files to hold out validation data (or pass --valid)");
    }
    let mut files: Vec<String> = files.into_iter().collect();
    files.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = files.len().div_ceil(10);
    let held: BTreeSet<&String> = files[..n].iter().collect();
    Ok(train.into_iter().partition(|i| !held.contains(&i.program.file_id)))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let files = generate_corpus(a.seed.seed, a.projects, a.files_per_project, a.profile);
            write_corpus(&a.out, &files)?;
            println!("wrote {} files to {}", files.len(), a.out.display());
        }
        Command::Extract(a) => {
            let insts = extract_corpus(&a.corpus, None, a.max_tokens)?;
            write_jsonl(&a.out, &insts)?;
            println!("wrote {} instances to {}", insts.len(), a.out.display());
        }
        Command::Split(a) => {
            let files = list_sources(&a.corpus)?;
            let split = split_corpus(&files, a.seed.seed, a.unseen_fraction)?;
            fs::create_dir_all(&a.out).with_context(|| a.out.display().to_string())?;
            let path = a.out.join("split.json");
            fs::write(&path, serde_json::to_string_pretty(&split)? + "\n").with_context(|| path.display().to_string())?;
            for (name, part) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test), ("unseen_test", &split.unseen_test)] {
                if part.is_empty() {
                    continue;
                }
                let insts = extract_corpus(&a.corpus, Some(part), a.max_tokens)?;
                write_jsonl(&a.out.join(format!("{name}.jsonl")), &insts)?;
                println!("{name}: {} files, {} instances", part.len(), insts.len());
            }
        }
        Command::Train(a) => {
            let data = read_instances(&a.data)?;
            let (train, valid) = match &a.valid {
                Some(v) => (data, read_instances(v)?),
                None => hold_out(data, a.seed.seed)?,
            };
            let resume = a.resume.as_deref().map(Checkpoint::load).transpose()?;
            let model = resume.as_ref().map_or_else(|| a.model.config(), |c| c.config.model);
            let config = TrainConfig {
                model,
                batch_size: a.batch_size,
                epochs: a.epochs,
                lr: a.lr,
                seed: a.seed.seed,
                patience: a.patience,
                checkpoint: Some(a.out.clone()),
            };
            let mut log: Box<dyn Write> = match &a.log {
                Some(p) => Box::new(Tee(fs::OpenOptions::new().create(true).append(true).open(p).with_context(|| p.display().to_string())?)),
                None => Box::new(std::io::stdout()),
            };
            let out = fit(&config, &train, &valid, resume, &mut log)?;
            eprintln!(
                "best epoch {} (valid accuracy {:.4}) saved to {}",
                out.checkpoint.epoch,
                out.checkpoint.best_valid_accuracy,
                a.out.display()
            );
        }
        Command::Eval(a) => {
            let ck = Checkpoint::load(&a.model)?;
            let model = ck.model()?;
            let data = read_instances(&a.data)?;
            let icm = a.icm.config();
            let report = evaluate(&model, &data, (!a.no_full).then_some((&icm, a.seed.seed)))?;
            println!("{report}");
            if let Some(p) = &a.json {
                fs::write(p, serde_json::to_string_pretty(&report)? + "\n").with_context(|| p.display().to_string())?;
            }
        }
        Command::Paste(a) => {
            let ck = Checkpoint::load(&a.model)?;
            if let Some(v) = a.variant.filter(|&v| v != ck.config.model.variant) {
                bail!("{} holds a {} model, not {v}", a.model.display(), ck.config.model.variant);
            }
            let model = ck.model()?;
            let target = fs::read_to_string(&a.target).with_context(|| a.target.display().to_string())?;
            let snippet = fs::read_to_string(&a.snippet).with_context(|| a.snippet.display().to_string())?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed.seed);
            let res = paste(&model, &target, &snippet, a.at.0, a.at.1, &a.icm.config(), &mut rng)?;
            eprint!("{}", res.report);
            match &a.out {
                Some(p) => fs::write(p, &res.source).with_context(|| p.display().to_string())?,
                None => print!("{}", res.source),
            }
        }
        Command::DumpDataflow(a) => {
            let src = fs::read_to_string(&a.program).with_context(|| a.program.display().to_string())?;
            let program = TypedProgram::from_source(&src, &a.program.display().to_string())?;
            print!("{}", dump_dataflow(&program, &program_use_graph(&program)));
        }
        Command::DumpUsageVectors(a) => {
            let model = Checkpoint::load(&a.model)?.model()?;
            let data = read_instances(&a.data)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for inst in data.iter().take(a.limit) {
                let scene = Scene::new(inst);
                let mut enc = Encoder::new(&model, TypeMode::Eval);
                enc.set_scene(&scene);
                let truth = inst.truth();
                for ph in &inst.placeholders {
                    for &v in &ph.candidates {
                        let n = enc.usage_at(ph.token, v, &truth)?;
                        let u = UsageVector { token: ph.token, symbol: v, variant: model.variant(), value: enc.value(n).to_vec() };
                        writeln!(out, "{}", serde_json::json!({ "instance": inst.id, "name": inst.program.symbol(v).name, "usage": u }))?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Writes to a file and to stdout.
struct Tee(fs::File);

impl Write for Tee {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.write_all(buf)?;
        std::io::stdout().write_all(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.0.flush()?;
        std::io::stdout().flush()
    }
}

fn main() -> ExitCode {
    let argv = match with_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
