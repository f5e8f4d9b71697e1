use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tgn_social::config::{RunConfig, RESOLVED_FILE};
use tgn_social::datagen::generate_corpus;
use tgn_social::eval::{evaluate, EvalOptions};
use tgn_social::experiments::{
    ablation_csv, compare_encodings, default_encoding_session, encoding_csv,
    load_external_messages, run_ablation, variant_config,
};
use tgn_social::features::{dump_messages, MessageSource};
use tgn_social::rng::derive_seed;
use tgn_social::session::{Corpus, SplitPlan};
use tgn_social::tgn::PreparedSession;
use tgn_social::train::{
    log_to_jsonl, train_phase1, train_phase2, Checkpoint, EpochLog, TrainConfig, TrainSession,
};
use tgn_social::{Error, Result};

const PHASE1_CKPT: &str = "phase1.ckpt";
const PHASE2_CKPT: &str = "phase2.ckpt";
const LOG_FILE: &str = "log.jsonl";
const METRICS_FILE: &str = "metrics.json";

#[derive(Parser)]
#[command(name = "tgn-social", version, about = "Temporal graph network for multiparty gaze")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (corpus for `generate`, run directory otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config override `dotted.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus and its manifest.
    Generate(Common),
    /// Train phase 1 (next gaze) and phase 2 (next speaker).
    Train {
        #[command(flatten)]
        common: Common,
        /// Run only this phase; phase 2 alone needs an existing phase1.ckpt.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        phase: Option<u8>,
    },
    /// Evaluate the trained model and the history baseline on the test split.
    Eval(Common),
    /// Train and score the named model variants.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated variant names.
        #[arg(long)]
        variants: Option<String>,
    },
    /// Write the one-hot message vectors of every event, one CSV per session.
    EncodeDump(Common),
    /// Train on one session, score the rest by facilitator type.
    CompareEncodings(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(c) => cmd_generate(&c),
        Command::Train { common, phase } => cmd_train(&common, phase),
        Command::Eval(c) => cmd_eval(&c),
        Command::Ablate { common, variants } => cmd_ablate(&common, variants.as_deref()),
        Command::EncodeDump(c) => cmd_encode_dump(&c),
        Command::CompareEncodings(c) => cmd_compare_encodings(&c),
    }
}

/// Config file (or `fallback`, or defaults) with `--seed` and `--set`
/// applied.
fn resolve(common: &Common, fallback: Option<&Path>) -> Result<RunConfig> {
    let base = match (&common.config, fallback) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(p)) if p.exists() => RunConfig::load(p)?,
        _ => RunConfig::default(),
    };
    let mut overrides = common.set.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    base.with_overrides(&overrides)
}

fn resolve_run(common: &Common) -> Result<RunConfig> {
    let mut cfg = resolve(common, None)?;
    if let Some(out) = &common.out {
        cfg.run_dir = out.clone();
    }
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn save_resolved(cfg: &RunConfig, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join(RESOLVED_FILE), &cfg.to_json())
}

fn cmd_generate(common: &Common) -> Result<()> {
    let mut cfg = resolve(common, None)?;
    if let Some(out) = &common.out {
        cfg.corpus_dir = out.clone();
    }
    let g = &cfg.generate;
    let manifest = generate_corpus(&g.templates, g.count_per_template, cfg.seed, &cfg.corpus_dir)?;
    eprintln!(
        "wrote {} sessions to {}",
        manifest.sessions.len(),
        cfg.corpus_dir.display()
    );
    Ok(())
}

struct Loaded {
    corpus: Corpus,
    plan: SplitPlan,
}

fn load_corpus(cfg: &RunConfig) -> Result<Loaded> {
    let corpus = Corpus::load(&cfg.corpus_dir)?;
    let plan = corpus.split(cfg.train.validation_fraction)?;
    Ok(Loaded { corpus, plan })
}

fn train_sessions(l: &Loaded, cfg: &TrainConfig) -> Result<Vec<TrainSession>> {
    l.corpus
        .select(&l.plan.train)?
        .into_iter()
        .map(|s| TrainSession::new(s, &MessageSource::OneHot, cfg.validation_fraction))
        .collect()
}

fn test_sessions(l: &Loaded) -> Result<Vec<PreparedSession>> {
    l.corpus
        .select(&l.plan.test)?
        .into_iter()
        .map(|s| PreparedSession::new(s, &MessageSource::OneHot))
        .collect()
}

fn report_epochs(log: &[EpochLog]) {
    for e in log {
        eprintln!(
            "phase {} epoch {:>3}  loss {:.5}  val_f1 {:.4}  val_acc {:.4}  {:.1}s",
            e.phase, e.epoch, e.train_loss, e.val_f1, e.val_acc, e.seconds
        );
    }
}

fn read_phase1_log(path: &Path) -> Result<Vec<EpochLog>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let e: EpochLog = serde_json::from_str(line).map_err(|err| Error::EventLine {
            line: i + 1,
            message: format!("{}: {err}", path.display()),
        })?;
        if e.phase == 1 {
            out.push(e);
        }
    }
    Ok(out)
}

fn cmd_train(common: &Common, phase: Option<u8>) -> Result<()> {
    let cfg = resolve_run(common)?;
    let loaded = load_corpus(&cfg)?;
    let sessions = train_sessions(&loaded, &cfg.train)?;
    let dir = &cfg.run_dir;
    save_resolved(&cfg, dir)?;
    write(
        &dir.join("split.json"),
        &(serde_json::to_string_pretty(&loaded.plan).expect("split serializes") + "\n"),
    )?;

    let mut log = Vec::new();
    let phase1 = if phase == Some(2) {
        log = read_phase1_log(&dir.join(LOG_FILE))?;
        Checkpoint::load(&dir.join(PHASE1_CKPT))?
    } else {
        let p1 = train_phase1(&sessions, &cfg.train, cfg.seed)?;
        report_epochs(&p1.log);
        log.extend(p1.log);
        let ck = Checkpoint {
            phase: 1,
            model: cfg.train.model.clone(),
            params: p1.params,
        };
        ck.save(&dir.join(PHASE1_CKPT))?;
        ck
    };
    if phase != Some(1) {
        if phase1.model != cfg.train.model {
            return Err(Error::Config(
                "phase1.ckpt was trained with a different model config".into(),
            ));
        }
        let p2 = train_phase2(&sessions, &phase1.params, &cfg.train, cfg.seed)?;
        report_epochs(&p2.log);
        log.extend(p2.log);
        Checkpoint {
            phase: 2,
            model: cfg.train.model.clone(),
            params: p2.params,
        }
        .save(&dir.join(PHASE2_CKPT))?;
    }
    write(&dir.join(LOG_FILE), &log_to_jsonl(&log))?;
    eprintln!("run written to {}", dir.display());
    Ok(())
}

fn cmd_eval(common: &Common) -> Result<()> {
    let run_dir = common
        .out
        .clone()
        .unwrap_or_else(|| RunConfig::default().run_dir);
    let mut cfg = resolve(common, Some(&run_dir.join(RESOLVED_FILE)))?;
    if let Some(out) = &common.out {
        cfg.run_dir = out.clone();
    }
    let dir = &cfg.run_dir;
    let ck_path = [PHASE2_CKPT, PHASE1_CKPT]
        .iter()
        .map(|f| dir.join(f))
        .find(|p| p.exists())
        .unwrap_or_else(|| dir.join(PHASE2_CKPT));
    let ck = Checkpoint::load(&ck_path)?;
    let loaded = load_corpus(&cfg)?;
    let test = test_sessions(&loaded)?;
    let opts = EvalOptions {
        batch_window: cfg.train.batch_window,
        seed: derive_seed(cfg.seed, "eval", 0),
    };
    let report = evaluate(&ck.model, &ck.params, &test, &opts)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write(&dir.join(METRICS_FILE), &json)?;
    for (task, c) in [("next_gaze", &report.next_gaze), ("next_speaker", &report.next_speaker)] {
        eprintln!(
            "{task:<13} model f1 {:.4} acc {:.4} | history f1 {:.4} acc {:.4} | delta f1 {:+.4}",
            c.model.f1, c.model.accuracy, c.baseline.f1, c.baseline.accuracy, c.delta.f1
        );
    }
    Ok(())
}

fn cmd_ablate(common: &Common, variants: Option<&str>) -> Result<()> {
    let mut cfg = resolve_run(common)?;
    if let Some(list) = variants {
        let names: Vec<String> = list.split(',').map(|s| s.trim().to_string()).collect();
        for n in &names {
            variant_config(n, &cfg.train.model)?;
        }
        cfg.ablation.variants = names;
    }
    let loaded = load_corpus(&cfg)?;
    let train = train_sessions(&loaded, &cfg.train)?;
    let test = test_sessions(&loaded)?;
    save_resolved(&cfg, &cfg.run_dir)?;
    let base = TrainConfig {
        max_epochs: cfg.ablation.max_epochs,
        ..cfg.train.clone()
    };
    let rows = run_ablation(&cfg.ablation.variants, &train, &test, &base, cfg.seed)?;
    let csv = ablation_csv(&rows);
    write(&cfg.run_dir.join("ablation.csv"), &csv)?;
    eprint!("{csv}");
    Ok(())
}

fn cmd_encode_dump(common: &Common) -> Result<()> {
    let cfg = resolve(common, None)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| cfg.run_dir.join("messages"));
    let corpus = Corpus::load(&cfg.corpus_dir)?;
    create_dir(&out)?;
    for s in &corpus.sessions {
        let rows = MessageSource::OneHot.features(s)?;
        write(&out.join(format!("{}.messages.csv", s.id())), &dump_messages(&rows))?;
    }
    eprintln!("wrote {} message files to {}", corpus.sessions.len(), out.display());
    Ok(())
}

fn cmd_compare_encodings(common: &Common) -> Result<()> {
    let cfg = resolve_run(common)?;
    let loaded = load_corpus(&cfg)?;
    let train_id = match &cfg.encodings.train_session {
        Some(id) => id.clone(),
        None => default_encoding_session(&loaded.corpus, &loaded.plan)?,
    };
    let external = match &cfg.encodings.external_messages_dir {
        Some(dir) => Some(load_external_messages(dir, &loaded.corpus)?),
        None => None,
    };
    save_resolved(&cfg, &cfg.run_dir)?;
    let rows = compare_encodings(&loaded.corpus, &train_id, &cfg.train, cfg.seed, external.as_ref())?;
    let csv = encoding_csv(&rows);
    write(&cfg.run_dir.join("encoding_table.csv"), &csv)?;
    eprint!("{csv}");
    Ok(())
}
