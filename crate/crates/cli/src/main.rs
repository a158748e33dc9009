//! `guesswhat` command-line runner.

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use guesswhat::checkpoint::ModuleId;
use guesswhat::config::{parse_override, Config};
use guesswhat::data::{dataset_stats, parse_games};
use guesswhat::decider::DmVariant;
use guesswhat::game::{interactive_play, save_transcripts, PlayMode};
use guesswhat::pipeline::{self, SPLITS};
use guesswhat::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "guesswhat", version, about = "Train and evaluate ask-or-guess GuessWhat?! questioners")]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dimension profile: toy or paper.
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Question cap for selfplay and play.
    #[arg(long, global = true)]
    maxq: Option<usize>,
    /// baseline, dm1 or dm2 (restricts selfplay/eval-sweep to one mode).
    #[arg(long, global = true)]
    variant: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Working directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Any configuration key, as key=value. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic toy world (train/val/test games and features).
    GenToyworld {
        /// Number of training games.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Train one module (oracle, guesser, qgen, dm1, dm2) or all in order.
    Train { module: String },
    /// Self-play every configured mode at --maxq.
    Selfplay,
    /// Self-play every configured mode at every cap in sweep_maxq.
    EvalSweep {
        /// Comma-separated caps, e.g. 5,8,10.
        #[arg(long)]
        maxqs: Option<String>,
    },
    /// Analyse transcript dumps (default: the last eval-sweep).
    Analyze { transcripts: Vec<PathBuf> },
    /// Play one game answering the questions yourself.
    Play {
        /// Game id in the configured split (default: its first game).
        #[arg(long)]
        game: Option<i64>,
    },
    /// Dataset statistics of game files (default: the data directory's splits).
    Stats { files: Vec<PathBuf> },
}

fn config_from(cli: &Cli) -> Result<Config> {
    let mut flags = Vec::new();
    for s in &cli.set {
        flags.push(parse_override(s)?);
    }
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            flags.push((k.to_string(), v));
        }
    };
    push("seed", cli.seed.map(|v| v.to_string()));
    push("profile", cli.profile.clone());
    push("maxq", cli.maxq.map(|v| v.to_string()));
    push("jobs", cli.jobs.map(|v| v.to_string()));
    push("out", cli.out.as_ref().map(|p| p.display().to_string()));
    match &cli.command {
        Command::GenToyworld { n } => push("n_games", n.map(|v| v.to_string())),
        Command::EvalSweep { maxqs } => push("sweep_maxq", maxqs.clone()),
        _ => {}
    }
    if let Some(v) = &cli.variant {
        if v != "baseline" {
            v.parse::<DmVariant>()?;
        }
        push("modes", Some(v.clone()));
    }
    let cfg = Config::resolve(cli.config.as_deref(), &flags)?;
    pipeline::profile_of(&cfg)?;
    Ok(cfg)
}

fn modules_for(arg: &str) -> Result<Vec<ModuleId>> {
    if arg == "all" {
        Ok(ModuleId::TRAIN_ORDER.to_vec())
    } else {
        Ok(vec![arg.parse()?])
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config_from(&cli)?;
    let jobs: usize = cfg.get("jobs")?;
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    }
    info!("effective configuration:\n{}", cfg.echo_sources());
    match &cli.command {
        Command::GenToyworld { .. } => {
            let dir = pipeline::gen_toyworld(&cfg, cli.force)?;
            println!("toy world written to {}", dir.display());
        }
        Command::Train { module } => {
            for r in pipeline::train_modules(&cfg, &modules_for(module)?, cli.force)? {
                let acc = if r.test_accuracy.is_finite() {
                    format!(", test accuracy {:.4}", r.test_accuracy)
                } else {
                    String::new()
                };
                println!(
                    "{}: best epoch {} of {}, val loss {:.5}, test loss {:.5}{acc}",
                    r.module,
                    r.log.best_epoch,
                    r.log.epochs.len(),
                    r.log.best_val_loss,
                    r.test_loss
                );
            }
        }
        Command::Selfplay | Command::EvalSweep { .. } => {
            let run = if matches!(cli.command, Command::Selfplay) {
                pipeline::run_selfplay(&cfg)?
            } else {
                pipeline::run_eval_sweep(&cfg)?
            };
            println!("mode,maxq,accuracy,mean_questions,pct_decided");
            for r in &run.rows {
                println!("{},{},{:.4},{:.4},{:.4}", r.mode, r.maxq, r.accuracy, r.mean_questions, r.pct_decided);
            }
            if !run.failures.is_empty() {
                eprintln!("{} games failed; see failures.tsv", run.failures.len());
            }
            println!("outputs in {}", run.dir.display());
        }
        Command::Analyze { transcripts } => {
            let (report, dir) = pipeline::run_analyze(&cfg, transcripts)?;
            print!("{}", guesswhat::analysis::report::summary_text(&report));
            println!("outputs in {}", dir.display());
        }
        Command::Play { game } => play(&cfg, *game)?,
        Command::Stats { files } => {
            let paths: Vec<PathBuf> = if files.is_empty() {
                SPLITS.iter().map(|s| cfg.data_dir().join(format!("{s}.jsonl"))).collect()
            } else {
                files.clone()
            };
            for p in paths {
                let parsed = parse_games(&p, true)?;
                println!("{}", p.display());
                print!("{}", dataset_stats(&parsed.games).render());
                if parsed.skipped > 0 {
                    println!("skipped malformed records: {}", parsed.skipped);
                }
            }
        }
    }
    Ok(())
}

fn play(cfg: &Config, game_id: Option<i64>) -> Result<()> {
    let modes: Vec<String> = cfg.list("modes")?;
    let label = match modes.as_slice() {
        [one] => one.clone(),
        _ => "dm2".to_string(),
    };
    let mode = PlayMode::from_label(&label, cfg.get("maxq")?)?;
    let splits = pipeline::load_splits(&cfg.data_dir())?;
    let games = splits.get(cfg.raw("split"))?.to_vec();
    let game = match game_id {
        Some(id) => games
            .iter()
            .find(|g| g.game_id == id)
            .ok_or_else(|| Error::Argument(format!("game {id} is not in the {} split", cfg.raw("split"))))?,
        None => games
            .first()
            .ok_or_else(|| Error::Argument("the split has no games".into()))?,
    }
    .clone();
    let models = pipeline::load_models(cfg, splits.features, &[label])?;
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut output = io::stdout();
    let outcome = interactive_play(&game, &models, mode, &mut input, &mut output)?;
    let dir = cfg.out_dir().join("play");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("game_{}.jsonl", game.game_id));
    save_transcripts(&path, std::slice::from_ref(&outcome.result))?;
    println!("transcript saved to {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
