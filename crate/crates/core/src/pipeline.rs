//! End-to-end experiment steps over a working directory: toy data
//! generation, module training, self-play, sweeps and analysis. Each step
//! writes a JSON manifest recording its configuration, seeds and the hashes
//! of the checkpoints it used.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{analyze_runs, group_runs, report_emit, AnalysisReport};
use crate::checkpoint::{load_checkpoint, save_checkpoint, sha256_file, ModuleId, Persist};
use crate::config::Config;
use crate::data::features::FeatureTable;
use crate::data::record::{filter_games, parse_games, write_games, GameRecord, Status};
use crate::data::toyworld::{toyworld_generate, ToyConfig};
use crate::data::vocab::{build_vocab, Vocab};
use crate::decider::{
    dm_accuracy, dm_samples_for_game, dm_train, labels_for, write_label_dump, ClassWeighting, Decider, DmSample,
    DmVariant, Encoders, LabelScheme,
};
use crate::error::{Error, Result};
use crate::game::{eval_sweep, game_seed, play_batch, save_transcripts, write_sweep_csv, GameResult, Models, PlayMode, SweepRow};
use crate::oracle::{oracle_samples, Oracle};
use crate::profile::{DmDims, Profile};
use crate::questioner::{guesser_sample, qgen_sample, DecodeConfig, Guesser, QGen};
use crate::trainer::{fit, mean_loss, TrainConfig, TrainLog};

pub const SPLITS: [&str; 3] = ["train", "val", "test"];
pub const FEATURES_FILE: &str = "features.tsv";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: BTreeMap<String, String>,
    seeds: BTreeMap<String, u64>,
    files: BTreeMap<String, String>,
    metrics: BTreeMap<String, f64>,
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &Config,
    seeds: BTreeMap<String, u64>,
    files: BTreeMap<String, String>,
    metrics: BTreeMap<String, f64>,
) -> Result<()> {
    let m = Manifest {
        command,
        config: cfg.as_map(),
        seeds,
        files,
        metrics,
    };
    let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(())
}

/// Refuses to overwrite existing outputs unless forced.
fn guard(paths: &[PathBuf], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    if let Some(p) = paths.iter().find(|p| p.exists()) {
        return Err(Error::Argument(format!("{} exists; pass --force to overwrite", p.display())));
    }
    Ok(())
}

pub fn profile_of(cfg: &Config) -> Result<Profile> {
    cfg.get("profile")
}

pub fn toy_config(cfg: &Config) -> Result<ToyConfig> {
    Ok(ToyConfig {
        n_categories: cfg.get("n_categories")?,
        min_objects: cfg.get("min_objects")?,
        max_objects: cfg.get("max_objects")?,
        feature_dim: cfg.get("feature_dim")?,
        ..ToyConfig::default()
    })
}

/// Sizes of the (train, val, test) toy splits.
pub fn split_sizes(n_train: usize) -> (usize, usize, usize) {
    (n_train, (n_train / 10).max(1), (n_train / 10).max(1))
}

/// Generates a toy world and writes `train/val/test.jsonl` plus the
/// feature table into the data directory.
pub fn gen_toyworld(cfg: &Config, force: bool) -> Result<PathBuf> {
    let n: usize = cfg.get("n_games")?;
    if n == 0 {
        return Err(Error::Argument("n_games must be at least 1".into()));
    }
    let dir = cfg.data_dir();
    let mut outputs: Vec<PathBuf> = SPLITS.iter().map(|s| dir.join(format!("{s}.jsonl"))).collect();
    outputs.push(dir.join(FEATURES_FILE));
    guard(&outputs, force)?;
    let seed: u64 = cfg.get("seed")?;
    let (nt, nv, ne) = split_sizes(n);
    let world = toyworld_generate(seed, nt + nv + ne, &toy_config(cfg)?)?;
    fs::create_dir_all(&dir)?;
    let (train, rest) = world.games.split_at(nt);
    let (val, test) = rest.split_at(nv);
    let mut files = BTreeMap::new();
    for (name, games) in SPLITS.iter().zip([train, val, test]) {
        let p = dir.join(format!("{name}.jsonl"));
        write_games(&p, games)?;
        files.insert(format!("{name}.jsonl"), sha256_file(&p)?);
    }
    world.features.save(dir.join(FEATURES_FILE))?;
    files.insert(FEATURES_FILE.into(), sha256_file(dir.join(FEATURES_FILE))?);
    write_manifest(
        &dir,
        "gen-toyworld",
        cfg,
        BTreeMap::from([("toyworld".to_string(), seed)]),
        files,
        BTreeMap::new(),
    )?;
    info!("wrote {nt}/{nv}/{ne} toy games to {}", dir.display());
    Ok(dir)
}

/// Game splits and image features of one data directory.
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Vec<GameRecord>,
    pub val: Vec<GameRecord>,
    pub test: Vec<GameRecord>,
    pub features: FeatureTable,
}

impl Splits {
    pub fn get(&self, name: &str) -> Result<&[GameRecord]> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            other => Err(Error::Config(format!("unknown split {other:?} (train, val or test)"))),
        }
    }

    /// One past the largest category id in any split.
    pub fn n_category_ids(&self) -> usize {
        self.train
            .iter()
            .chain(&self.val)
            .chain(&self.test)
            .flat_map(|g| g.objects.iter().map(|o| o.category_id))
            .max()
            .map_or(1, |m| m + 1)
    }
}

/// Reads the three splits (strict parsing, dataset filters applied) and the
/// feature table.
pub fn load_splits(dir: &Path) -> Result<Splits> {
    let read = |name: &str| -> Result<Vec<GameRecord>> {
        let p = dir.join(format!("{name}.jsonl"));
        if !p.exists() {
            return Err(Error::Dependency(format!("{} not found; run gen-toyworld first", p.display())));
        }
        let (games, report) = filter_games(parse_games(&p, false)?.games);
        if report.dropped > 0 {
            info!("{name}: dropped {} games failing the dataset filters", report.dropped);
        }
        Ok(games)
    };
    Ok(Splits {
        train: read("train")?,
        val: read("val")?,
        test: read("test")?,
        features: FeatureTable::load(dir.join(FEATURES_FILE))?,
    })
}

fn module_index(m: ModuleId) -> i64 {
    ModuleId::TRAIN_ORDER.iter().position(|x| *x == m).unwrap_or(ModuleId::TRAIN_ORDER.len()) as i64
}

/// (initialisation seed, shuffling seed) of a module.
pub fn module_seeds(seed: u64, m: ModuleId) -> (u64, u64) {
    let k = module_index(m);
    (game_seed(seed, 1000 + k), game_seed(seed, 2000 + k))
}

fn train_config(cfg: &Config, profile: Profile, shuffle_seed: u64) -> Result<TrainConfig> {
    let batch_size = match cfg.raw("batch_size") {
        "" => profile.batch_size(),
        _ => cfg.get("batch_size")?,
    };
    let tc = TrainConfig {
        lr: cfg.get("lr")?,
        batch_size,
        max_epochs: cfg.get("max_epochs")?,
        patience: cfg.get("patience")?,
        seed: shuffle_seed,
        clip_norm: cfg.get("clip_norm")?,
    };
    tc.validate()?;
    Ok(tc)
}

/// Builds the vocabulary from the training split and stores it next to the
/// checkpoints.
pub fn ensure_vocab(cfg: &Config, splits: &Splits) -> Result<Vocab> {
    let vocab = build_vocab(&splits.train, cfg.get("min_freq")?)?;
    let dir = cfg.checkpoint_dir();
    fs::create_dir_all(&dir)?;
    vocab.save(dir.join(VOCAB_FILE))?;
    Ok(vocab)
}

pub fn load_vocab(cfg: &Config) -> Result<Vocab> {
    let p = cfg.checkpoint_dir().join(VOCAB_FILE);
    if !p.exists() {
        return Err(Error::Dependency(format!("{} not found; train the oracle first", p.display())));
    }
    Vocab::load(p)
}

fn ckpt_path(cfg: &Config, m: ModuleId) -> PathBuf {
    cfg.checkpoint_dir().join(m.file_name())
}

fn load_module<M: Persist>(cfg: &Config, m: ModuleId, profile: Profile, vocab: &Vocab) -> Result<M> {
    let p = ckpt_path(cfg, m);
    if !p.exists() {
        return Err(Error::Dependency(format!("{} not found; train {m} first", p.display())));
    }
    M::from_checkpoint(load_checkpoint(&p)?, m, profile, &vocab.hash())
}

/// Outcome of training one module.
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub module: ModuleId,
    pub log: TrainLog,
    /// Test-split accuracy (oracle answers, guesser picks or decider labels).
    pub test_accuracy: f64,
    pub test_loss: f64,
}

pub fn oracle_accuracy(oracle: &Oracle<f32>, games: &[GameRecord], vocab: &Vocab) -> Result<f64> {
    let samples = oracle_samples(games, vocab)?;
    if samples.is_empty() {
        return Err(Error::Argument("no oracle samples to evaluate".into()));
    }
    let hits = samples
        .par_iter()
        .map(|s| Ok((oracle.answer(&s.tokens, s.category_id, &s.spatial)? == s.answer) as usize))
        .collect::<Result<Vec<usize>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / samples.len() as f64)
}

/// Accuracy of the guesser given each game's full recorded dialogue.
pub fn guesser_accuracy(guesser: &Guesser<f32>, games: &[GameRecord], vocab: &Vocab) -> Result<f64> {
    if games.is_empty() {
        return Err(Error::Argument("no games to evaluate".into()));
    }
    let hits = games
        .par_iter()
        .map(|g| {
            let s = guesser_sample(g, vocab)?;
            let st = guesser.encode(&s.history)?;
            Ok((guesser.pick(st.h.data(), &s.candidates)? == g.target_id) as usize)
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / games.len() as f64)
}

fn successful(games: &[GameRecord]) -> Vec<GameRecord> {
    games.iter().filter(|g| g.status == Status::Success).cloned().collect()
}

fn dm_scheme(cfg: &Config, v: DmVariant) -> Result<LabelScheme> {
    match v {
        DmVariant::Dm1 => cfg.get("dm1_labels"),
        DmVariant::Dm2 | DmVariant::Hybrid => cfg.get("dm2_labels"),
    }
}

fn dm_samples(games: &[GameRecord], v: DmVariant, scheme: LabelScheme, enc: &Encoders<'_>) -> Result<Vec<DmSample>> {
    let per = games
        .par_iter()
        .map(|g| dm_samples_for_game(g, v, scheme, enc))
        .collect::<Result<Vec<_>>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn finish_training<M: Persist>(
    cfg: &Config,
    model: &M,
    profile: Profile,
    vocab: &Vocab,
    log: &TrainLog,
) -> Result<PathBuf> {
    let dir = cfg.checkpoint_dir();
    fs::create_dir_all(&dir)?;
    let m = model.module_id();
    let p = ckpt_path(cfg, m);
    save_checkpoint(&model.to_checkpoint(profile, &vocab.hash()), &p)?;
    fs::write(dir.join(format!("{m}.log.csv")), log.render())?;
    Ok(p)
}

/// Trains one module on the data directory's splits. Deciders need trained
/// QGen and Guesser checkpoints.
pub fn train_module(cfg: &Config, splits: &Splits, m: ModuleId) -> Result<TrainReport> {
    let profile = profile_of(cfg)?;
    let seed: u64 = cfg.get("seed")?;
    let (init_seed, shuffle_seed) = module_seeds(seed, m);
    let tc = train_config(cfg, profile, shuffle_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
    let ncat = splits.n_category_ids();
    info!("training {m}");
    let vocab = if m == ModuleId::Oracle {
        ensure_vocab(cfg, splits)?
    } else {
        load_vocab(cfg)?
    };
    let report = match m {
        ModuleId::Oracle => {
            let mut o: Oracle<f32> = Oracle::new(profile.oracle(vocab.len(), ncat), &mut rng);
            let tr = oracle_samples(&splits.train, &vocab)?;
            let va = oracle_samples(&splits.val, &vocab)?;
            let log = fit(&mut o, &tr, &va, &tc)?;
            finish_training(cfg, &o, profile, &vocab, &log)?;
            TrainReport {
                module: m,
                test_loss: mean_loss(&o, &oracle_samples(&splits.test, &vocab)?)?,
                test_accuracy: oracle_accuracy(&o, &splits.test, &vocab)?,
                log,
            }
        }
        ModuleId::Guesser => {
            let mut g: Guesser<f32> = Guesser::new(profile.guesser(vocab.len(), ncat), &mut rng);
            let samples = |games: &[GameRecord]| -> Result<Vec<_>> {
                successful(games).iter().map(|x| guesser_sample(x, &vocab)).collect()
            };
            let log = fit(&mut g, &samples(&splits.train)?, &samples(&splits.val)?, &tc)?;
            finish_training(cfg, &g, profile, &vocab, &log)?;
            TrainReport {
                module: m,
                test_loss: mean_loss(&g, &samples(&splits.test)?)?,
                test_accuracy: guesser_accuracy(&g, &splits.test, &vocab)?,
                log,
            }
        }
        ModuleId::QGen => {
            let mut q: QGen<f32> = QGen::new(profile.qgen(vocab.len(), splits.features.dim()), &mut rng);
            let samples = |games: &[GameRecord]| -> Result<Vec<_>> {
                successful(games)
                    .iter()
                    .map(|x| qgen_sample(x, &vocab, &splits.features))
                    .collect()
            };
            let log = fit(&mut q, &samples(&splits.train)?, &samples(&splits.val)?, &tc)?;
            finish_training(cfg, &q, profile, &vocab, &log)?;
            TrainReport {
                module: m,
                test_loss: mean_loss(&q, &samples(&splits.test)?)?,
                test_accuracy: f64::NAN,
                log,
            }
        }
        ModuleId::Dm1 | ModuleId::Dm2 | ModuleId::Hybrid => {
            let v = m.variant().expect("decider module");
            if v == DmVariant::Hybrid && !cfg.get::<bool>("hybrid")? {
                return Err(Error::Config("the hybrid decider is disabled (set hybrid=true to enable)".into()));
            }
            let qgen: QGen<f32> = load_module(cfg, ModuleId::QGen, profile, &vocab)?;
            let guesser: Guesser<f32> = load_module(cfg, ModuleId::Guesser, profile, &vocab)?;
            let enc = Encoders {
                qgen: &qgen,
                guesser: &guesser,
                vocab: &vocab,
                features: &splits.features,
            };
            let scheme = dm_scheme(cfg, v)?;
            let weighting: ClassWeighting = cfg.get("dm_weighting")?;
            let dims = DmDims {
                feature_dim: splits.features.dim(),
                hidden_dim: v.hidden_width(qgen.dims.hidden, guesser.dims.hidden),
                mlp_hidden: profile.dm_hidden(),
            };
            let mut dm: Decider<f32> = Decider::new(v, dims, &mut rng);
            let tr = dm_samples(&splits.train, v, scheme, &enc)?;
            let va = dm_samples(&splits.val, v, scheme, &enc)?;
            let te = dm_samples(&splits.test, v, scheme, &enc)?;
            let mut dump = Vec::new();
            for g in &splits.train {
                if let Some(ls) = labels_for(g, scheme, &enc)? {
                    dump.extend(ls.into_iter().map(|(t, l)| (g.game_id, t, l)));
                }
            }
            let dir = cfg.checkpoint_dir();
            fs::create_dir_all(&dir)?;
            write_label_dump(dir.join(format!("{m}.labels.csv")), &dump)?;
            let log = dm_train(&mut dm, tr, va, weighting, &tc)?;
            finish_training(cfg, &dm, profile, &vocab, &log)?;
            TrainReport {
                module: m,
                test_loss: mean_loss(&dm, &te)?,
                test_accuracy: dm_accuracy(&dm, &te)?,
                log,
            }
        }
    };
    info!(
        "{m}: best epoch {} (val {:.5}), test accuracy {:.4}",
        report.log.best_epoch, report.log.best_val_loss, report.test_accuracy
    );
    Ok(report)
}

fn checkpoint_hashes(cfg: &Config, modules: &[ModuleId]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let vocab = cfg.checkpoint_dir().join(VOCAB_FILE);
    if vocab.exists() {
        out.insert(VOCAB_FILE.to_string(), sha256_file(vocab)?);
    }
    for &m in modules {
        let p = ckpt_path(cfg, m);
        if p.exists() {
            out.insert(m.file_name(), sha256_file(p)?);
        }
    }
    Ok(out)
}

/// Trains the given modules in order and writes a training manifest.
pub fn train_modules(cfg: &Config, modules: &[ModuleId], force: bool) -> Result<Vec<TrainReport>> {
    let paths: Vec<PathBuf> = modules.iter().map(|&m| ckpt_path(cfg, m)).collect();
    guard(&paths, force)?;
    let splits = load_splits(&cfg.data_dir())?;
    let seed: u64 = cfg.get("seed")?;
    let mut reports = Vec::new();
    let mut seeds = BTreeMap::new();
    let mut metrics = BTreeMap::new();
    for &m in modules {
        let r = train_module(cfg, &splits, m)?;
        let (a, b) = module_seeds(seed, m);
        seeds.insert(format!("{m}.init"), a);
        seeds.insert(format!("{m}.shuffle"), b);
        metrics.insert(format!("{m}.best_epoch"), r.log.best_epoch as f64);
        metrics.insert(format!("{m}.best_val_loss"), r.log.best_val_loss);
        metrics.insert(format!("{m}.test_loss"), r.test_loss);
        if r.test_accuracy.is_finite() {
            metrics.insert(format!("{m}.test_accuracy"), r.test_accuracy);
        }
        reports.push(r);
    }
    let dir = cfg.checkpoint_dir();
    write_manifest(&dir, "train", cfg, seeds, checkpoint_hashes(cfg, &ModuleId::TRAIN_ORDER)?, metrics)?;
    Ok(reports)
}

/// Parses the play modes of the configuration.
pub fn config_modes(cfg: &Config) -> Result<Vec<String>> {
    let allow_hybrid: bool = cfg.get("hybrid")?;
    let modes: Vec<String> = cfg.list("modes")?;
    if modes.is_empty() {
        return Err(Error::Config("no play modes configured".into()));
    }
    for m in &modes {
        if m != "baseline" {
            DmVariant::parse(m, allow_hybrid)?;
        }
    }
    Ok(modes)
}

/// Loads the vocabulary, all base models and the deciders named in `modes`.
pub fn load_models(cfg: &Config, features: FeatureTable, modes: &[String]) -> Result<Models> {
    let profile = profile_of(cfg)?;
    let vocab = load_vocab(cfg)?;
    let oracle = load_module(cfg, ModuleId::Oracle, profile, &vocab)?;
    let guesser = load_module(cfg, ModuleId::Guesser, profile, &vocab)?;
    let qgen = load_module(cfg, ModuleId::QGen, profile, &vocab)?;
    let mut deciders = HashMap::new();
    for m in modes.iter().filter(|m| *m != "baseline") {
        let v: DmVariant = m.parse()?;
        deciders.insert(v, load_module(cfg, ModuleId::of_variant(v), profile, &vocab)?);
    }
    let decode = DecodeConfig::greedy(&vocab, profile.max_question_len());
    Ok(Models {
        vocab,
        features,
        oracle,
        guesser,
        qgen,
        deciders,
        decode,
    })
}

fn used_modules(modes: &[String]) -> Vec<ModuleId> {
    let mut out = vec![ModuleId::Oracle, ModuleId::Guesser, ModuleId::QGen];
    for m in modes {
        if let Ok(v) = m.parse::<DmVariant>() {
            out.push(ModuleId::of_variant(v));
        }
    }
    out
}

/// Output of a self-play or sweep run.
#[derive(Clone, Debug)]
pub struct PlayRun {
    pub rows: Vec<SweepRow>,
    pub results: Vec<GameResult>,
    pub failures: Vec<(i64, String)>,
    pub dir: PathBuf,
}

fn finish_play(cfg: &Config, command: &str, dir: PathBuf, modes: &[String], run: (Vec<SweepRow>, Vec<GameResult>, Vec<(i64, String)>)) -> Result<PlayRun> {
    let (rows, results, failures) = run;
    fs::create_dir_all(&dir)?;
    save_transcripts(dir.join(TRANSCRIPTS_FILE), &results)?;
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &rows)?;
    let csv_name = if command == "eval-sweep" { "sweep.csv" } else { "summary.csv" };
    fs::write(dir.join(csv_name), csv)?;
    if !failures.is_empty() {
        let text: String = failures.iter().map(|(g, e)| format!("{g}\t{e}\n")).collect();
        fs::write(dir.join("failures.tsv"), text)?;
    }
    let mut files = checkpoint_hashes(cfg, &used_modules(modes))?;
    files.insert(TRANSCRIPTS_FILE.into(), sha256_file(dir.join(TRANSCRIPTS_FILE))?);
    let metrics = rows
        .iter()
        .flat_map(|r| {
            let k = format!("{}@{}", r.mode, r.maxq);
            [
                (format!("{k}.accuracy"), r.accuracy),
                (format!("{k}.mean_questions"), r.mean_questions),
                (format!("{k}.pct_decided"), r.pct_decided),
            ]
        })
        .collect();
    write_manifest(&dir, command, cfg, BTreeMap::from([("selfplay".to_string(), cfg.get("seed")?)]), files, metrics)?;
    Ok(PlayRun {
        rows,
        results,
        failures,
        dir,
    })
}

/// Plays every configured mode once at `maxq` on the configured split.
pub fn run_selfplay(cfg: &Config) -> Result<PlayRun> {
    let modes = config_modes(cfg)?;
    let splits = load_splits(&cfg.data_dir())?;
    let games = splits.get(cfg.raw("split"))?.to_vec();
    let models = load_models(cfg, splits.features, &modes)?;
    let maxq: usize = cfg.get("maxq")?;
    let seed: u64 = cfg.get("seed")?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for m in &modes {
        let out = play_batch(&games, &models, PlayMode::from_label(m, maxq)?, seed);
        rows.push(SweepRow {
            mode: m.clone(),
            maxq,
            accuracy: out.summary.accuracy,
            mean_questions: out.summary.mean_questions,
            pct_decided: out.summary.pct_decided,
        });
        results.extend(out.results);
        failures.extend(out.failures);
    }
    finish_play(cfg, "selfplay", cfg.out_dir().join("selfplay"), &modes, (rows, results, failures))
}

/// Every configured mode at every cap in `sweep_maxq`.
pub fn run_eval_sweep(cfg: &Config) -> Result<PlayRun> {
    let modes = config_modes(cfg)?;
    let maxqs: Vec<usize> = cfg.list("sweep_maxq")?;
    if maxqs.is_empty() {
        return Err(Error::Config("sweep_maxq is empty".into()));
    }
    let splits = load_splits(&cfg.data_dir())?;
    let games = splits.get(cfg.raw("split"))?.to_vec();
    let models = load_models(cfg, splits.features, &modes)?;
    let mode_refs: Vec<&str> = modes.iter().map(String::as_str).collect();
    let (rows, outcomes) = eval_sweep(&games, &models, &mode_refs, &maxqs, cfg.get("seed")?)?;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        results.extend(o.results);
        failures.extend(o.failures);
    }
    finish_play(cfg, "eval-sweep", cfg.out_dir().join("sweep"), &modes, (rows, results, failures))
}

/// Runs every analysis over the given transcript dumps and writes the
/// report into `<out>/analysis`.
pub fn run_analyze(cfg: &Config, transcripts: &[PathBuf]) -> Result<(AnalysisReport, PathBuf)> {
    let default = cfg.out_dir().join("sweep").join(TRANSCRIPTS_FILE);
    let inputs: Vec<PathBuf> = if transcripts.is_empty() { vec![default] } else { transcripts.to_vec() };
    let mut results = Vec::new();
    let mut files = BTreeMap::new();
    for p in &inputs {
        if !p.exists() {
            return Err(Error::Dependency(format!("{} not found; run eval-sweep or selfplay first", p.display())));
        }
        results.extend(crate::game::load_transcripts(p)?);
        files.insert(p.display().to_string(), sha256_file(p)?);
    }
    let splits = load_splits(&cfg.data_dir())?;
    let games: Vec<GameRecord> = splits.train.into_iter().chain(splits.val).chain(splits.test).collect();
    let runs = group_runs(results);
    let report = analyze_runs(&games, &runs)?;
    let dir = cfg.out_dir().join("analysis");
    report_emit(&report, &dir)?;
    write_manifest(&dir, "analyze", cfg, BTreeMap::new(), files, BTreeMap::new())?;
    Ok((report, dir))
}
