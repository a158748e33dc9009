//! Self-play: QGen asks, the Oracle answers, both encoders advance, the
//! decider (if any) is consulted after each pair, and the Guesser picks.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::features::FeatureTable;
use crate::data::record::{Answer, GameRecord};
use crate::data::spatial::encode_spatial;
use crate::data::vocab::Vocab;
use crate::decider::{DecisionLabel, Decider, DmVariant};
use crate::error::{Error, Result};
use crate::oracle::Oracle;
use crate::questioner::{candidates, DecodeConfig, DialogueState, Guesser, QGen};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlayMode {
    BaselineFixed(usize),
    DmGated(DmVariant, usize),
}

impl PlayMode {
    pub fn cap(self) -> usize {
        match self {
            PlayMode::BaselineFixed(n) => n,
            PlayMode::DmGated(_, m) => m,
        }
    }

    /// `baseline`, `dm1`, `dm2` or `hybrid`.
    pub fn label(self) -> &'static str {
        match self {
            PlayMode::BaselineFixed(_) => "baseline",
            PlayMode::DmGated(v, _) => v.as_str(),
        }
    }

    pub fn from_label(label: &str, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Argument("the question cap must be at least 1".into()));
        }
        if label == "baseline" {
            Ok(PlayMode::BaselineFixed(cap))
        } else {
            Ok(PlayMode::DmGated(label.parse()?, cap))
        }
    }
}

impl fmt::Display for PlayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.label(), self.cap())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Turn {
    pub question: String,
    pub answer: Answer,
    pub decision: Option<DecisionLabel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameResult {
    pub game_id: i64,
    pub mode: PlayMode,
    pub success: bool,
    pub decided: bool,
    pub n_questions: usize,
    pub guessed_object_id: i64,
    pub transcript: Vec<Turn>,
}

/// Everything self-play needs.
pub struct Models {
    pub vocab: Vocab,
    pub features: FeatureTable,
    pub oracle: Oracle<f32>,
    pub guesser: Guesser<f32>,
    pub qgen: QGen<f32>,
    pub deciders: HashMap<DmVariant, Decider<f32>>,
    pub decode: DecodeConfig,
}

impl Models {
    pub fn decider(&self, v: DmVariant) -> Result<&Decider<f32>> {
        self.deciders
            .get(&v)
            .ok_or_else(|| Error::Config(format!("no {v} checkpoint loaded")))
    }
}

/// Source of answers: the Oracle in self-play, a person interactively.
trait Answerer {
    fn answer(&mut self, turn: usize, question: &str, tokens: &[usize]) -> Result<Option<Answer>>;
}

struct OracleAnswerer<'a> {
    oracle: &'a Oracle<f32>,
    category_id: usize,
    spatial: crate::data::spatial::SpatialVec,
}

impl Answerer for OracleAnswerer<'_> {
    fn answer(&mut self, _: usize, _: &str, tokens: &[usize]) -> Result<Option<Answer>> {
        self.oracle.answer(tokens, self.category_id, &self.spatial).map(Some)
    }
}

/// Mixes a run seed and a game id into a per-game seed (splitmix64).
pub fn game_seed(seed: u64, game_id: i64) -> u64 {
    let mut z = seed ^ (game_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Shared ask/answer/decide loop. The flag is set when the answerer gave up.
fn run_loop(
    game: &GameRecord,
    models: &Models,
    mode: PlayMode,
    seed: u64,
    answerer: &mut dyn Answerer,
) -> Result<(GameResult, bool)> {
    let cap = mode.cap();
    if cap == 0 {
        return Err(Error::Argument("the question cap must be at least 1".into()));
    }
    let dm = match mode {
        PlayMode::DmGated(v, _) => Some(models.decider(v)?),
        PlayMode::BaselineFixed(_) => None,
    };
    let feats = models.features.get(game.image.id)?;
    let cands = candidates(game)?;
    let mut state = DialogueState::new(&models.qgen, &models.guesser, feats)?;
    let mut transcript = Vec::with_capacity(cap);
    let mut decided = false;
    let mut aborted = false;
    for t in 1..=cap {
        let (tokens, _) = models
            .qgen
            .generate(&state.qgen, feats, &models.decode, game_seed(seed, t as i64))?;
        let question = models.vocab.decode(&tokens);
        let Some(answer) = answerer.answer(t, &question, &tokens)? else {
            aborted = true;
            break;
        };
        state.push_qa(&models.qgen, &models.guesser, feats, &tokens, answer)?;
        let decision = match dm {
            Some(d) => Some(d.decide(feats, &d.variant.hidden_of(&state))?),
            None => None,
        };
        let turn = Turn {
            question,
            answer,
            decision,
        };
        transcript.push(turn);
        if decision == Some(DecisionLabel::Guess) {
            decided = true;
            break;
        }
    }
    let guess = models.guesser.pick(state.guesser.h.data(), &cands)?;
    Ok((
        GameResult {
            game_id: game.game_id,
            mode,
            success: guess == game.target_id,
            decided: decided || matches!(mode, PlayMode::BaselineFixed(_)),
            n_questions: transcript.len(),
            guessed_object_id: guess,
            transcript,
        },
        aborted,
    ))
}

/// Plays one game against the Oracle. DM-gated games that reach the cap
/// without a guess decision are undecided but still guess.
pub fn play_game(game: &GameRecord, models: &Models, mode: PlayMode, seed: u64) -> Result<GameResult> {
    let target = game.target().ok_or_else(|| Error::Integrity {
        game_id: game.game_id,
        message: "target missing".into(),
    })?;
    let mut oracle = OracleAnswerer {
        oracle: &models.oracle,
        category_id: target.category_id,
        spatial: encode_spatial(&target.bbox, game.image.width as f64, game.image.height as f64)?,
    };
    run_loop(game, models, mode, game_seed(seed, game.game_id), &mut oracle).map(|(r, _)| r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchSummary {
    pub mode: PlayMode,
    pub n_games: usize,
    pub n_failed: usize,
    pub accuracy: f64,
    pub mean_questions: f64,
    pub pct_decided: f64,
}

#[derive(Clone, Debug)]
pub struct BatchOutcome {
    pub results: Vec<GameResult>,
    /// Games that raised an error, with the message.
    pub failures: Vec<(i64, String)>,
    pub summary: BatchSummary,
}

pub fn summarize(mode: PlayMode, results: &[GameResult], n_failed: usize) -> BatchSummary {
    let n = results.len();
    let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    BatchSummary {
        mode,
        n_games: n,
        n_failed,
        accuracy: pct(results.iter().filter(|r| r.success).count()),
        mean_questions: if n == 0 {
            0.0
        } else {
            results.iter().map(|r| r.n_questions).sum::<usize>() as f64 / n as f64
        },
        pct_decided: pct(results.iter().filter(|r| r.decided).count()),
    }
}

/// Plays every game, possibly concurrently; results keep game order.
pub fn play_batch(games: &[GameRecord], models: &Models, mode: PlayMode, seed: u64) -> BatchOutcome {
    let outcomes: Vec<Result<GameResult>> = games.par_iter().map(|g| play_game(g, models, mode, seed)).collect();
    let mut results = Vec::with_capacity(games.len());
    let mut failures = Vec::new();
    for (g, o) in games.iter().zip(outcomes) {
        match o {
            Ok(r) => results.push(r),
            Err(e) => {
                log::warn!("game {} failed: {e}", g.game_id);
                failures.push((g.game_id, e.to_string()));
            }
        }
    }
    let summary = summarize(mode, &results, failures.len());
    BatchOutcome {
        results,
        failures,
        summary,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub mode: String,
    pub maxq: usize,
    pub accuracy: f64,
    pub mean_questions: f64,
    pub pct_decided: f64,
}

/// One independent batch per (mode, MaxQ); every row reuses the same
/// per-game seeds.
pub fn eval_sweep(
    games: &[GameRecord],
    models: &Models,
    modes: &[&str],
    maxqs: &[usize],
    seed: u64,
) -> Result<(Vec<SweepRow>, Vec<BatchOutcome>)> {
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    for &m in modes {
        for &q in maxqs {
            let mode = PlayMode::from_label(m, q)?;
            let out = play_batch(games, models, mode, seed);
            rows.push(SweepRow {
                mode: m.to_string(),
                maxq: q,
                accuracy: out.summary.accuracy,
                mean_questions: out.summary.mean_questions,
                pct_decided: out.summary.pct_decided,
            });
            outcomes.push(out);
        }
    }
    Ok((rows, outcomes))
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "mode,maxq,accuracy,mean_questions,pct_decided")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.4},{:.4},{:.4}",
            r.mode, r.maxq, r.accuracy, r.mean_questions, r.pct_decided
        )?;
    }
    Ok(())
}

// ------------------------------------------------------------ transcripts

/// One transcript line; `guess`, `success` and `decided` are filled on the
/// final turn only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub game_id: i64,
    pub mode: String,
    pub maxq: usize,
    pub turn: usize,
    pub question: String,
    pub answer: Answer,
    pub decision: Option<String>,
    pub guess: Option<i64>,
    pub success: Option<bool>,
    pub decided: Option<bool>,
}

pub fn transcript_records(r: &GameResult) -> Vec<TranscriptRecord> {
    let n = r.transcript.len();
    r.transcript
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let last = i + 1 == n;
            TranscriptRecord {
                game_id: r.game_id,
                mode: r.mode.label().to_string(),
                maxq: r.mode.cap(),
                turn: i + 1,
                question: t.question.clone(),
                answer: t.answer,
                decision: t.decision.map(|d| d.as_str().to_string()),
                guess: last.then_some(r.guessed_object_id),
                success: last.then_some(r.success),
                decided: last.then_some(r.decided),
            }
        })
        .collect()
}

pub fn write_transcripts<W: Write>(mut w: W, results: &[GameResult]) -> Result<()> {
    for r in results {
        for rec in transcript_records(r) {
            serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Format(e.to_string()))?;
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn save_transcripts(path: impl AsRef<Path>, results: &[GameResult]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    write_transcripts(&mut f, results)?;
    f.flush()?;
    Ok(())
}

/// Rebuilds game results from a transcript dump. Games appear in first-seen
/// order; each must end with a final-turn record.
pub fn read_transcripts<R: BufRead>(reader: R) -> Result<Vec<GameResult>> {
    let mut out: Vec<GameResult> = Vec::new();
    let mut open: Option<GameResult> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TranscriptRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let mode = PlayMode::from_label(&rec.mode, rec.maxq)?;
        let cur = open.get_or_insert_with(|| GameResult {
            game_id: rec.game_id,
            mode,
            success: false,
            decided: false,
            n_questions: 0,
            guessed_object_id: 0,
            transcript: Vec::new(),
        });
        if cur.game_id != rec.game_id || rec.turn != cur.transcript.len() + 1 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("unexpected turn {} of game {}", rec.turn, rec.game_id),
            });
        }
        let decision = rec.decision.as_deref().map(str::parse).transpose()?;
        cur.transcript.push(Turn {
            question: rec.question,
            answer: rec.answer,
            decision,
        });
        cur.n_questions = cur.transcript.len();
        if let (Some(g), Some(s), Some(d)) = (rec.guess, rec.success, rec.decided) {
            cur.guessed_object_id = g;
            cur.success = s;
            cur.decided = d;
            out.push(open.take().expect("open game"));
        }
    }
    if let Some(g) = open {
        return Err(Error::Format(format!("transcript for game {} has no final turn", g.game_id)));
    }
    Ok(out)
}

pub fn load_transcripts(path: impl AsRef<Path>) -> Result<Vec<GameResult>> {
    let f = std::fs::File::open(path.as_ref())?;
    read_transcripts(std::io::BufReader::new(f))
}

// ------------------------------------------------------------ interactive

struct HumanAnswerer<'a, R: BufRead, W: Write> {
    input: &'a mut R,
    output: &'a mut W,
}

impl<R: BufRead, W: Write> Answerer for HumanAnswerer<'_, R, W> {
    fn answer(&mut self, turn: usize, question: &str, _: &[usize]) -> Result<Option<Answer>> {
        loop {
            write!(self.output, "Q{turn}: {question}\n  answer [y/n/na]> ")?;
            self.output.flush()?;
            let mut line = String::new();
            if self.input.read_line(&mut line)? == 0 {
                writeln!(self.output)?;
                return Ok(None);
            }
            match line.trim().parse::<Answer>() {
                Ok(a) => return Ok(Some(a)),
                Err(_) => writeln!(self.output, "  please answer y, n or na")?,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteractiveOutcome {
    pub result: GameResult,
    /// True when input ended before the game finished.
    pub aborted: bool,
}

/// A person plays the Oracle. Turns are echoed as they happen; the guess
/// and the true target are revealed at the end.
pub fn interactive_play<R: BufRead, W: Write>(
    game: &GameRecord,
    models: &Models,
    mode: PlayMode,
    input: &mut R,
    output: &mut W,
) -> Result<InteractiveOutcome> {
    writeln!(output, "Game {}: {} candidate objects", game.game_id, game.objects.len())?;
    for o in &game.objects {
        writeln!(
            output,
            "  object {} {} at ({:.0},{:.0}) size {:.0}x{:.0}",
            o.id, o.category, o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h
        )?;
    }
    let (result, aborted) = {
        let mut human = HumanAnswerer {
            input,
            output: &mut *output,
        };
        run_loop(game, models, mode, 0, &mut human)?
    };
    if aborted {
        writeln!(output, "Input ended; session aborted after {} questions.", result.n_questions)?;
    } else {
        if let Some(t) = result.transcript.last() {
            if t.decision == Some(DecisionLabel::Guess) {
                writeln!(output, "The decider chose to guess.")?;
            }
        }
        writeln!(
            output,
            "Guess: object {}. Target: object {}. {}",
            result.guessed_object_id,
            game.target_id,
            if result.success { "Success." } else { "Failure." }
        )?;
    }
    Ok(InteractiveOutcome { result, aborted })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_spread() {
        assert_eq!(game_seed(1, 7), game_seed(1, 7));
        assert_ne!(game_seed(1, 7), game_seed(1, 8));
        assert_ne!(game_seed(1, 7), game_seed(2, 7));
    }

    fn result(id: i64, success: bool, n: usize) -> GameResult {
        GameResult {
            game_id: id,
            mode: PlayMode::DmGated(DmVariant::Dm2, 10),
            success,
            decided: n < 10,
            n_questions: n,
            guessed_object_id: 3,
            transcript: (0..n)
                .map(|i| Turn {
                    question: format!("is it {i} ?"),
                    answer: Answer::No,
                    decision: Some(if i + 1 == n && n < 10 { DecisionLabel::Guess } else { DecisionLabel::Ask }),
                })
                .collect(),
        }
    }

    #[test]
    fn summary_arithmetic() {
        let rs = [result(1, true, 4), result(2, false, 6), result(3, true, 10), result(4, false, 10)];
        let s = summarize(rs[0].mode, &rs, 0);
        assert_eq!(s.accuracy, 50.0);
        assert_eq!(s.mean_questions, 7.5);
        assert_eq!(s.pct_decided, 50.0);
        let s = summarize(rs[0].mode, &rs[..2], 0);
        assert_eq!(s.mean_questions, 5.0);
    }

    #[test]
    fn transcripts_round_trip() {
        let rs = vec![result(1, true, 4), result(2, false, 10)];
        let mut buf = Vec::new();
        write_transcripts(&mut buf, &rs).unwrap();
        let back = read_transcripts(&buf[..]).unwrap();
        assert_eq!(back, rs);
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_transcripts(cut.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn sweep_csv_layout() {
        let mut buf = Vec::new();
        let rows = [SweepRow {
            mode: "baseline".into(),
            maxq: 5,
            accuracy: 41.18,
            mean_questions: 5.0,
            pct_decided: 100.0,
        }];
        write_sweep_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "mode,maxq,accuracy,mean_questions,pct_decided\nbaseline,5,41.1800,5.0000,100.0000\n"
        );
    }

    #[test]
    fn mode_labels() {
        assert_eq!(PlayMode::from_label("baseline", 5).unwrap(), PlayMode::BaselineFixed(5));
        assert_eq!(PlayMode::from_label("dm1", 8).unwrap(), PlayMode::DmGated(DmVariant::Dm1, 8));
        assert!(PlayMode::from_label("dm1", 0).is_err());
        assert!(PlayMode::from_label("nope", 3).is_err());
    }
}
