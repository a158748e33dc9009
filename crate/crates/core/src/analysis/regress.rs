//! Success and decidedness against image complexity, and decided-game rates.

use std::collections::HashMap;

use log::warn;
use num_rational::BigRational;

use crate::analysis::logistic::{logistic_fit, with_intercept, LogitConfig, RegressionFit};
use crate::analysis::repetition::{pct, ratio};
use crate::data::complexity::complexity_measures;
use crate::data::record::GameRecord;
use crate::error::{Error, Result};
use crate::game::{GameResult, PlayMode};

pub const PREDICTORS: [&str; 4] = ["intercept", "n_objects", "n_same_category", "target_area"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegressionSet {
    /// success ~ complexity, all games
    SuccessAll,
    /// success ~ complexity, decided games
    SuccessDecided,
    /// decided ~ complexity, all games
    DecidedAll,
}

impl RegressionSet {
    pub fn as_str(self) -> &'static str {
        match self {
            RegressionSet::SuccessAll => "success_all",
            RegressionSet::SuccessDecided => "success_decided",
            RegressionSet::DecidedAll => "decided_all",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionEntry {
    pub set: RegressionSet,
    pub model: String,
    /// `None` when no fit was possible; see `warning`.
    pub fit: Option<RegressionFit>,
    pub warning: Option<String>,
}

fn design(games: &HashMap<i64, &GameRecord>, results: &[&GameResult]) -> Result<Vec<Vec<f64>>> {
    results
        .iter()
        .map(|r| {
            let g = games
                .get(&r.game_id)
                .ok_or_else(|| Error::Argument(format!("no game record for result of game {}", r.game_id)))?;
            let m = complexity_measures(g)?;
            Ok(vec![m.n_objects as f64, m.n_same_category as f64, m.target_area_ratio])
        })
        .collect()
}

fn entry(
    set: RegressionSet,
    model: &str,
    games: &HashMap<i64, &GameRecord>,
    results: &[&GameResult],
    outcome: impl Fn(&GameResult) -> bool,
) -> Result<RegressionEntry> {
    if results.is_empty() {
        let warning = "no games in this subset".to_string();
        warn!("regression {} / {model}: {warning}", set.as_str());
        return Ok(RegressionEntry {
            set,
            model: model.to_string(),
            fit: None,
            warning: Some(warning),
        });
    }
    let x = with_intercept(&design(games, results)?);
    let y: Vec<f64> = results.iter().map(|r| if outcome(r) { 1.0 } else { 0.0 }).collect();
    let (fit, warning) = match logistic_fit(&x, &y, &PREDICTORS, LogitConfig::default()) {
        Ok(f) => {
            let w = if f.separated {
                Some("separation detected; coefficients not meaningful".to_string())
            } else if !f.converged {
                Some(format!("no convergence after {} iterations", f.iterations))
            } else {
                None
            };
            (Some(f), w)
        }
        Err(e @ (Error::Degenerate(_) | Error::Rank(_) | Error::Argument(_))) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    if let Some(w) = &warning {
        warn!("regression {} / {model}: {w}", set.as_str());
    }
    Ok(RegressionEntry {
        set,
        model: model.to_string(),
        fit,
        warning,
    })
}

/// Fits (a) success on all games for every run, (b) success on decided
/// games and (c) decidedness on all games for every decider run. Fits that
/// are impossible on a subset are reported with a warning instead.
pub fn complexity_regressions(games: &[GameRecord], runs: &[(String, Vec<GameResult>)]) -> Result<Vec<RegressionEntry>> {
    let by_id: HashMap<i64, &GameRecord> = games.iter().map(|g| (g.game_id, g)).collect();
    let mut out = Vec::new();
    for (name, results) in runs {
        let all: Vec<&GameResult> = results.iter().collect();
        out.push(entry(RegressionSet::SuccessAll, name, &by_id, &all, |r| r.success)?);
    }
    for (name, results) in runs.iter().filter(|(_, r)| is_gated(r)) {
        let decided: Vec<&GameResult> = results.iter().filter(|r| r.decided).collect();
        out.push(entry(RegressionSet::SuccessDecided, name, &by_id, &decided, |r| r.success)?);
    }
    for (name, results) in runs.iter().filter(|(_, r)| is_gated(r)) {
        let all: Vec<&GameResult> = results.iter().collect();
        out.push(entry(RegressionSet::DecidedAll, name, &by_id, &all, |r| r.decided)?);
    }
    Ok(out)
}

fn is_gated(results: &[GameResult]) -> bool {
    results.first().is_some_and(|r| matches!(r.mode, PlayMode::DmGated(..)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecidedStats {
    pub n_games: usize,
    pub n_decided: usize,
    pub frac: BigRational,
}

impl DecidedStats {
    pub fn pct(&self) -> f64 {
        pct(&self.frac)
    }
}

pub fn decided_stats(results: &[GameResult]) -> Result<DecidedStats> {
    if let Some(r) = results.iter().find(|r| matches!(r.mode, PlayMode::BaselineFixed(_))) {
        return Err(Error::Argument(format!(
            "decided statistics need decider runs; game {} was played as {}",
            r.game_id, r.mode
        )));
    }
    let n_decided = results.iter().filter(|r| r.decided).count();
    Ok(DecidedStats {
        n_games: results.len(),
        n_decided,
        frac: ratio(n_decided, results.len()),
    })
}
