//! Collects every analysis over a set of runs and writes the CSV/summary files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use crate::analysis::change::{change_table, ChangeTable};
use crate::analysis::regress::{complexity_regressions, decided_stats, DecidedStats, RegressionEntry};
use crate::analysis::repetition::{repetition_stats, RepetitionStats, Scope};
use crate::data::record::GameRecord;
use crate::error::Result;
use crate::game::{summarize, write_sweep_csv, GameResult, PlayMode, SweepRow};

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport {
    pub sweep: Vec<SweepRow>,
    pub repetition: Vec<(String, RepetitionStats)>,
    /// (decider run, baseline run, table)
    pub change: Vec<(String, String, ChangeTable)>,
    pub regressions: Vec<RegressionEntry>,
    pub decided: Vec<(String, DecidedStats)>,
    pub warnings: Vec<String>,
}

/// Splits results by play mode, keeping first-appearance order. Runs are
/// named `mode@maxq`.
pub fn group_runs(results: Vec<GameResult>) -> Vec<(String, Vec<GameResult>)> {
    let mut runs: Vec<(PlayMode, Vec<GameResult>)> = Vec::new();
    for r in results {
        match runs.iter_mut().find(|(m, _)| *m == r.mode) {
            Some((_, v)) => v.push(r),
            None => runs.push((r.mode, vec![r])),
        }
    }
    runs.into_iter().map(|(m, v)| (m.to_string(), v)).collect()
}

fn mode_of(results: &[GameResult]) -> Option<PlayMode> {
    results.first().map(|r| r.mode)
}

/// Runs every analysis. Change tables compare each decider run with the
/// 5-question baseline (or, failing that, the first baseline run).
pub fn analyze_runs(games: &[GameRecord], runs: &[(String, Vec<GameResult>)]) -> Result<AnalysisReport> {
    let mut warnings = Vec::new();
    if runs.iter().all(|(_, r)| r.is_empty()) {
        warnings.push("no game results to analyze".to_string());
    }
    let mut sweep = Vec::new();
    let mut repetition = Vec::new();
    let mut decided = Vec::new();
    for (name, results) in runs {
        let Some(mode) = mode_of(results) else {
            continue;
        };
        let s = summarize(mode, results, 0);
        sweep.push(SweepRow {
            mode: mode.label().to_string(),
            maxq: mode.cap(),
            accuracy: s.accuracy,
            mean_questions: s.mean_questions,
            pct_decided: s.pct_decided,
        });
        for scope in [Scope::Overall, Scope::ObjectsOnly] {
            repetition.push((name.clone(), repetition_stats(results, scope)));
        }
        if matches!(mode, PlayMode::DmGated(..)) {
            decided.push((name.clone(), decided_stats(results)?));
        }
    }
    let baselines: Vec<&(String, Vec<GameResult>)> = runs
        .iter()
        .filter(|(_, r)| matches!(mode_of(r), Some(PlayMode::BaselineFixed(_))))
        .collect();
    let baseline = baselines
        .iter()
        .find(|(_, r)| mode_of(r) == Some(PlayMode::BaselineFixed(5)))
        .or(baselines.first())
        .copied();
    let mut change = Vec::new();
    let gated: Vec<&(String, Vec<GameResult>)> = runs
        .iter()
        .filter(|(_, r)| matches!(mode_of(r), Some(PlayMode::DmGated(..))))
        .collect();
    match baseline {
        Some((bname, bres)) => {
            for (name, res) in &gated {
                change.push((name.clone(), bname.clone(), change_table(res, bres)?));
            }
        }
        None if !gated.is_empty() => warnings.push("no baseline run; change tables skipped".to_string()),
        None => {}
    }
    let non_empty: Vec<(String, Vec<GameResult>)> = runs.iter().filter(|(_, r)| !r.is_empty()).cloned().collect();
    let regressions = complexity_regressions(games, &non_empty)?;
    for e in &regressions {
        if let Some(w) = &e.warning {
            warnings.push(format!("regression {} / {}: {w}", e.set.as_str(), e.model));
        }
    }
    for w in &warnings {
        warn!("{w}");
    }
    Ok(AnalysisReport {
        sweep,
        repetition,
        change,
        regressions,
        decided,
        warnings,
    })
}

fn significance(p: f64) -> &'static str {
    if p < 0.0001 {
        "p<0.0001"
    } else if p < 0.01 {
        "p<0.01"
    } else if p < 0.05 {
        "p<0.05"
    } else {
        "ns"
    }
}

fn sign(v: f64) -> &'static str {
    if v > 0.0 {
        "+"
    } else if v < 0.0 {
        "-"
    } else {
        "0"
    }
}

pub fn repetition_csv(rep: &[(String, RepetitionStats)]) -> String {
    let mut s = String::from("model,scope,n_games,games_with_repeat,across_games_pct,within_game_pct\n");
    for (m, r) in rep {
        let _ = writeln!(
            s,
            "{m},{},{},{},{:.4},{:.4}",
            r.scope.as_str(),
            r.n_games,
            r.games_with_repeat,
            r.across_games_pct(),
            r.within_game_pct()
        );
    }
    s
}

pub fn change_csv(change: &[(String, String, ChangeTable)]) -> String {
    let mut s = String::from("model,baseline,games,denominator,direction,n,plus_pct,minus_pct,none_pct,total_pct\n");
    for (m, b, t) in change {
        for (games, block) in [("all", &t.all), ("decided", &t.decided)] {
            for (dir, c) in block.rows() {
                let _ = writeln!(
                    s,
                    "{m},{b},{games},{},{dir},{},{:.4},{:.4},{:.4},{:.4}",
                    block.denominator,
                    c.total(),
                    block.pct(c.plus),
                    block.pct(c.minus),
                    block.pct(c.none),
                    block.pct(c.total())
                );
            }
        }
    }
    s
}

pub fn regressions_csv(entries: &[RegressionEntry]) -> String {
    let mut s = String::from(
        "set,model,term,coefficient,std_error,z,p_value,sign,significance,converged,separated,n_obs,warning\n",
    );
    for e in entries {
        let warning = e.warning.as_deref().unwrap_or("").replace(',', ";");
        match &e.fit {
            Some(f) => {
                for i in 0..f.names.len() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{:.4},{:.4},{:.4},{:.4},{},{},{},{},{},{warning}",
                        e.set.as_str(),
                        e.model,
                        f.names[i],
                        f.coefficients[i],
                        f.std_errors[i],
                        f.z[i],
                        f.p_values[i],
                        sign(f.coefficients[i]),
                        significance(f.p_values[i]),
                        f.converged,
                        f.separated,
                        f.n_obs
                    );
                }
            }
            None => {
                let _ = writeln!(s, "{},{},,,,,,,,false,false,0,{warning}", e.set.as_str(), e.model);
            }
        }
    }
    s
}

pub fn decided_csv(decided: &[(String, DecidedStats)]) -> String {
    let mut s = String::from("model,n_games,n_decided,pct_decided\n");
    for (m, d) in decided {
        let _ = writeln!(s, "{m},{},{},{:.4}", d.n_games, d.n_decided, d.pct());
    }
    s
}

pub fn summary_text(r: &AnalysisReport) -> String {
    let mut s = String::new();
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    if !r.warnings.is_empty() {
        s.push('\n');
    }
    s.push_str("Guessing accuracy by run\n");
    let _ = writeln!(s, "  {:<10} {:>5} {:>10} {:>10} {:>10}", "mode", "maxq", "accuracy", "mean_q", "decided%");
    for row in &r.sweep {
        let _ = writeln!(
            s,
            "  {:<10} {:>5} {:>10.4} {:>10.4} {:>10.4}",
            row.mode, row.maxq, row.accuracy, row.mean_questions, row.pct_decided
        );
    }
    s.push_str("\nDecided games\n");
    for (m, d) in &r.decided {
        let _ = writeln!(s, "  {m:<12} {:>6} of {:>6} ({:.4}%)", d.n_decided, d.n_games, d.pct());
    }
    s.push_str("\nRepeated questions (across games % / within game %)\n");
    for (m, rep) in &r.repetition {
        let _ = writeln!(
            s,
            "  {m:<12} {:<13} {:>9.4} {:>9.4}",
            rep.scope.as_str(),
            rep.across_games_pct(),
            rep.within_game_pct()
        );
    }
    s.push_str("\nQuestion-count change against baseline (+ / - / none / total %)\n");
    for (m, b, t) in &r.change {
        for (games, block) in [("all", &t.all), ("decided", &t.decided)] {
            let _ = writeln!(s, "  {m} vs {b}, {games} games (n={})", block.denominator);
            for (dir, c) in block.rows() {
                let _ = writeln!(
                    s,
                    "    {dir:<6} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                    block.pct(c.plus),
                    block.pct(c.minus),
                    block.pct(c.none),
                    block.pct(c.total())
                );
            }
        }
    }
    s.push_str("\nComplexity regressions (coefficient, p)\n");
    for e in &r.regressions {
        match &e.fit {
            Some(f) => {
                let terms: Vec<String> = f
                    .names
                    .iter()
                    .zip(&f.coefficients)
                    .zip(&f.p_values)
                    .map(|((n, c), p)| format!("{n} {c:.4} ({})", significance(*p)))
                    .collect();
                let _ = writeln!(s, "  {:<16} {:<12} {}", e.set.as_str(), e.model, terms.join(", "));
            }
            None => {
                let _ = writeln!(s, "  {:<16} {:<12} no fit", e.set.as_str(), e.model);
            }
        }
    }
    s
}

/// Writes repetition.csv, change_table.csv, regressions.csv, decided.csv,
/// sweep.csv and summary.txt into `dir`.
pub fn report_emit(r: &AnalysisReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("repetition.csv"), repetition_csv(&r.repetition))?;
    fs::write(dir.join("change_table.csv"), change_csv(&r.change))?;
    fs::write(dir.join("regressions.csv"), regressions_csv(&r.regressions))?;
    fs::write(dir.join("decided.csv"), decided_csv(&r.decided))?;
    let mut sweep = Vec::new();
    write_sweep_csv(&mut sweep, &r.sweep)?;
    fs::write(dir.join("sweep.csv"), sweep)?;
    fs::write(dir.join("summary.txt"), summary_text(r))?;
    Ok(())
}
