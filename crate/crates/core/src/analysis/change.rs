//! Per-game comparison of a decider run against the fixed-length baseline:
//! did the decider ask fewer, equal or more questions, and did that turn a
//! failure into a success (+), a success into a failure (-), or neither.

use std::collections::{BTreeSet, HashMap};

use num_rational::BigRational;

use crate::analysis::repetition::{pct, ratio};
use crate::error::{Error, Result};
use crate::game::GameResult;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChangeCounts {
    pub plus: usize,
    pub minus: usize,
    pub none: usize,
}

impl ChangeCounts {
    pub fn total(&self) -> usize {
        self.plus + self.minus + self.none
    }

    fn add(&mut self, dm_success: bool, base_success: bool) {
        match (dm_success, base_success) {
            (true, false) => self.plus += 1,
            (false, true) => self.minus += 1,
            _ => self.none += 1,
        }
    }
}

/// Counts over one denominator (all games, or decided games only).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChangeBlock {
    pub denominator: usize,
    pub fewer: ChangeCounts,
    pub equal: ChangeCounts,
    pub more: ChangeCounts,
}

impl ChangeBlock {
    /// Exact fraction of the denominator.
    pub fn frac(&self, count: usize) -> BigRational {
        ratio(count, self.denominator)
    }

    pub fn pct(&self, count: usize) -> f64 {
        pct(&self.frac(count))
    }

    pub fn rows(&self) -> [(&'static str, ChangeCounts); 3] {
        [("fewer", self.fewer), ("equal", self.equal), ("more", self.more)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChangeTable {
    pub all: ChangeBlock,
    pub decided: ChangeBlock,
}

/// Both result sets must cover the same game ids.
pub fn change_table(dm: &[GameResult], baseline: &[GameResult]) -> Result<ChangeTable> {
    let base: HashMap<i64, &GameResult> = baseline.iter().map(|r| (r.game_id, r)).collect();
    let dm_ids: BTreeSet<i64> = dm.iter().map(|r| r.game_id).collect();
    let base_ids: BTreeSet<i64> = base.keys().copied().collect();
    if dm_ids != base_ids || dm_ids.len() != dm.len() || base_ids.len() != baseline.len() {
        let diff: Vec<i64> = dm_ids.symmetric_difference(&base_ids).copied().collect();
        return Err(Error::Argument(format!(
            "decider and baseline results cover different games; symmetric difference {diff:?}"
        )));
    }
    let mut t = ChangeTable {
        all: ChangeBlock::default(),
        decided: ChangeBlock::default(),
    };
    for r in dm {
        let b = base[&r.game_id];
        let mut blocks = vec![&mut t.all];
        if r.decided {
            blocks.push(&mut t.decided);
        }
        for block in blocks {
            block.denominator += 1;
            let bucket = match r.n_questions.cmp(&b.n_questions) {
                std::cmp::Ordering::Less => &mut block.fewer,
                std::cmp::Ordering::Equal => &mut block.equal,
                std::cmp::Ordering::Greater => &mut block.more,
            };
            bucket.add(r.success, b.success);
        }
    }
    Ok(t)
}
