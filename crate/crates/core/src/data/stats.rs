use std::collections::BTreeSet;

use crate::data::record::{Answer, GameRecord, Status};

/// Summary counts of a game collection.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetStats {
    pub n_games: usize,
    pub n_success: usize,
    pub n_failure: usize,
    pub n_incomplete: usize,
    pub n_questions: usize,
    /// Fractions of Yes, No and N/A answers.
    pub answer_distribution: [f64; 3],
    pub mean_questions: f64,
    pub dialogues_per_image: f64,
}

pub fn dataset_stats(games: &[GameRecord]) -> DatasetStats {
    let mut answers = [0usize; 3];
    let mut status = [0usize; 3];
    let mut images = BTreeSet::new();
    for g in games {
        images.insert(g.image.id);
        status[match g.status {
            Status::Success => 0,
            Status::Failure => 1,
            Status::Incomplete => 2,
        }] += 1;
        for qa in &g.qas {
            answers[qa.answer.index()] += 1;
        }
    }
    let n_questions: usize = answers.iter().sum();
    let frac = |c: usize| if n_questions == 0 { 0.0 } else { c as f64 / n_questions as f64 };
    DatasetStats {
        n_games: games.len(),
        n_success: status[0],
        n_failure: status[1],
        n_incomplete: status[2],
        n_questions,
        answer_distribution: [frac(answers[0]), frac(answers[1]), frac(answers[2])],
        mean_questions: if games.is_empty() { 0.0 } else { n_questions as f64 / games.len() as f64 },
        dialogues_per_image: if images.is_empty() { 0.0 } else { games.len() as f64 / images.len() as f64 },
    }
}

impl DatasetStats {
    pub fn success_rate(&self) -> f64 {
        if self.n_games == 0 {
            0.0
        } else {
            self.n_success as f64 / self.n_games as f64
        }
    }

    pub fn render(&self) -> String {
        let pct = |f: f64| 100.0 * f;
        let n = self.n_games.max(1) as f64;
        format!(
            "games: {}\nsuccess: {} ({:.1}%)\nfailure: {} ({:.1}%)\nincomplete: {} ({:.1}%)\nquestions: {}\nanswers: Yes {:.1}% / No {:.1}% / N/A {:.1}%\nmean questions per dialogue: {:.2}\ndialogues per image: {:.2}\n",
            self.n_games,
            self.n_success,
            100.0 * self.n_success as f64 / n,
            self.n_failure,
            100.0 * self.n_failure as f64 / n,
            self.n_incomplete,
            100.0 * self.n_incomplete as f64 / n,
            self.n_questions,
            pct(self.answer_distribution[Answer::Yes.index()]),
            pct(self.answer_distribution[Answer::No.index()]),
            pct(self.answer_distribution[Answer::NA.index()]),
            self.mean_questions,
            self.dialogues_per_image,
        )
    }
}
