//! Repeated-question rates: exact matches of normalized question strings
//! within a dialogue.

use std::collections::HashSet;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::data::vocab::{normalize_question, tokenize};
use crate::game::GameResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scope {
    Overall,
    /// Only repetitions of questions that name an object.
    ObjectsOnly,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Overall => "overall",
            Scope::ObjectsOnly => "objects-only",
        }
    }
}

const COCO_CATEGORIES: [&str; 80] = [
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat", "traffic light",
    "fire hydrant", "stop sign", "parking meter", "bench", "bird", "cat", "dog", "horse", "sheep", "cow",
    "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella", "handbag", "tie", "suitcase", "frisbee",
    "skis", "snowboard", "sports ball", "kite", "baseball bat", "baseball glove", "skateboard", "surfboard",
    "tennis racket", "bottle", "wine glass", "cup", "fork", "knife", "spoon", "bowl", "banana", "apple",
    "sandwich", "orange", "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair", "couch",
    "potted plant", "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote", "keyboard", "cell phone",
    "microwave", "oven", "toaster", "sink", "refrigerator", "book", "clock", "vase", "scissors", "teddy bear",
    "hair drier", "toothbrush",
];

const COCO_SUPERCATEGORIES: [&str; 12] = [
    "person", "vehicle", "outdoor", "animal", "accessory", "sports", "kitchen", "food", "furniture",
    "electronic", "appliance", "indoor",
];

/// Additional object words used to restrict the count to object questions.
const MANUAL_OBJECT_WORDS: [&str; 17] = [
    "man", "woman", "girl", "boy", "table", "meter", "bear", "cell", "phone", "wine", "glass", "racket", "baseball",
    "glove", "hydrant", "drier", "kite",
];

/// Single-token object keywords. Multi-word category names contribute
/// their head (last) word.
pub fn object_keywords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        COCO_CATEGORIES
            .iter()
            .map(|c| c.rsplit(' ').next().expect("non-empty category"))
            .chain(COCO_SUPERCATEGORIES.iter().copied())
            .chain(MANUAL_OBJECT_WORDS.iter().copied())
            .collect()
    })
}

/// Whole-token, case-insensitive keyword match.
pub fn mentions_object(question: &str) -> bool {
    let kw = object_keywords();
    tokenize(question).iter().any(|t| kw.contains(t.as_str()))
}

/// Number of repeated questions in one dialogue: a question counts when an
/// identical normalized question occurred earlier in the same dialogue.
pub fn count_repeats(questions: &[String], scope: Scope) -> usize {
    let mut seen = HashSet::new();
    let mut n = 0;
    for q in questions {
        let norm = normalize_question(q);
        if !seen.insert(norm) && (scope == Scope::Overall || mentions_object(q)) {
            n += 1;
        }
    }
    n
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepetitionStats {
    pub scope: Scope,
    pub n_games: usize,
    pub games_with_repeat: usize,
    /// Fraction of dialogues with at least one repeated question.
    pub across_games: BigRational,
    /// Mean over dialogues (with at least one question) of repeated /
    /// total questions.
    pub within_game: BigRational,
}

impl RepetitionStats {
    pub fn across_games_pct(&self) -> f64 {
        pct(&self.across_games)
    }

    pub fn within_game_pct(&self) -> f64 {
        pct(&self.within_game)
    }
}

pub(crate) fn pct(r: &BigRational) -> f64 {
    (r * BigRational::from_integer(BigInt::from(100)))
        .to_f64()
        .unwrap_or(f64::NAN)
}

pub(crate) fn ratio(num: usize, den: usize) -> BigRational {
    if den == 0 {
        BigRational::zero()
    } else {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

pub fn repetition_stats(results: &[GameResult], scope: Scope) -> RepetitionStats {
    let mut with_repeat = 0;
    let mut within_sum = BigRational::zero();
    let mut n_within = 0;
    for r in results {
        let qs: Vec<String> = r.transcript.iter().map(|t| t.question.clone()).collect();
        let k = count_repeats(&qs, scope);
        if k > 0 {
            with_repeat += 1;
        }
        if !qs.is_empty() {
            within_sum += ratio(k, qs.len());
            n_within += 1;
        }
    }
    let within_game = if n_within == 0 {
        BigRational::zero()
    } else {
        within_sum / BigRational::from_integer(BigInt::from(n_within))
    };
    RepetitionStats {
        scope,
        n_games: results.len(),
        games_with_repeat: with_repeat,
        across_games: ratio(with_repeat, results.len()),
        within_game,
    }
}
