use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::data::record::{Answer, GameRecord};
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const SOS: usize = 2;
pub const EOS: usize = 3;
pub const YES: usize = 4;
pub const NO: usize = 5;
pub const NA: usize = 6;

const RESERVED: [&str; 7] = ["<pad>", "<unk>", "<sos>", "<eos>", "<yes>", "<no>", "<na>"];

/// Lowercases, splits on whitespace and splits `? ! . ,` into their own tokens.
pub fn tokenize(question: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in question.chars().flat_map(char::to_lowercase) {
        if ch.is_whitespace() {
            if !cur.is_empty() {
                tokens.push(std::mem::take(&mut cur));
            }
        } else if matches!(ch, '?' | '!' | '.' | ',') {
            if !cur.is_empty() {
                tokens.push(std::mem::take(&mut cur));
            }
            tokens.push(ch.to_string());
        } else {
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

/// Tokenized question re-joined with single spaces.
pub fn normalize_question(question: &str) -> String {
    tokenize(question).join(" ")
}

pub fn answer_token(a: Answer) -> usize {
    match a {
        Answer::Yes => YES,
        Answer::No => NO,
        Answer::NA => NA,
    }
}

pub fn is_answer_token(id: usize) -> bool {
    matches!(id, YES | NO | NA)
}

/// Word/id mapping with reserved ids 0..=6.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
    min_freq: usize,
}

impl Vocab {
    fn from_words(words: Vec<String>, min_freq: usize) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate vocabulary entry {w:?}")));
            }
        }
        Ok(Self { words, index, min_freq })
    }

    /// Reserved tokens first, then words with frequency >= `min_freq`
    /// ordered by (frequency desc, word asc).
    pub fn build<'a>(questions: impl IntoIterator<Item = &'a str>, min_freq: usize) -> Result<Self> {
        let mut freq: HashMap<String, usize> = HashMap::new();
        let mut any = false;
        for q in questions {
            any = true;
            for t in tokenize(q) {
                *freq.entry(t).or_default() += 1;
            }
        }
        if !any || freq.is_empty() {
            return Err(Error::Argument("cannot build a vocabulary from an empty corpus".into()));
        }
        let mut kept: Vec<(String, usize)> = freq
            .into_iter()
            .filter(|(w, c)| *c >= min_freq && !RESERVED.contains(&w.as_str()))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let words = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(kept.into_iter().map(|(w, _)| w))
            .collect();
        Self::from_words(words, min_freq)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, id: usize) -> &str {
        self.words.get(id).map_or("<unk>", String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn encode(&self, question: &str) -> Vec<usize> {
        tokenize(question).iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter().map(|&i| self.word(i)).collect::<Vec<_>>().join(" ")
    }

    /// Short content hash, used to tie checkpoints to a vocabulary.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("min_freq={}\n", self.min_freq));
        for w in &self.words {
            h.update(w.as_bytes());
            h.update(b"\n");
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
        writeln!(f, "min_freq={}", self.min_freq)?;
        for w in &self.words {
            writeln!(f, "{w}")?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut lines = text.lines();
        let min_freq = lines
            .next()
            .and_then(|l| l.strip_prefix("min_freq="))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format("vocabulary file lacks a min_freq header".into()))?;
        let words: Vec<String> = lines.map(str::to_string).collect();
        if words.len() < RESERVED.len() || words.iter().zip(RESERVED).any(|(w, r)| w != r) {
            return Err(Error::Format("vocabulary file lacks the reserved tokens".into()));
        }
        Self::from_words(words, min_freq)
    }
}

/// Builds the vocabulary from the questions of a training split.
pub fn build_vocab(games: &[GameRecord], min_freq: usize) -> Result<Vocab> {
    Vocab::build(games.iter().flat_map(|g| g.qas.iter().map(|qa| qa.question.as_str())), min_freq)
}
