//! Dimension profiles: desk-scale `toy` defaults and the larger `paper`
//! sizes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Profile {
    Toy,
    Paper,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Toy => "toy",
            Profile::Paper => "paper",
        }
    }

    pub fn batch_size(self) -> usize {
        match self {
            Profile::Toy => 32,
            Profile::Paper => 64,
        }
    }

    pub fn max_question_len(self) -> usize {
        match self {
            Profile::Toy => 12,
            Profile::Paper => 30,
        }
    }

    pub fn oracle(self, vocab: usize, n_categories: usize) -> OracleDims {
        let (word_emb, hidden, cat_emb, mlp_hidden) = match self {
            Profile::Toy => (64, 64, 16, 128),
            Profile::Paper => (300, 512, 512, 512),
        };
        OracleDims {
            vocab,
            n_categories,
            word_emb,
            hidden,
            cat_emb,
            mlp_hidden,
        }
    }

    pub fn guesser(self, vocab: usize, n_categories: usize) -> GuesserDims {
        let (word_emb, hidden, cat_emb, obj_hidden) = match self {
            Profile::Toy => (64, 64, 16, 128),
            Profile::Paper => (300, 512, 512, 512),
        };
        GuesserDims {
            vocab,
            n_categories,
            word_emb,
            hidden,
            cat_emb,
            obj_hidden,
        }
    }

    pub fn qgen(self, vocab: usize, feature_dim: usize) -> QGenDims {
        let (word_emb, proj, hidden) = match self {
            Profile::Toy => (64, 32, 128),
            Profile::Paper => (512, 512, 1024),
        };
        QGenDims {
            vocab,
            feature_dim,
            word_emb,
            proj,
            hidden,
        }
    }

    pub fn dm_hidden(self) -> usize {
        match self {
            Profile::Toy => 128,
            Profile::Paper => 512,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "toy" => Ok(Profile::Toy),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Argument(format!("unknown profile {other:?} (expected toy or paper)"))),
        }
    }
}

/// Named integer dimensions as stored in checkpoint headers.
pub type DimMap = BTreeMap<String, usize>;

pub(crate) fn dim(map: &DimMap, key: &str) -> Result<usize> {
    map.get(key)
        .copied()
        .ok_or_else(|| Error::Format(format!("checkpoint header lacks dimension {key:?}")))
}

macro_rules! dims_struct {
    ($(#[$m:meta])* $name:ident { $($field:ident),* $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq)]
        pub struct $name {
            $(pub $field: usize,)*
        }

        impl $name {
            pub fn to_map(&self) -> DimMap {
                let mut m = DimMap::new();
                $(m.insert(stringify!($field).to_string(), self.$field);)*
                m
            }

            pub fn from_map(map: &DimMap) -> Result<Self> {
                Ok(Self { $($field: dim(map, stringify!($field))?,)* })
            }
        }
    };
}

dims_struct!(
    /// `n_categories` is the number of rows of the category table
    /// (largest category id + 1).
    OracleDims { vocab, n_categories, word_emb, hidden, cat_emb, mlp_hidden }
);
dims_struct!(GuesserDims { vocab, n_categories, word_emb, hidden, cat_emb, obj_hidden });
dims_struct!(QGenDims { vocab, feature_dim, word_emb, proj, hidden });
dims_struct!(
    /// `hidden_dim` is the width of the encoder state the variant consumes.
    DmDims { feature_dim, hidden_dim, mlp_hidden }
);
