use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Precomputed per-image feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    rows: BTreeMap<i64, Vec<f32>>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        Self { dim, rows: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Inserts a row; returns true when it replaced an existing one.
    pub fn insert(&mut self, image_id: i64, v: Vec<f32>) -> Result<bool> {
        if v.len() != self.dim {
            return Err(Error::dim(format!("feature row for image {image_id}"), self.dim, v.len()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format(format!("non-finite feature for image {image_id}")));
        }
        Ok(self.rows.insert(image_id, v).is_some())
    }

    pub fn get(&self, image_id: i64) -> Result<&[f32]> {
        self.rows
            .get(&image_id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::AbsentKey(format!("no image features for image {image_id}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &[f32])> {
        self.rows.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn load_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let dim: usize = header
            .trim()
            .strip_prefix("dim=")
            .and_then(|d| d.parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Format(format!("feature table header must be dim=<N>, got {header:?}")))?;
        let mut table = Self::new(dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let row = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let (id, values) = line
                .split_once('\t')
                .ok_or_else(|| Error::Format(format!("row {row}: expected <image_id>\\t<values>")))?;
            let id: i64 = id
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {row}: bad image id {id:?}")))?;
            let v: Vec<f32> = values
                .split(',')
                .map(|s| s.trim().parse::<f32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("row {row}: {e}")))?;
            if v.len() != dim {
                return Err(Error::Format(format!("row {row}: expected {dim} values, found {}", v.len())));
            }
            if table.insert(id, v).map_err(|e| Error::Format(format!("row {row}: {e}")))? {
                log::warn!("feature table row {row}: duplicate image id {id}, keeping the last row");
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_from(BufReader::new(std::fs::File::open(path.as_ref())?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
        writeln!(f, "dim={}", self.dim)?;
        for (id, v) in &self.rows {
            let vals: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            writeln!(f, "{id}\t{}", vals.join(","))?;
        }
        f.flush()?;
        Ok(())
    }
}
