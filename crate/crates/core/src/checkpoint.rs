//! Portable weights file: a text manifest followed by little-endian f32
//! tensors concatenated in manifest order.
//!
//! ```text
//! guesswhat-checkpoint 1
//! module oracle
//! profile toy
//! vocab_hash 0123456789abcdef
//! dim hidden 64
//! tensor oracle.lstm.w 256,128
//! end
//! <blob>
//! ```

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::decider::{Decider, DmVariant};
use crate::error::{Error, Result};
use crate::neuro::{ParamStore, Tensor};
use crate::oracle::Oracle;
use crate::profile::{DimMap, DmDims, GuesserDims, OracleDims, Profile, QGenDims};
use crate::questioner::{Guesser, QGen};

const MAGIC: &str = "guesswhat-checkpoint 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModuleId {
    Oracle,
    Guesser,
    QGen,
    Dm1,
    Dm2,
    Hybrid,
}

impl ModuleId {
    /// Dependency order used when training everything.
    pub const TRAIN_ORDER: [ModuleId; 5] = [
        ModuleId::Oracle,
        ModuleId::Guesser,
        ModuleId::QGen,
        ModuleId::Dm1,
        ModuleId::Dm2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModuleId::Oracle => "oracle",
            ModuleId::Guesser => "guesser",
            ModuleId::QGen => "qgen",
            ModuleId::Dm1 => "dm1",
            ModuleId::Dm2 => "dm2",
            ModuleId::Hybrid => "hybrid",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.ckpt", self.as_str())
    }

    pub fn variant(self) -> Option<DmVariant> {
        match self {
            ModuleId::Dm1 => Some(DmVariant::Dm1),
            ModuleId::Dm2 => Some(DmVariant::Dm2),
            ModuleId::Hybrid => Some(DmVariant::Hybrid),
            _ => None,
        }
    }

    pub fn of_variant(v: DmVariant) -> Self {
        match v {
            DmVariant::Dm1 => ModuleId::Dm1,
            DmVariant::Dm2 => ModuleId::Dm2,
            DmVariant::Hybrid => ModuleId::Hybrid,
        }
    }
}

impl fmt::Display for ModuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "oracle" => ModuleId::Oracle,
            "guesser" => ModuleId::Guesser,
            "qgen" => ModuleId::QGen,
            "dm1" => ModuleId::Dm1,
            "dm2" => ModuleId::Dm2,
            "hybrid" => ModuleId::Hybrid,
            other => return Err(Error::Argument(format!("unknown module {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub module: ModuleId,
    pub profile: Profile,
    pub vocab_hash: String,
    pub dims: DimMap,
    pub store: ParamStore<f32>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&format!("module {}\nprofile {}\nvocab_hash {}\n", self.module, self.profile, self.vocab_hash));
        for (k, v) in &self.dims {
            out.push_str(&format!("dim {k} {v}\n"));
        }
        for (name, t) in self.store.iter() {
            let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
            out.push_str(&format!("tensor {name} {}\n", shape.join(",")));
        }
        out.push_str("end\n");
        let mut bytes = out.into_bytes();
        for (_, t) in self.store.iter() {
            for v in t.data() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        bytes
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let mut line = String::new();
        let mut next = |r: &mut BufReader<R>| -> Result<String> {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Format("checkpoint header ended early".into()));
            }
            Ok(line.trim_end_matches('\n').to_string())
        };
        if next(&mut r)? != MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let mut module = None;
        let mut profile = None;
        let mut vocab_hash = None;
        let mut dims = DimMap::new();
        let mut index: Vec<(String, Vec<usize>)> = Vec::new();
        loop {
            let l = next(&mut r)?;
            if l == "end" {
                break;
            }
            let parts: Vec<&str> = l.split(' ').collect();
            match parts.as_slice() {
                ["module", m] => module = Some(m.parse::<ModuleId>()?),
                ["profile", p] => profile = Some(p.parse::<Profile>()?),
                ["vocab_hash", h] => vocab_hash = Some(h.to_string()),
                ["dim", k, v] => {
                    let v = v.parse().map_err(|_| Error::Format(format!("bad dimension line {l:?}")))?;
                    dims.insert(k.to_string(), v);
                }
                ["tensor", name, shape] => {
                    let shape = shape
                        .split(',')
                        .map(|s| s.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::Format(format!("bad tensor line {l:?}")))?;
                    if index.iter().any(|(n, _)| n == name) {
                        return Err(Error::Format(format!("duplicate tensor {name}")));
                    }
                    index.push((name.to_string(), shape));
                }
                _ => return Err(Error::Format(format!("unrecognised header line {l:?}"))),
            }
        }
        let missing = |what: &str| Error::Format(format!("checkpoint header lacks {what}"));
        let mut blob = Vec::new();
        r.read_to_end(&mut blob)?;
        let expected: usize = index.iter().map(|(_, s)| s.iter().product::<usize>()).sum::<usize>() * 4;
        if blob.len() != expected {
            return Err(Error::Format(format!(
                "weight blob has {} bytes, manifest needs {expected}",
                blob.len()
            )));
        }
        let mut store = ParamStore::new();
        let mut off = 0;
        for (name, shape) in index {
            let n: usize = shape.iter().product();
            let data = blob[off..off + 4 * n]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            off += 4 * n;
            store.add(name, Tensor::new(shape, data)?);
        }
        Ok(Self {
            module: module.ok_or_else(|| missing("a module line"))?,
            profile: profile.ok_or_else(|| missing("a profile line"))?,
            vocab_hash: vocab_hash.ok_or_else(|| missing("a vocab_hash line"))?,
            dims,
            store,
        })
    }

    /// Verifies that this checkpoint may be loaded as `module` under the
    /// given profile and vocabulary.
    pub fn check(&self, module: ModuleId, profile: Profile, vocab_hash: &str) -> Result<()> {
        if self.module != module {
            return Err(Error::Compatibility(format!("checkpoint holds {}, expected {module}", self.module)));
        }
        if self.profile != profile {
            return Err(Error::Compatibility(format!(
                "checkpoint was trained with the {} profile, expected {profile}",
                self.profile
            )));
        }
        if self.vocab_hash != vocab_hash {
            return Err(Error::Compatibility(format!(
                "vocabulary hash {} does not match {vocab_hash}",
                self.vocab_hash
            )));
        }
        Ok(())
    }
}

pub fn save_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    f.write_all(&ck.to_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let f = std::fs::File::open(path.as_ref())?;
    Checkpoint::from_reader(f)
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let bytes = std::fs::read(path.as_ref())?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Copies tensors by name into a freshly built store with the same layout.
fn adopt(target: &mut ParamStore<f32>, source: ParamStore<f32>) -> Result<()> {
    if target.len() != source.len() {
        return Err(Error::Compatibility(format!(
            "checkpoint has {} tensors, model expects {}",
            source.len(),
            target.len()
        )));
    }
    for (name, t) in source.iter() {
        let id = target
            .id(name)
            .ok_or_else(|| Error::Compatibility(format!("checkpoint tensor {name} is not part of the model")))?;
        target
            .replace(id, t.clone())
            .map_err(|e| Error::Compatibility(e.to_string()))?;
    }
    Ok(())
}

fn layout_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0)
}

/// Conversion between a model and its checkpoint.
pub trait Persist: Sized {
    fn module_id(&self) -> ModuleId;
    fn dims_map(&self) -> DimMap;
    fn params(&self) -> &ParamStore<f32>;
    fn rebuild(module: ModuleId, dims: &DimMap) -> Result<Self>;
    fn params_mut(&mut self) -> &mut ParamStore<f32>;

    fn to_checkpoint(&self, profile: Profile, vocab_hash: &str) -> Checkpoint {
        Checkpoint {
            module: self.module_id(),
            profile,
            vocab_hash: vocab_hash.to_string(),
            dims: self.dims_map(),
            store: self.params().clone(),
        }
    }

    fn from_checkpoint(ck: Checkpoint, module: ModuleId, profile: Profile, vocab_hash: &str) -> Result<Self> {
        ck.check(module, profile, vocab_hash)?;
        let mut m = Self::rebuild(module, &ck.dims)?;
        adopt(m.params_mut(), ck.store)?;
        Ok(m)
    }
}

impl Persist for Oracle<f32> {
    fn module_id(&self) -> ModuleId {
        ModuleId::Oracle
    }
    fn dims_map(&self) -> DimMap {
        self.dims.to_map()
    }
    fn params(&self) -> &ParamStore<f32> {
        &self.store
    }
    fn params_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }
    fn rebuild(_: ModuleId, dims: &DimMap) -> Result<Self> {
        Ok(Oracle::new(OracleDims::from_map(dims)?, &mut layout_rng()))
    }
}

impl Persist for Guesser<f32> {
    fn module_id(&self) -> ModuleId {
        ModuleId::Guesser
    }
    fn dims_map(&self) -> DimMap {
        self.dims.to_map()
    }
    fn params(&self) -> &ParamStore<f32> {
        &self.store
    }
    fn params_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }
    fn rebuild(_: ModuleId, dims: &DimMap) -> Result<Self> {
        Ok(Guesser::new(GuesserDims::from_map(dims)?, &mut layout_rng()))
    }
}

impl Persist for QGen<f32> {
    fn module_id(&self) -> ModuleId {
        ModuleId::QGen
    }
    fn dims_map(&self) -> DimMap {
        self.dims.to_map()
    }
    fn params(&self) -> &ParamStore<f32> {
        &self.store
    }
    fn params_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }
    fn rebuild(_: ModuleId, dims: &DimMap) -> Result<Self> {
        Ok(QGen::new(QGenDims::from_map(dims)?, &mut layout_rng()))
    }
}

impl Persist for Decider<f32> {
    fn module_id(&self) -> ModuleId {
        ModuleId::of_variant(self.variant)
    }
    fn dims_map(&self) -> DimMap {
        self.dims.to_map()
    }
    fn params(&self) -> &ParamStore<f32> {
        &self.store
    }
    fn params_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }
    fn rebuild(module: ModuleId, dims: &DimMap) -> Result<Self> {
        let variant = module
            .variant()
            .ok_or_else(|| Error::Compatibility(format!("{module} is not a decider")))?;
        Ok(Decider::new(variant, DmDims::from_map(dims)?, &mut layout_rng()))
    }
}
