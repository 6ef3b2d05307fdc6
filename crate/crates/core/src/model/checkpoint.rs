//! Checkpoint files.
//!
//! ```text
//! golde-checkpoint v1
//! entities=<N>
//! relations=<R>
//! components=<P4,P4,Q5,Q5>
//! norm=<l>
//! precision=<f32|f64>
//! seed=<u64>
//! step=<u64>
//! params=<count>
//! end
//! <count little-endian IEEE-754 values, 4 or 8 bytes each>
//! ```
//!
//! The values follow the flat parameter layout of [`Model`]: the entity table,
//! then one block per relation in id order.

use std::fs;
use std::path::Path;

use super::{ManifoldConfig, Model, Precision};
use crate::error::{Error, Result};

const MAGIC: &str = "golde-checkpoint v1";

/// A model plus the provenance needed to resume or reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub seed: u64,
    pub step: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let header = format!(
            "{MAGIC}\nentities={}\nrelations={}\ncomponents={}\nnorm={}\nprecision={}\nseed={}\nstep={}\nparams={}\nend\n",
            m.num_entities(),
            m.num_relations(),
            m.config().components_string(),
            m.config().norm(),
            m.precision(),
            self.seed,
            self.step,
            m.params().len()
        );
        let width = match m.precision() {
            Precision::F32 => 4,
            Precision::F64 => 8,
        };
        let mut out = Vec::with_capacity(header.len() + width * m.params().len());
        out.extend_from_slice(header.as_bytes());
        for &v in m.params() {
            match m.precision() {
                Precision::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                Precision::F64 => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: String| Error::Checkpoint(msg);
        let mut pos = 0;
        let mut lines = Vec::new();
        loop {
            let nl = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| bad("header is not terminated by `end`".into()))?;
            let line = std::str::from_utf8(&bytes[pos..pos + nl]).map_err(|_| bad("header is not UTF-8".into()))?;
            pos += nl + 1;
            if line == "end" {
                break;
            }
            lines.push(line);
            if lines.len() > 64 {
                return Err(bad("header is too long".into()));
            }
        }
        if lines.first() != Some(&MAGIC) {
            return Err(bad(format!("missing `{MAGIC}` magic line")));
        }
        let field = |key: &str| -> Result<&str> {
            lines[1..]
                .iter()
                .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| bad(format!("header field `{key}` missing")))
        };
        let num = |key: &str| -> Result<u64> {
            field(key)?
                .parse::<u64>()
                .map_err(|_| bad(format!("header field `{key}` is not an integer")))
        };
        let entities = num("entities")? as usize;
        let relations = num("relations")? as usize;
        let norm = u32::try_from(num("norm")?).map_err(|_| bad("norm out of range".into()))?;
        let config = ManifoldConfig::parse_components(field("components")?, norm)
            .map_err(|e| bad(format!("bad manifold config: {e}")))?;
        let precision: Precision = field("precision")?.parse().map_err(|e| bad(format!("{e}")))?;
        let seed = num("seed")?;
        let step = num("step")?;
        let count = num("params")? as usize;
        let expected = entities * config.stored_dim() + relations * config.relation_param_len();
        if count != expected {
            return Err(bad(format!(
                "params={count} does not match {expected} implied by the header"
            )));
        }
        let width = match precision {
            Precision::F32 => 4,
            Precision::F64 => 8,
        };
        let body = &bytes[pos..];
        if body.len() != count * width {
            return Err(bad(format!(
                "payload has {} bytes, expected {}",
                body.len(),
                count * width
            )));
        }
        let params: Vec<f64> = match precision {
            Precision::F32 => body
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect(),
            Precision::F64 => body
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        };
        if let Some(i) = params.iter().position(|v| !v.is_finite()) {
            return Err(bad(format!("non-finite value at parameter {i}")));
        }
        let model = Model::from_parts(config, entities, relations, precision, params)?;
        Ok(Checkpoint { model, seed, step })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
