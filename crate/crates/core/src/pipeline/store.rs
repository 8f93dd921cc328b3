use std::collections::HashMap;
use std::fs;
use std::path::Path;

use morphlem_autodiff::{Array, ParamSet};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{JointModel, Provenance};
use crate::data::{Alphabet, TagInventory};
use crate::lemmatizer::{AttributeInventory, LemmatizerConfig, LemmatizerModel};
use crate::tagger::{TaggerConfig, TaggerModel};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"MORPHLEM";
pub const FORMAT_VERSION: u32 = 1;
const HEADER: usize = 8 + 4 + 8;

/// One named array in the payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    /// Byte offset into the payload.
    pub offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    metadata: Value,
    entries: Vec<StoreEntry>,
    payload_bytes: usize,
}

/// Named arrays plus JSON metadata.
///
/// Layout: the 8-byte magic `MORPHLEM`, the format version (`u32` LE), the
/// manifest length (`u64` LE), the JSON manifest, then the values of every
/// entry as little-endian `f64` in entry order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore {
    pub metadata: Value,
    pub arrays: Vec<(String, Array)>,
}

impl ParameterStore {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut entries = Vec::with_capacity(self.arrays.len());
        let mut offset = 0;
        for (name, a) in &self.arrays {
            entries.push(StoreEntry {
                name: name.clone(),
                shape: a.shape().to_vec(),
                dtype: "f64".into(),
                offset,
            });
            offset += a.len() * 8;
        }
        let manifest = serde_json::to_vec(&Manifest {
            version: FORMAT_VERSION,
            metadata: self.metadata.clone(),
            entries,
            payload_bytes: offset,
        })?;
        let mut out = Vec::with_capacity(HEADER + manifest.len() + offset);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(&manifest);
        for (_, a) in &self.arrays {
            for v in a.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER || &bytes[..8] != MAGIC {
            return Err(Error::Format("not a model file".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let manifest_end = HEADER
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Format("manifest extends past end of file".into()))?;
        let manifest: Manifest = serde_json::from_slice(&bytes[HEADER..manifest_end])?;
        if manifest.version != version {
            return Err(Error::Version {
                found: manifest.version,
                expected: FORMAT_VERSION,
            });
        }
        let payload = &bytes[manifest_end..];
        if payload.len() != manifest.payload_bytes {
            return Err(Error::LengthMismatch {
                what: "payload bytes",
                left: payload.len(),
                right: manifest.payload_bytes,
            });
        }
        let mut arrays = Vec::with_capacity(manifest.entries.len());
        for e in manifest.entries {
            if e.dtype != "f64" {
                return Err(Error::Format(format!(
                    "entry {}: unsupported type {}",
                    e.name, e.dtype
                )));
            }
            let count: usize = e.shape.iter().product();
            let end = e.offset + count * 8;
            if end > payload.len() {
                return Err(Error::LengthMismatch {
                    what: "entry extent",
                    left: payload.len(),
                    right: end,
                });
            }
            let data = payload[e.offset..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            arrays.push((e.name, Array::new(e.shape, data)));
        }
        Ok(ParameterStore {
            metadata: manifest.metadata,
            arrays,
        })
    }
}

fn fill_params(params: &mut ParamSet, arrays: &mut HashMap<String, Array>) -> Result<()> {
    let names: Vec<(morphlem_autodiff::ParamId, String)> = params
        .iter()
        .map(|(id, name, _)| (id, name.to_string()))
        .collect();
    for (id, name) in names {
        let a = arrays
            .remove(&name)
            .ok_or_else(|| Error::Format(format!("missing entry {name}")))?;
        params
            .set(id, a)
            .map_err(|e| Error::Format(format!("entry {name}: {e}")))?;
    }
    Ok(())
}

fn component<T: serde::de::DeserializeOwned>(meta: &Value, path: &[&str]) -> Result<T> {
    let mut v = meta;
    for p in path {
        v = v
            .get(p)
            .ok_or_else(|| Error::Format(format!("metadata lacks {}", path.join("."))))?;
    }
    Ok(serde_json::from_value(v.clone())?)
}

impl JointModel {
    pub fn to_store(&self) -> ParameterStore {
        let metadata = json!({
            "provenance": self.provenance,
            "tagger": {
                "config": self.tagger.config,
                "alphabet": self.tagger.alphabet,
                "tags": self.tagger.tags,
            },
            "lemmatizer": {
                "config": self.lemmatizer.config,
                "alphabet": self.lemmatizer.alphabet,
                "attributes": self.lemmatizer.attributes,
            },
        });
        let arrays = self
            .tagger
            .params
            .iter()
            .chain(self.lemmatizer.params.iter())
            .map(|(_, name, a)| (name.to_string(), a.clone()))
            .collect();
        ParameterStore { metadata, arrays }
    }

    /// Rebuilds a model; every stored entry must match a parameter exactly.
    pub fn from_store(store: ParameterStore) -> Result<Self> {
        let m = &store.metadata;
        let provenance: Provenance = component(m, &["provenance"])?;
        let tagger_config: TaggerConfig = component(m, &["tagger", "config"])?;
        let tagger_alphabet: Alphabet = component(m, &["tagger", "alphabet"])?;
        let tags: TagInventory = component(m, &["tagger", "tags"])?;
        let lem_config: LemmatizerConfig = component(m, &["lemmatizer", "config"])?;
        let lem_alphabet: Alphabet = component(m, &["lemmatizer", "alphabet"])?;
        let attributes: AttributeInventory = component(m, &["lemmatizer", "attributes"])?;

        let mut tagger = TaggerModel::new(tagger_config, tagger_alphabet, tags, 0)?;
        let mut lemmatizer = LemmatizerModel::new(lem_config, lem_alphabet, attributes, 0)?;
        let mut arrays: HashMap<String, Array> = HashMap::new();
        for (name, a) in store.arrays {
            if arrays.insert(name.clone(), a).is_some() {
                return Err(Error::Format(format!("duplicate entry {name}")));
            }
        }
        fill_params(&mut tagger.params, &mut arrays)?;
        fill_params(&mut lemmatizer.params, &mut arrays)?;
        if let Some(name) = arrays.keys().min() {
            return Err(Error::Format(format!("unexpected entry {name}")));
        }
        JointModel::new(tagger, lemmatizer, provenance)
    }
}

pub fn save_model(model: &JointModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = model.to_store().to_bytes()?;
    fs::write(path, bytes).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<JointModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    JointModel::from_store(ParameterStore::from_bytes(&bytes)?)
}
