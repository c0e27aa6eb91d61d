//! Versioned binary model container: magic bytes, format version, string
//! metadata, inventory content hashes and named `f64` tensors. Everything is
//! written in name order so saving the same model twice is byte-identical.

use crate::error::{Error, Result};
use crate::models::params::Params;
use ndarray::{ArrayD, IxDyn};
use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"TTSFCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub inventory_hashes: BTreeMap<String, String>,
    pub params: Params,
}

impl Checkpoint {
    pub fn new() -> Self {
        Checkpoint::default()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        write_u32(&mut out, self.meta.len() as u32);
        for (k, v) in &self.meta {
            write_str(&mut out, k);
            write_str(&mut out, v);
        }
        write_u32(&mut out, self.inventory_hashes.len() as u32);
        for (k, v) in &self.inventory_hashes {
            write_str(&mut out, k);
            write_str(&mut out, v);
        }
        write_u32(&mut out, self.params.len() as u32);
        for (name, tensor) in self.params.iter() {
            write_str(&mut out, name);
            write_u32(&mut out, tensor.ndim() as u32);
            for &d in tensor.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &x in tensor.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self> {
        let mut r = Reader {
            bytes,
            at: 0,
            origin,
        };
        let magic = r.take(8)?;
        if magic != MAGIC {
            return Err(r.err("bad magic bytes (not a model checkpoint)"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(r.err(&format!("unsupported format version {version}")));
        }
        let mut meta = BTreeMap::new();
        for _ in 0..r.u32()? {
            let k = r.string()?;
            let v = r.string()?;
            meta.insert(k, v);
        }
        let mut inventory_hashes = BTreeMap::new();
        for _ in 0..r.u32()? {
            let k = r.string()?;
            let v = r.string()?;
            inventory_hashes.insert(k, v);
        }
        let mut params = Params::new();
        for _ in 0..r.u32()? {
            let name = r.string()?;
            let ndim = r.u32()? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.u64()? as usize);
            }
            let len: usize = shape.iter().product();
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                data.push(r.f64()?);
            }
            let tensor = ArrayD::from_shape_vec(IxDyn(&shape), data)
                .map_err(|e| r.err(&format!("tensor `{name}`: {e}")))?;
            params.insert(name, tensor);
        }
        Ok(Checkpoint {
            meta,
            inventory_hashes,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }

    pub fn meta_str(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Checkpoint {
                path: String::new(),
                msg: format!("missing metadata key `{key}`"),
            })
    }

    pub fn meta_usize(&self, key: &str) -> Result<usize> {
        self.meta_str(key)?.parse().map_err(|_| Error::Checkpoint {
            path: String::new(),
            msg: format!("metadata key `{key}` is not an integer"),
        })
    }

    /// Verify a stored inventory hash against the currently loaded one.
    pub fn verify_inventory(&self, name: &str, current_hash: &str) -> Result<()> {
        match self.inventory_hashes.get(name) {
            Some(stored) if stored == current_hash => Ok(()),
            _ => Err(Error::InventoryHashMismatch(name.to_string())),
        }
    }
}

/// Serialize a tagging model (encoder dims, vocabulary, mask size and all
/// parameters). The transition mask itself is structural and is rebuilt from
/// the inventory at load time.
pub fn tagger_to_checkpoint(model: &crate::models::train::TaggerModel, task: &str) -> Checkpoint {
    let mut ck = Checkpoint::new();
    ck.meta.insert("task".into(), task.to_string());
    ck.meta
        .insert("embed_dim".into(), model.encoder.embed_dim.to_string());
    ck.meta.insert(
        "bank_width_max".into(),
        model.encoder.bank_width_max.to_string(),
    );
    ck.meta.insert(
        "bank_channels".into(),
        model.encoder.bank_channels.to_string(),
    );
    ck.meta.insert("hidden".into(), model.encoder.hidden.to_string());
    ck.meta.insert("labels".into(), model.mask.labels().to_string());
    ck.meta.insert("vocab".into(), model.vocab.words().join("\n"));
    ck.params = model.params.clone();
    ck
}

/// Rebuild a tagging model from a checkpoint; the caller supplies the mask
/// (reconstructed from the current inventory) which must match the stored
/// label count.
pub fn tagger_from_checkpoint(
    ck: &Checkpoint,
    task: &str,
    mask: crate::models::crf::TransitionMask,
) -> Result<crate::models::train::TaggerModel> {
    let stored_task = ck.meta_str("task")?;
    if stored_task != task {
        return Err(Error::Checkpoint {
            path: String::new(),
            msg: format!("checkpoint holds task `{stored_task}`, expected `{task}`"),
        });
    }
    let labels = ck.meta_usize("labels")?;
    if labels != mask.labels() {
        return Err(Error::InventoryHashMismatch(format!(
            "{task} label count ({} vs stored {labels})",
            mask.labels()
        )));
    }
    let encoder = crate::models::encoder::EncoderConfig {
        embed_dim: ck.meta_usize("embed_dim")?,
        bank_width_max: ck.meta_usize("bank_width_max")?,
        bank_channels: ck.meta_usize("bank_channels")?,
        hidden: ck.meta_usize("hidden")?,
    };
    let vocab = crate::models::vocab::Vocab::from_list(
        ck.meta_str("vocab")?.split('\n').map(String::from).collect(),
    );
    Ok(crate::models::train::TaggerModel {
        vocab,
        encoder,
        mask,
        params: ck.params.clone(),
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
    origin: &'a str,
}

impl<'a> Reader<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Checkpoint {
            path: self.origin.to_string(),
            msg: msg.to_string(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(self.err("truncated file"));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let s = self.take(len)?;
        String::from_utf8(s.to_vec()).map_err(|_| self.err("invalid UTF-8 string"))
    }
}

fn write_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    write_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut ck = Checkpoint::new();
        ck.meta.insert("task".into(), "tn".into());
        ck.meta.insert("hidden".into(), "16".into());
        ck.inventory_hashes.insert("tn_categories".into(), "abc123".into());
        ck.params
            .insert("w", arr2(&[[1.5, -2.25], [0.0, f64::MIN_POSITIVE]]).into_dyn());
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes, "mem").unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.meta_str("task").unwrap(), "tn");
        assert_eq!(back.meta_usize("hidden").unwrap(), 16);
        assert_eq!(back.params.get("w"), ck.params.get("w"));
    }

    #[test]
    fn hash_verification() {
        let mut ck = Checkpoint::new();
        ck.inventory_hashes.insert("phonemes".into(), "aaa".into());
        assert!(ck.verify_inventory("phonemes", "aaa").is_ok());
        assert!(matches!(
            ck.verify_inventory("phonemes", "bbb"),
            Err(Error::InventoryHashMismatch(_))
        ));
        assert!(ck.verify_inventory("chars", "aaa").is_err());
    }

    #[test]
    fn rejects_foreign_bytes() {
        assert!(Checkpoint::from_bytes(b"not a checkpoint", "mem").is_err());
        assert!(Checkpoint::from_bytes(b"TTSFCKPT", "mem").is_err());
    }
}
