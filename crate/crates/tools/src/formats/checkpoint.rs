//! `LASTCKPT` container: magic, one version byte, a little-endian `u32`
//! header length, a `key = value` text header, then the parameters as
//! little-endian `f64`s in layout order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use last_core::{Checkpoint, NetworkSpec, ParamVector};
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"LASTCKPT";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u8),
    #[error("checkpoint header is truncated")]
    TruncatedHeader,
    #[error("checkpoint blob holds {found} bytes, expected {expected}")]
    TruncatedBlob { expected: usize, found: usize },
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("unsupported dtype {0:?}")]
    Dtype(String),
    #[error("header declares {declared} parameters but the spec needs {expected}")]
    CountMismatch { declared: usize, expected: usize },
    #[error("invalid network spec in checkpoint: {0}")]
    Spec(#[from] last_core::net::NetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn header_text(ck: &Checkpoint) -> String {
    let spec = &ck.spec;
    let hidden: Vec<String> = spec.hidden.iter().map(|h| h.to_string()).collect();
    let mut out = String::new();
    out.push_str(&format!("dtype = {}\n", Checkpoint::DTYPE));
    out.push_str(&format!("input_dim = {}\n", spec.input_dim));
    out.push_str(&format!("hidden = {}\n", hidden.join(",")));
    out.push_str(&format!("num_classes = {}\n", spec.num_classes));
    out.push_str(&format!("param_count = {}\n", ck.params.len()));
    for (k, v) in &ck.metadata {
        out.push_str(&format!("meta.{} = {}\n", escape(k), escape(v)));
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('\n', "\\n")
        .replace('\r', "\\r")
        .replace('=', "\\=")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let header = header_text(ck);
    let mut out = Vec::with_capacity(13 + header.len() + 8 * ck.params.len());
    out.extend_from_slice(MAGIC);
    out.push(Checkpoint::FORMAT_VERSION);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in ck.params.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn parse_usize(fields: &BTreeMap<String, String>, key: &str) -> Result<usize, CheckpointError> {
    let raw = fields
        .get(key)
        .ok_or_else(|| CheckpointError::Header(format!("missing key {key}")))?;
    raw.parse()
        .map_err(|_| CheckpointError::Header(format!("{key} is not an integer: {raw:?}")))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let rest = &bytes[MAGIC.len()..];
    let (&version, rest) = rest.split_first().ok_or(CheckpointError::TruncatedHeader)?;
    if version != Checkpoint::FORMAT_VERSION {
        return Err(CheckpointError::Version(version));
    }
    if rest.len() < 4 {
        return Err(CheckpointError::TruncatedHeader);
    }
    let header_len = u32::from_le_bytes(rest[..4].try_into().expect("4 bytes")) as usize;
    let rest = &rest[4..];
    if rest.len() < header_len {
        return Err(CheckpointError::TruncatedHeader);
    }
    let header = std::str::from_utf8(&rest[..header_len])
        .map_err(|_| CheckpointError::Header("header is not UTF-8".into()))?;
    let blob = &rest[header_len..];

    let mut fields = BTreeMap::new();
    let mut metadata = BTreeMap::new();
    for line in header.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| CheckpointError::Header(format!("malformed line {line:?}")))?;
        match k.strip_prefix("meta.") {
            Some(key) => metadata.insert(unescape(key), unescape(v)),
            None => fields.insert(k.to_string(), v.to_string()),
        };
    }
    let dtype = fields.get("dtype").map(String::as_str).unwrap_or_default();
    if dtype != Checkpoint::DTYPE {
        return Err(CheckpointError::Dtype(dtype.to_string()));
    }
    let hidden = match fields.get("hidden").map(String::as_str) {
        None => return Err(CheckpointError::Header("missing key hidden".into())),
        Some("") => Vec::new(),
        Some(raw) => raw
            .split(',')
            .map(|h| h.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| CheckpointError::Header(format!("bad hidden widths {raw:?}")))?,
    };
    let spec = NetworkSpec::new(parse_usize(&fields, "input_dim")?, hidden, parse_usize(&fields, "num_classes")?)?;
    let declared = parse_usize(&fields, "param_count")?;
    if declared != spec.param_count() {
        return Err(CheckpointError::CountMismatch {
            declared,
            expected: spec.param_count(),
        });
    }
    if blob.len() != 8 * declared {
        return Err(CheckpointError::TruncatedBlob {
            expected: 8 * declared,
            found: blob.len(),
        });
    }
    let values = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let params = ParamVector::from_values(&spec, values)?;
    Ok(Checkpoint { spec, params, metadata })
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<(), CheckpointError> {
    fs::write(path, encode_checkpoint(ck))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    decode_checkpoint(&fs::read(path)?)
}
