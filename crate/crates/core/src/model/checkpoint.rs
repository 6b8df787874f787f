//! Binary parameter files.
//!
//! Layout, all integers little-endian: the magic `MTLHG1`, a `u16` version,
//! a `u32` entry count, then per entry a `u16` name length, the UTF-8 name,
//! four `u32` extents and the `f64` values. The first entry, `config`, holds
//! the architecture; the rest are `<conv>.weight` and `<conv>.bias`.

use std::fs;
use std::path::Path;

use super::config::ModelConfig;
use super::params::ModelParams;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"MTLHG1";
pub const VERSION: u16 = 1;

struct Entry {
    name: String,
    extents: [u32; 4],
    values: Vec<f64>,
}

fn config_values(c: &ModelConfig) -> Vec<f64> {
    [
        c.in_channels,
        c.n_classes,
        c.bins,
        c.stages,
        c.base_width,
        c.input_size,
    ]
    .iter()
    .map(|&v| v as f64)
    .collect()
}

fn entries(params: &ModelParams) -> Vec<Entry> {
    let mut out = vec![Entry {
        name: "config".into(),
        extents: [1, 1, 1, 6],
        values: config_values(&params.config),
    }];
    for (name, conv) in params.named_convs() {
        let s = conv.weight.shape();
        out.push(Entry {
            name: format!("{name}.weight"),
            extents: [s.n as u32, s.c as u32, s.h as u32, s.w as u32],
            values: conv.weight.data().to_vec(),
        });
        out.push(Entry {
            name: format!("{name}.bias"),
            extents: [conv.bias.len() as u32, 1, 1, 1],
            values: conv.bias.clone(),
        });
    }
    out
}

pub fn to_bytes(params: &ModelParams) -> Vec<u8> {
    let entries = entries(params);
    let mut buf = Vec::with_capacity(16 + params.num_params() * 8 + entries.len() * 64);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for e in entries {
        buf.extend_from_slice(&(e.name.len() as u16).to_le_bytes());
        buf.extend_from_slice(e.name.as_bytes());
        for x in e.extents {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        for v in e.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(Error::Format(format!(
                "checkpoint truncated at byte {}",
                self.at
            )));
        };
        let out = &self.buf[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
}

fn read_entries(bytes: &[u8]) -> Result<Vec<Entry>> {
    let mut r = Reader { buf: bytes, at: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::Format("not a checkpoint: bad magic".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let count = r.u32()? as usize;
    let mut out = Vec::new();
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Format("entry name is not UTF-8".into()))?
            .to_string();
        let extents = [r.u32()?, r.u32()?, r.u32()?, r.u32()?];
        let n = extents
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e as usize));
        let n = n.ok_or_else(|| Error::Format(format!("entry {name} is too large")))?;
        let raw = r.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Format(format!("entry {name} is too large")))?,
        )?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        out.push(Entry {
            name,
            extents,
            values,
        });
    }
    if r.at != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last entry",
            bytes.len() - r.at
        )));
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelParams> {
    let stored = read_entries(bytes)?;
    let Some(first) = stored
        .first()
        .filter(|e| e.name == "config" && e.values.len() == 6)
    else {
        return Err(Error::Format(
            "checkpoint does not start with a config entry".into(),
        ));
    };
    let v: Vec<usize> = first.values.iter().map(|&x| x as usize).collect();
    let config = ModelConfig {
        in_channels: v[0],
        n_classes: v[1],
        bins: v[2],
        stages: v[3],
        base_width: v[4],
        input_size: v[5],
    };
    let mut params =
        ModelParams::zeros(config).map_err(|e| Error::Format(format!("stored config: {e}")))?;
    let expected = entries(&params);
    if expected.len() != stored.len() {
        return Err(Error::Format(format!(
            "expected {} entries for this architecture, found {}",
            expected.len(),
            stored.len()
        )));
    }
    for (want, got) in expected.iter().zip(&stored) {
        if want.name != got.name || want.extents != got.extents {
            return Err(Error::Format(format!(
                "entry {} {:?} does not match expected {} {:?}",
                got.name, got.extents, want.name, want.extents
            )));
        }
    }
    let flat: Vec<f64> = stored[1..]
        .iter()
        .flat_map(|e| e.values.iter().copied())
        .collect();
    params.unflatten(&flat)?;
    Ok(params)
}

/// Writes to a sibling temporary file and renames it into place.
pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, to_bytes(params))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    from_bytes(&fs::read(path)?)
}
