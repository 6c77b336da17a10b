//! Nets on disk: `<stem>.json` holds dims and activations, `<stem>.bin` the
//! little-endian row lengths, column indices, weights and biases.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::net::{Act, Layer, LayeredNet};
use super::NetError;

const FORMAT: &str = "polycom-layered-net/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetManifest {
    pub format: String,
    pub input_dim: usize,
    pub blob: String,
    pub layers: Vec<LayerEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub width: usize,
    pub nnz: usize,
    pub acts: Vec<Act>,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

pub fn save_net(net: &LayeredNet, stem: &Path) -> Result<(), NetError> {
    let (json, bin) = paths(stem);
    let mut blob = Vec::new();
    let mut entries = Vec::new();
    for layer in net.layers() {
        let nnz: usize = layer.rows.iter().map(Vec::len).sum();
        for r in &layer.rows {
            blob.extend_from_slice(&(r.len() as u64).to_le_bytes());
        }
        for r in &layer.rows {
            for &(j, _) in r {
                blob.extend_from_slice(&(j as u64).to_le_bytes());
            }
        }
        for r in &layer.rows {
            for &(_, w) in r {
                blob.extend_from_slice(&w.to_le_bytes());
            }
        }
        for b in &layer.bias {
            blob.extend_from_slice(&b.to_le_bytes());
        }
        entries.push(LayerEntry {
            width: layer.width(),
            nnz,
            acts: layer.acts.clone(),
        });
    }
    let manifest = NetManifest {
        format: FORMAT.into(),
        input_dim: net.input_dim(),
        blob: bin.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        layers: entries,
    };
    fs::write(&bin, blob)?;
    fs::write(&json, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn word(&mut self) -> Result<[u8; 8], NetError> {
        let end = self.pos + 8;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| NetError::Format("blob is truncated".into()))?;
        self.pos = end;
        Ok(chunk.try_into().expect("8 bytes"))
    }

    fn usize(&mut self) -> Result<usize, NetError> {
        Ok(u64::from_le_bytes(self.word()?) as usize)
    }

    fn f64(&mut self) -> Result<f64, NetError> {
        Ok(f64::from_le_bytes(self.word()?))
    }
}

pub fn load_net(stem: &Path) -> Result<LayeredNet, NetError> {
    let (json, _) = paths(stem);
    let manifest: NetManifest = serde_json::from_str(&fs::read_to_string(&json)?)?;
    if manifest.format != FORMAT {
        return Err(NetError::Format(format!("unknown format {:?}", manifest.format)));
    }
    let bytes = fs::read(json.with_file_name(&manifest.blob))?;
    let mut rd = Reader { bytes: &bytes, pos: 0 };
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for e in manifest.layers {
        if e.acts.len() != e.width {
            return Err(NetError::Format("activation count differs from width".into()));
        }
        let lens = (0..e.width).map(|_| rd.usize()).collect::<Result<Vec<_>, _>>()?;
        if lens.iter().sum::<usize>() != e.nnz {
            return Err(NetError::Format("row lengths disagree with nnz".into()));
        }
        let cols = (0..e.nnz).map(|_| rd.usize()).collect::<Result<Vec<_>, _>>()?;
        let vals = (0..e.nnz).map(|_| rd.f64()).collect::<Result<Vec<_>, _>>()?;
        let bias = (0..e.width).map(|_| rd.f64()).collect::<Result<Vec<_>, _>>()?;
        let mut rows = Vec::with_capacity(e.width);
        let mut k = 0;
        for len in lens {
            rows.push(cols[k..k + len].iter().copied().zip(vals[k..k + len].iter().copied()).collect());
            k += len;
        }
        layers.push(Layer::new(rows, bias, e.acts));
    }
    if rd.pos != bytes.len() {
        return Err(NetError::Format("trailing bytes in blob".into()));
    }
    LayeredNet::new(manifest.input_dim, layers)
}
