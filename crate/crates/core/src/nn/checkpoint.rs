//! Self-describing model files.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` header length, a JSON
//! header (kind, network specs, parameter names and shapes, optimizer
//! settings, config echo, best-validation record), then every parameter as
//! little-endian `f32`, followed by the optimizer moments of trainable arrays
//! when present.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_bytes_atomic;
use crate::nn::adam::{AdamConfig, AdamState};
use crate::nn::models::{DirectModel, SiameseModel};
use crate::nn::network::NetworkSpec;
use crate::nn::params::{ParamArray, ParamStore};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"LDTWCKPT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Siamese,
    Direct,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Siamese => "siamese",
            ModelKind::Direct => "direct",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "siamese" => Ok(ModelKind::Siamese),
            "direct" => Ok(ModelKind::Direct),
            other => Err(Error::InvalidInput(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub epoch: usize,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub hidden: usize,
    pub symmetrize: bool,
    pub networks: Vec<NetworkSpec>,
    pub params: ParamStore<f32>,
    pub optimizer: Option<AdamState<f32>>,
    pub config: serde_json::Value,
    pub best: Option<BestRecord>,
}

#[derive(Serialize, Deserialize)]
struct ParamMeta {
    name: String,
    shape: Vec<usize>,
    trainable: bool,
}

#[derive(Serialize, Deserialize)]
struct OptimizerMeta {
    config: AdamConfig,
    t: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: ModelKind,
    hidden: usize,
    symmetrize: bool,
    networks: Vec<NetworkSpec>,
    params: Vec<ParamMeta>,
    optimizer: Option<OptimizerMeta>,
    config: serde_json::Value,
    best: Option<BestRecord>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(self.path, "truncated checkpoint"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(self
            .take(4 * n)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

fn push_floats(out: &mut Vec<u8>, values: &[f32]) {
    out.extend(values.iter().flat_map(|v| v.to_le_bytes()));
}

impl Checkpoint {
    pub fn from_siamese(model: &SiameseModel<f32>) -> Self {
        Self {
            kind: ModelKind::Siamese,
            hidden: model.hidden,
            symmetrize: false,
            networks: vec![model.encoder.clone(), model.decoder.clone()],
            params: model.params.clone(),
            optimizer: None,
            config: serde_json::Value::Null,
            best: None,
        }
    }

    pub fn from_direct(model: &DirectModel<f32>) -> Self {
        Self {
            kind: ModelKind::Direct,
            hidden: model.hidden,
            symmetrize: model.symmetrize,
            networks: vec![model.net.clone()],
            params: model.params.clone(),
            optimizer: None,
            config: serde_json::Value::Null,
            best: None,
        }
    }

    pub fn siamese(&self) -> Result<SiameseModel<f32>> {
        match (self.kind, self.networks.as_slice()) {
            (ModelKind::Siamese, [encoder, decoder]) => Ok(SiameseModel {
                hidden: self.hidden,
                encoder: encoder.clone(),
                decoder: decoder.clone(),
                params: self.params.clone(),
            }),
            _ => Err(Error::InvalidInput(format!("checkpoint holds a {} model", self.kind))),
        }
    }

    pub fn direct(&self) -> Result<DirectModel<f32>> {
        match (self.kind, self.networks.as_slice()) {
            (ModelKind::Direct, [net]) => Ok(DirectModel {
                hidden: self.hidden,
                net: net.clone(),
                params: self.params.clone(),
                symmetrize: self.symmetrize,
            }),
            _ => Err(Error::InvalidInput(format!("checkpoint holds a {} model", self.kind))),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            kind: self.kind,
            hidden: self.hidden,
            symmetrize: self.symmetrize,
            networks: self.networks.clone(),
            params: self
                .params
                .arrays()
                .iter()
                .map(|a| ParamMeta {
                    name: a.name.clone(),
                    shape: a.shape.clone(),
                    trainable: a.trainable,
                })
                .collect(),
            optimizer: self.optimizer.as_ref().map(|o| OptimizerMeta {
                config: o.config,
                t: o.t,
            }),
            config: self.config.clone(),
            best: self.best,
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(json.len() + 20 + 4 * self.params.arrays().iter().map(|a| a.len()).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for a in self.params.arrays() {
            push_floats(&mut out, &a.values);
        }
        if let Some(opt) = &self.optimizer {
            for moments in [&opt.m, &opt.v] {
                for (a, m) in self.params.arrays().iter().zip(moments) {
                    if a.trainable {
                        push_floats(&mut out, m);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(8)? != MAGIC {
            return Err(Error::format(path, "not a checkpoint file"));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(path, format!("unsupported checkpoint version {version}")));
        }
        let len = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
        let header: Header = serde_json::from_slice(r.take(len)?)?;
        let mut params = ParamStore::new();
        for meta in &header.params {
            let n = meta.shape.iter().product();
            let values = r.floats(n)?;
            params.insert(ParamArray::new(meta.name.clone(), meta.shape.clone(), values, meta.trainable)?)?;
        }
        let optimizer = match header.optimizer {
            Some(meta) => {
                let mut state = AdamState::new(meta.config, &params)?;
                state.t = meta.t;
                for moments in [&mut state.m, &mut state.v] {
                    for (a, m) in params.arrays().iter().zip(moments.iter_mut()) {
                        if a.trainable {
                            *m = r.floats(a.len())?;
                        }
                    }
                }
                Some(state)
            }
            None => None,
        };
        if r.pos != bytes.len() {
            return Err(Error::format(path, "trailing bytes after checkpoint payload"));
        }
        let ckpt = Self {
            kind: header.kind,
            hidden: header.hidden,
            symmetrize: header.symmetrize,
            networks: header.networks,
            params,
            optimizer,
            config: header.config,
            best: header.best,
        };
        // Every network parameter must be present.
        let mut probe = crate::data::rng_from_seed(0);
        for net in &ckpt.networks {
            let expected: ParamStore<f32> = net.new_params(&mut probe)?;
            for a in expected.arrays() {
                let got = ckpt.params.get(&a.name)?;
                if got.shape != a.shape {
                    return Err(Error::format(path, format!("parameter {} has the wrong shape", a.name)));
                }
            }
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_bytes_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Gradients, SiameseModel};

    #[test]
    fn round_trip_is_bit_exact() {
        let model = SiameseModel::<f32>::new(8, 9).unwrap();
        let mut params = model.params.clone();
        let mut adam = AdamState::new(AdamConfig::default(), &params).unwrap();
        let mut g = Gradients::zeros_like(&params);
        for (a, v) in params.arrays().iter().zip(g.values.iter_mut()) {
            if a.trainable {
                v.iter_mut().enumerate().for_each(|(k, x)| *x = (k as f32 * 0.3).sin());
            }
        }
        adam.step(&mut params, &g).unwrap();
        let mut ckpt = Checkpoint::from_siamese(&SiameseModel { params, ..model });
        ckpt.optimizer = Some(adam);
        ckpt.config = serde_json::json!({"lr": 0.001});
        ckpt.best = Some(BestRecord { epoch: 3, val_loss: 0.25 });

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.params.checksum(), ckpt.params.checksum());
        assert_eq!(back.to_bytes().unwrap(), ckpt.to_bytes().unwrap());
        assert!(back.direct().is_err());
        back.siamese().unwrap();
    }

    #[test]
    fn truncated_file_rejected() {
        let ckpt = Checkpoint::from_direct(&DirectModel::<f32>::new(4, 0).unwrap());
        let bytes = ckpt.to_bytes().unwrap();
        let p = Path::new("x.ckpt");
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3], p).is_err());
        assert!(Checkpoint::from_bytes(b"garbage", p).is_err());
        assert_eq!(Checkpoint::from_bytes(&bytes, p).unwrap(), ckpt);
    }
}
