use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::normalize_dtw;
use crate::error::{Error, Result};
use crate::metrics::{dtw_value, fast_dtw, soft_dtw, CostKind, SoftDtwConfig};
use crate::nn::{euclidean, Checkpoint, DirectModel, ModelKind, SiameseModel};
use crate::par::{try_map_range, Exec};

/// A distance between two series, evaluated singly or as a matrix.
pub trait PairMetric: Sync {
    fn name(&self) -> &str;

    fn distance(&self, x: &[f32], y: &[f32]) -> Result<f64>;

    /// Whether `distance(x, y) == distance(y, x)` holds exactly.
    fn is_symmetric(&self) -> bool {
        false
    }

    /// `[a.len(), b.len()]` matrix of `distance(a[i], b[j])`.
    fn cross_matrix(&self, a: &[&[f32]], b: &[&[f32]], exec: Exec) -> Result<Array2<f64>> {
        let nb = b.len();
        let values = try_map_range(a.len() * nb, exec, |k| self.distance(a[k / nb], b[k % nb]))?;
        Ok(Array2::from_shape_vec((a.len(), nb), values).expect("matrix shape"))
    }

    /// Pairwise matrix over one set; symmetric metrics compute each unordered
    /// pair once.
    fn self_matrix(&self, s: &[&[f32]], exec: Exec) -> Result<Array2<f64>> {
        if !self.is_symmetric() {
            return self.cross_matrix(s, s, exec);
        }
        let n = s.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let values = try_map_range(pairs.len(), exec, |k| self.distance(s[pairs[k].0], s[pairs[k].1]))?;
        let mut m = Array2::zeros((n, n));
        for (&(i, j), v) in pairs.iter().zip(values) {
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
        Ok(m)
    }
}

/// Serializable description of a metric. Model metrics refer to a
/// checkpoint file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    ExactDtw {
        cost: CostKind,
        normalize: bool,
    },
    FastDtw {
        radius: usize,
        cost: CostKind,
        normalize: bool,
    },
    SoftDtw {
        gamma: f64,
        cost: CostKind,
        normalize: bool,
    },
    ModelSiamese {
        checkpoint: String,
    },
    ModelDirect {
        checkpoint: String,
    },
}

#[derive(Debug, Clone)]
pub enum MetricKind {
    ExactDtw { cost: CostKind, normalize: bool },
    FastDtw { radius: usize, cost: CostKind, normalize: bool },
    SoftDtw { config: SoftDtwConfig, normalize: bool },
    ModelSiamese(Box<SiameseModel<f32>>),
    ModelDirect(Box<DirectModel<f32>>),
}

/// A named, ready-to-evaluate metric.
///
/// DTW-family metrics divide by the longer length when `normalize` is set,
/// which puts them on the same scale the models are trained to predict.
#[derive(Debug, Clone)]
pub struct MetricHandle {
    pub name: String,
    pub kind: MetricKind,
}

impl MetricHandle {
    pub fn exact_dtw() -> Self {
        Self {
            name: "dtw".into(),
            kind: MetricKind::ExactDtw {
                cost: CostKind::Absolute,
                normalize: true,
            },
        }
    }

    pub fn fast_dtw(radius: usize) -> Self {
        Self {
            name: "fastdtw".into(),
            kind: MetricKind::FastDtw {
                radius,
                cost: CostKind::Absolute,
                normalize: true,
            },
        }
    }

    pub fn soft_dtw(gamma: f64) -> Result<Self> {
        Ok(Self {
            name: "softdtw".into(),
            kind: MetricKind::SoftDtw {
                config: SoftDtwConfig::new(gamma, CostKind::Absolute)?,
                normalize: true,
            },
        })
    }

    pub fn siamese(model: SiameseModel<f32>) -> Self {
        Self {
            name: "siamese".into(),
            kind: MetricKind::ModelSiamese(Box::new(model)),
        }
    }

    pub fn direct(model: DirectModel<f32>) -> Self {
        Self {
            name: "direct".into(),
            kind: MetricKind::ModelDirect(Box::new(model)),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        match ckpt.kind {
            ModelKind::Siamese => Ok(Self::siamese(ckpt.siamese()?)),
            ModelKind::Direct => Ok(Self::direct(ckpt.direct()?)),
        }
    }

    pub fn from_spec(spec: &MetricSpec) -> Result<Self> {
        let named = |name: &str, kind| Self { name: name.into(), kind };
        Ok(match *spec {
            MetricSpec::ExactDtw { cost, normalize } => named("dtw", MetricKind::ExactDtw { cost, normalize }),
            MetricSpec::FastDtw { radius, cost, normalize } => {
                named("fastdtw", MetricKind::FastDtw { radius, cost, normalize })
            }
            MetricSpec::SoftDtw { gamma, cost, normalize } => named(
                "softdtw",
                MetricKind::SoftDtw {
                    config: SoftDtwConfig::new(gamma, cost)?,
                    normalize,
                },
            ),
            MetricSpec::ModelSiamese { ref checkpoint } | MetricSpec::ModelDirect { ref checkpoint } => {
                let ckpt = Checkpoint::load(Path::new(checkpoint))?;
                let expected = match spec {
                    MetricSpec::ModelSiamese { .. } => ModelKind::Siamese,
                    _ => ModelKind::Direct,
                };
                if ckpt.kind != expected {
                    return Err(Error::InvalidInput(format!(
                        "{checkpoint} holds a {} model, expected {expected}",
                        ckpt.kind
                    )));
                }
                Self::from_checkpoint(&ckpt)?
            }
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn siamese_model(&self) -> Option<&SiameseModel<f32>> {
        match &self.kind {
            MetricKind::ModelSiamese(m) => Some(m),
            _ => None,
        }
    }

    pub fn direct_model(&self) -> Option<&DirectModel<f32>> {
        match &self.kind {
            MetricKind::ModelDirect(m) => Some(m),
            _ => None,
        }
    }
}

fn scaled(raw: f64, x: &[f32], y: &[f32], normalize: bool) -> Result<f64> {
    if normalize {
        // Soft DTW may be negative; scale without the non-negativity check.
        Ok(raw / x.len().max(y.len()) as f64)
    } else {
        Ok(raw)
    }
}

impl PairMetric for MetricHandle {
    fn name(&self) -> &str {
        &self.name
    }

    fn distance(&self, x: &[f32], y: &[f32]) -> Result<f64> {
        match &self.kind {
            MetricKind::ExactDtw { cost, normalize } => {
                let raw = dtw_value(x, y, *cost)?;
                if *normalize {
                    normalize_dtw(raw, x.len(), y.len())
                } else {
                    Ok(raw)
                }
            }
            MetricKind::FastDtw { radius, cost, normalize } => {
                let raw = fast_dtw(x, y, *radius, *cost)?.value;
                scaled(raw, x, y, *normalize)
            }
            MetricKind::SoftDtw { config, normalize } => scaled(soft_dtw(x, y, config)?, x, y, *normalize),
            MetricKind::ModelSiamese(m) => m.distance(x, y),
            MetricKind::ModelDirect(m) => m.distance(x, y),
        }
    }

    fn is_symmetric(&self) -> bool {
        match &self.kind {
            MetricKind::ExactDtw { .. } | MetricKind::ModelSiamese(_) => true,
            MetricKind::ModelDirect(m) => m.symmetrize,
            // The coarsened search window depends on argument order.
            MetricKind::FastDtw { .. } => false,
            // Symmetric in exact arithmetic, but the soft minimum sums its
            // arguments in an order that follows the argument order.
            MetricKind::SoftDtw { .. } => false,
        }
    }

    fn cross_matrix(&self, a: &[&[f32]], b: &[&[f32]], exec: Exec) -> Result<Array2<f64>> {
        match &self.kind {
            MetricKind::ModelSiamese(m) => {
                let (za, zb) = (m.embed(a)?, m.embed(b)?);
                Ok(Array2::from_shape_fn((a.len(), b.len()), |(i, j)| euclidean(&za[i], &zb[j])))
            }
            MetricKind::ModelDirect(m) => {
                let pairs: Vec<(&[f32], &[f32])> = a.iter().flat_map(|x| b.iter().map(move |y| (*x, *y))).collect();
                let values = m.predict(&pairs)?;
                Ok(Array2::from_shape_vec((a.len(), b.len()), values).expect("matrix shape"))
            }
            _ => {
                let nb = b.len();
                let values = try_map_range(a.len() * nb, exec, |k| self.distance(a[k / nb], b[k % nb]))?;
                Ok(Array2::from_shape_vec((a.len(), nb), values).expect("matrix shape"))
            }
        }
    }
}
