use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AutodiffError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named parameter matrices in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Array2<f64>>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>) -> ParamId {
        let name = name.into();
        assert!(
            !self.names.contains(&name),
            "parameter {name} registered twice"
        );
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    /// Uniform in ±sqrt(6 / (rows + cols)).
    pub fn add_glorot<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> ParamId {
        self.add(name, glorot(rows, cols, rng))
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.add(name, Array2::zeros((rows, cols)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Array2<f64> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    pub fn to_tensors(&self) -> Vec<NamedTensor> {
        self.names
            .iter()
            .zip(&self.values)
            .map(|(name, v)| NamedTensor {
                name: name.clone(),
                shape: [v.nrows(), v.ncols()],
                values: v.iter().cloned().collect(),
            })
            .collect()
    }

    /// Overwrites every parameter from `tensors`, which must cover exactly the
    /// registered names with matching shapes.
    pub fn load_tensors(&mut self, tensors: &[NamedTensor]) -> Result<(), AutodiffError> {
        if tensors.len() != self.values.len() {
            return Err(AutodiffError::Checkpoint(format!(
                "expected {} tensors, found {}",
                self.values.len(),
                tensors.len()
            )));
        }
        for t in tensors {
            let id = self
                .id(&t.name)
                .ok_or_else(|| AutodiffError::Checkpoint(format!("unknown tensor {}", t.name)))?;
            let target = &mut self.values[id.0];
            if [target.nrows(), target.ncols()] != t.shape {
                return Err(AutodiffError::Checkpoint(format!(
                    "tensor {} has shape {:?}, model expects {:?}",
                    t.name,
                    t.shape,
                    target.dim()
                )));
            }
            *target = Array2::from_shape_vec((t.shape[0], t.shape[1]), t.values.clone())
                .map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
        }
        Ok(())
    }
}

pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (rows + cols).max(1) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..=limit))
}

/// Row-major parameter payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Serialized model: free-form hyperparameters plus every parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub hyperparameters: serde_json::Value,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn new(hyperparameters: serde_json::Value, store: &ParamStore) -> Self {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            hyperparameters,
            tensors: store.to_tensors(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AutodiffError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
        if header.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(AutodiffError::VersionMismatch {
                found: header.format_version,
                expected: CHECKPOINT_FORMAT_VERSION,
            });
        }
        serde_json::from_str(text).map_err(|e| AutodiffError::Checkpoint(e.to_string()))
    }
}
