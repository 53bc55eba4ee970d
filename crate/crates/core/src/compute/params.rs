use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compute::Tensor;
use crate::error::{Error, Result};

/// Index of a parameter inside its owning [`ParamSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

/// Owned collection of trainable parameters with unique names.
#[derive(Clone, Debug, Default)]
pub struct ParamSet {
    params: Vec<Parameter>,
    by_name: HashMap<String, usize>,
}

/// Per-parameter gradient buffers aligned with a [`ParamSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub(crate) grads: Vec<Vec<f64>>,
}

/// Serializable snapshot of parameter values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Contract(format!("duplicate parameter name `{name}`")));
        }
        let id = self.params.len();
        let grad = Tensor::zeros(value.shape());
        self.by_name.insert(name.clone(), id);
        self.params.push(Parameter { name, value, grad });
        Ok(ParamId(id))
    }

    /// Adds a parameter drawn uniformly from `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn add_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        rng: &mut R,
    ) -> Result<ParamId> {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
        self.add(name, Tensor::new(shape.to_vec(), data)?)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub(crate) fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.data_mut().fill(0.0);
        }
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            grads: self.params.iter().map(|p| vec![0.0; p.value.len()]).collect(),
        }
    }

    /// Adds `scale * grads` into every parameter's gradient buffer.
    pub fn accumulate(&mut self, grads: &Gradients, scale: f64) -> Result<()> {
        if grads.grads.len() != self.params.len() {
            return Err(Error::dim(
                "accumulate",
                format!("{} parameters", self.params.len()),
                format!("{} gradients", grads.grads.len()),
            ));
        }
        for (p, g) in self.params.iter_mut().zip(&grads.grads) {
            for (dst, src) in p.grad.data_mut().iter_mut().zip(g) {
                *dst += scale * src;
            }
        }
        Ok(())
    }

    pub fn gradients(&self) -> Gradients {
        Gradients {
            grads: self.params.iter().map(|p| p.grad.data().to_vec()).collect(),
        }
    }

    pub fn snapshot(&self) -> Vec<NamedTensor> {
        self.params
            .iter()
            .map(|p| NamedTensor {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                values: p.value.data().to_vec(),
            })
            .collect()
    }

    /// Overwrites values from a snapshot; every parameter must be present with
    /// the same shape and no extras are allowed.
    pub fn load_snapshot(&mut self, snapshot: &[NamedTensor]) -> Result<()> {
        if snapshot.len() != self.params.len() {
            return Err(Error::Config(format!(
                "snapshot holds {} parameters, model expects {}",
                snapshot.len(),
                self.params.len()
            )));
        }
        for entry in snapshot {
            let id = self
                .id(&entry.name)
                .ok_or_else(|| Error::Config(format!("unknown parameter `{}`", entry.name)))?;
            let tensor = Tensor::new(entry.shape.clone(), entry.values.clone())?;
            let p = &mut self.params[id.0];
            if tensor.shape() != p.value.shape() {
                return Err(Error::dim(
                    "load_snapshot",
                    format!("{:?}", p.value.shape()),
                    format!("{:?}", tensor.shape()),
                ));
            }
            p.value = tensor;
        }
        Ok(())
    }
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.grads[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.grads[id.0]
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.grads.iter().map(|g| g.as_slice())
    }

    pub fn scale(&mut self, factor: f64) {
        self.grads.iter_mut().flatten().for_each(|g| *g *= factor);
    }

    pub fn max_abs_diff(&self, other: &Gradients) -> f64 {
        self.grads
            .iter()
            .flatten()
            .zip(other.grads.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn names_are_unique() {
        let mut ps = ParamSet::new();
        ps.add("w", Tensor::zeros(&[2])).unwrap();
        assert!(matches!(ps.add("w", Tensor::zeros(&[2])), Err(Error::Contract(_))));
    }

    #[test]
    fn uniform_init_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ps = ParamSet::new();
        let id = ps.add_uniform("w", &[16, 25], 25, &mut rng).unwrap();
        assert!(ps.get(id).value.data().iter().all(|v| v.abs() <= 0.2));
        assert_eq!(ps.get(id).grad.shape(), &[16, 25]);
    }

    #[test]
    fn snapshot_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamSet::new();
        ps.add_uniform("a", &[3, 2], 2, &mut rng).unwrap();
        ps.add_uniform("b", &[3], 2, &mut rng).unwrap();
        let snap = ps.snapshot();
        let mut other = ps.clone();
        other.get_mut(ParamId(0)).value = Tensor::zeros(&[3, 2]);
        other.load_snapshot(&snap).unwrap();
        assert_eq!(other.snapshot(), snap);
    }
}
