use std::collections::HashMap;

use rand::Rng as _;

use crate::data::Rng;
use crate::nn::Real;
use crate::{Error, Result};

/// A named, shaped parameter tensor stored flat in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamArray<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<T>,
    /// Batch-norm running statistics are stored here too but are never
    /// touched by the optimizer.
    pub trainable: bool,
}

impl<T: Real> ParamArray<T> {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<T>, trainable: bool) -> Result<Self> {
        let name = name.into();
        let expected: usize = shape.iter().product();
        if shape.contains(&0) || expected != values.len() {
            return Err(Error::InvalidInput(format!(
                "parameter `{name}`: shape {shape:?} does not match {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter `{name}`")));
        }
        Ok(Self {
            name,
            shape,
            values,
            trainable,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Parameters of one or more networks, addressed by name.
///
/// The generation counter is bumped by every optimizer step so that stale
/// forward caches are detected in backward. Equality compares contents only.
#[derive(Debug, Clone)]
pub struct ParamStore<T> {
    arrays: Vec<ParamArray<T>>,
    index: HashMap<String, usize>,
    generation: u64,
}

impl<T: PartialEq> PartialEq for ParamStore<T> {
    fn eq(&self, other: &Self) -> bool {
        self.arrays == other.arrays
    }
}

impl<T: Real> Default for ParamStore<T> {
    fn default() -> Self {
        Self {
            arrays: Vec::new(),
            index: HashMap::new(),
            generation: 0,
        }
    }
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, array: ParamArray<T>) -> Result<()> {
        if self.index.contains_key(&array.name) {
            return Err(Error::InvalidInput(format!("duplicate parameter `{}`", array.name)));
        }
        self.index.insert(array.name.clone(), self.arrays.len());
        self.arrays.push(array);
        Ok(())
    }

    /// Inserts a uniform `[-bound, bound]` initialised trainable array.
    pub(crate) fn insert_uniform(&mut self, name: String, shape: Vec<usize>, bound: f64, rng: &mut Rng) -> Result<()> {
        let n = shape.iter().product();
        let values = (0..n).map(|_| T::of(rng.random_range(-bound..=bound))).collect();
        self.insert(ParamArray::new(name, shape, values, true)?)
    }

    pub(crate) fn insert_const(&mut self, name: String, shape: Vec<usize>, value: f64, trainable: bool) -> Result<()> {
        let n = shape.iter().product();
        self.insert(ParamArray::new(name, shape, vec![T::of(value); n], trainable)?)
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownParam(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<&ParamArray<T>> {
        Ok(&self.arrays[self.position(name)?])
    }

    pub fn values(&self, name: &str) -> Result<&[T]> {
        Ok(&self.get(name)?.values)
    }

    pub fn values_mut(&mut self, name: &str) -> Result<&mut Vec<T>> {
        let k = self.position(name)?;
        Ok(&mut self.arrays[k].values)
    }

    pub fn arrays(&self) -> &[ParamArray<T>] {
        &self.arrays
    }

    pub fn arrays_mut(&mut self) -> &mut [ParamArray<T>] {
        &mut self.arrays
    }

    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn bump_generation(&mut self) {
        self.generation += 1;
    }

    pub fn num_trainable(&self) -> usize {
        self.arrays.iter().filter(|a| a.trainable).map(|a| a.len()).sum()
    }

    /// Order-dependent FNV-1a digest of every parameter bit pattern.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for a in &self.arrays {
            eat(a.name.as_bytes());
            for v in &a.values {
                eat(&v.f64().to_bits().to_le_bytes());
            }
        }
        h
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            arrays: self
                .arrays
                .iter()
                .map(|a| ParamArray {
                    name: a.name.clone(),
                    shape: a.shape.clone(),
                    values: a.values.iter().map(|v| U::of(v.f64())).collect(),
                    trainable: a.trainable,
                })
                .collect(),
            index: self.index.clone(),
            generation: self.generation,
        }
    }
}

/// Gradient buffers aligned with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub values: Vec<Vec<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(store: &ParamStore<T>) -> Self {
        Self {
            values: store.arrays().iter().map(|a| vec![T::zero(); a.len()]).collect(),
        }
    }

    pub fn get(&self, store: &ParamStore<T>, name: &str) -> Result<&[T]> {
        Ok(&self.values[store.position(name)?])
    }

    pub(crate) fn accumulate(&mut self, slot: usize, grad: &[T]) {
        for (g, d) in self.values[slot].iter_mut().zip(grad) {
            *g += *d;
        }
    }

    pub fn scale(&mut self, factor: T) {
        for g in self.values.iter_mut().flatten() {
            *g *= factor;
        }
    }

    pub fn add(&mut self, other: &Gradients<T>) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    /// True if any entry in the named arrays is non-zero.
    pub fn any_nonzero(&self, store: &ParamStore<T>, prefix: &str) -> bool {
        store
            .arrays()
            .iter()
            .zip(&self.values)
            .filter(|(a, _)| a.name.starts_with(prefix))
            .any(|(_, g)| g.iter().any(|v| *v != T::zero()))
    }
}
