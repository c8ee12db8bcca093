//! Flat registry of named parameter matrices.

use std::collections::HashMap;

use artikit_core::{Error, Result, Scalar};
use rand::Rng;

use crate::tensor::Matrix;

/// Handle into a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T = f64> {
    names: Vec<String>,
    values: Vec<Matrix<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { names: Vec::new(), values: Vec::new(), index: HashMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix<T>) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Parameter(format!("duplicate parameter {name}")));
        }
        let id = self.values.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.values.push(value);
        Ok(ParamId(id))
    }

    pub fn id(&self, name: &str) -> Result<ParamId> {
        self.index.get(name).map(|&i| ParamId(i)).ok_or_else(|| Error::Parameter(format!("no parameter named {name}")))
    }

    pub fn get(&self, id: ParamId) -> &Matrix<T> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total number of scalars.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Matrix<T>)> {
        self.names.iter().zip(&self.values).enumerate().map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    /// Zero matrices with the same shapes, for gradient accumulation.
    pub fn zeros_like(&self) -> Gradients<T> {
        Gradients(self.values.iter().map(|m| Matrix::zeros(m.rows, m.cols)).collect())
    }

    /// Scalar `k` in registry order, flattening each matrix row-major.
    pub fn flat_get(&self, k: usize) -> T {
        let (p, i) = self.locate(k);
        self.values[p].data[i]
    }

    pub fn flat_set(&mut self, k: usize, v: T) {
        let (p, i) = self.locate(k);
        self.values[p].data[i] = v;
    }

    fn locate(&self, mut k: usize) -> (usize, usize) {
        for (p, m) in self.values.iter().enumerate() {
            if k < m.len() {
                return (p, k);
            }
            k -= m.len();
        }
        panic!("flat parameter index out of range");
    }

    /// `θ ← θ − lr · g`
    pub fn sgd_step(&mut self, grads: &Gradients<T>, lr: T) {
        for (v, g) in self.values.iter_mut().zip(&grads.0) {
            v.axpy(-lr, g);
        }
    }

    /// Bitwise equality of every value, names included.
    pub fn bitwise_eq(&self, other: &ParamStore<T>) -> bool {
        self.names == other.names
            && self.values.iter().zip(&other.values).all(|(a, b)| {
                a.shape() == b.shape() && a.data.iter().zip(&b.data).all(|(x, y)| x.to_f64_lossy().to_bits() == y.to_f64_lossy().to_bits())
            })
    }
}

/// Gradient matrices aligned with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T = f64>(pub Vec<Matrix<T>>);

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, id: ParamId) -> &Matrix<T> {
        &self.0[id.0]
    }

    pub fn accumulate(&mut self, id: ParamId, g: &Matrix<T>, scale: T) {
        self.0[id.0].axpy(scale, g);
    }

    pub fn add(&mut self, other: &Gradients<T>) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.add_assign(b);
        }
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(Matrix::sum_squares).sum::<T>().sqrt()
    }

    /// Rescales to norm `max_norm` when larger; returns the norm before clipping.
    pub fn clip_norm(&mut self, max_norm: T) -> T {
        let n = self.norm();
        if n > max_norm {
            let s = max_norm / n;
            for m in &mut self.0 {
                m.scale(s);
            }
        }
        n
    }

    pub fn flat_get(&self, mut k: usize) -> T {
        for m in &self.0 {
            if k < m.len() {
                return m.data[k];
            }
            k -= m.len();
        }
        panic!("flat gradient index out of range");
    }
}

/// Uniform weights in `±1/√fan_in`.
pub fn uniform_init<T: Scalar, R: Rng>(rng: &mut R, rows: usize, cols: usize, fan_in: usize) -> Matrix<T> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let data = (0..rows * cols).map(|_| T::lit(rng.random_range(-bound..bound))).collect();
    Matrix { rows, cols, data }
}
