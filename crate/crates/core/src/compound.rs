use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` task blocks of dimension `d` stored contiguously; block `i` occupies
/// `data[i*d..(i+1)*d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundVector {
    n_tasks: usize,
    dim: usize,
    data: Vec<f64>,
}

impl CompoundVector {
    pub fn new(n_tasks: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if n_tasks == 0 || dim == 0 {
            return Err(Error::param(
                "compound vector needs at least one task and one coordinate",
            ));
        }
        if data.len() != n_tasks * dim {
            return Err(Error::Dimension {
                expected: n_tasks * dim,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite entry at position {bad}")));
        }
        Ok(Self { n_tasks, dim, data })
    }

    pub fn zeros(n_tasks: usize, dim: usize) -> Self {
        assert!(n_tasks > 0 && dim > 0, "empty compound vector");
        Self {
            n_tasks,
            dim,
            data: vec![0.0; n_tasks * dim],
        }
    }

    /// Every block set to `block`.
    pub fn repeated(n_tasks: usize, block: &[f64]) -> Self {
        assert!(n_tasks > 0 && !block.is_empty(), "empty compound vector");
        let mut data = Vec::with_capacity(n_tasks * block.len());
        for _ in 0..n_tasks {
            data.extend_from_slice(block);
        }
        Self {
            n_tasks,
            dim: block.len(),
            data,
        }
    }

    pub fn from_blocks<B: AsRef<[f64]>>(blocks: &[B]) -> Result<Self> {
        let dim = blocks.first().map(|b| b.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(blocks.len() * dim);
        for b in blocks {
            let b = b.as_ref();
            if b.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: b.len(),
                });
            }
            data.extend_from_slice(b);
        }
        Self::new(blocks.len(), dim, data)
    }

    #[inline]
    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn blocks(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn blocks_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Average of the blocks, `ū`.
    pub fn mean_block(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for b in self.blocks() {
            for (m, v) in mean.iter_mut().zip(b) {
                *m += v;
            }
        }
        let inv = 1.0 / self.n_tasks as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        mean
    }

    pub fn norm2_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.n_tasks != other.n_tasks || self.dim != other.dim {
            return Err(Error::Dimension {
                expected: self.n_tasks * self.dim,
                found: other.n_tasks * other.dim,
            });
        }
        Ok(())
    }

    /// Max absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
