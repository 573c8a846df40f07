//! Sparse symmetric positive-definite factorization.
//!
//! The ARAP normal matrix only depends on reference geometry, so it is
//! factored once and reused for every frame. Matrices are reordered with
//! reverse Cuthill-McKee and factored in envelope (skyline) storage; fill-in
//! never leaves the envelope.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FactorError {
    #[error("matrix is not positive definite (pivot {row})")]
    NotPositiveDefinite { row: usize },
}

/// Accumulates entries of a symmetric matrix. Only one triangle is stored.
#[derive(Debug, Clone)]
pub struct SymmetricBuilder<T> {
    n: usize,
    entries: BTreeMap<(usize, usize), T>,
}

impl<T: Scalar> SymmetricBuilder<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `v` to entry (i, j) and, implicitly, (j, i).
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(i < self.n && j < self.n, "index out of range");
        let key = (i.max(j), i.min(j));
        let e = self.entries.entry(key).or_insert_with(T::zero);
        *e = *e + v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries
            .get(&(i.max(j), i.min(j)))
            .copied()
            .unwrap_or_else(T::zero)
    }

    fn rcm_order(&self) -> Vec<usize> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in self.entries.keys() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
        for nbrs in adj.iter_mut() {
            nbrs.sort_by_key(|&k| (degree[k], k));
        }
        let mut seen = vec![false; self.n];
        let mut order = Vec::with_capacity(self.n);
        let mut starts: Vec<usize> = (0..self.n).collect();
        starts.sort_by_key(|&k| (degree[k], k));
        for s in starts {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                for &u in &adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
        order.reverse();
        order
    }

    /// Reorders and factors `A = L·Lᵀ`.
    pub fn factor(&self) -> Result<EnvelopeCholesky<T>, FactorError> {
        let n = self.n;
        let perm = self.rcm_order();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        let mut permuted = Vec::with_capacity(self.entries.len());
        for (&(i, j), &v) in &self.entries {
            let (pi, pj) = (inv[i], inv[j]);
            let (r, c) = (pi.max(pj), pi.min(pj));
            first[r] = first[r].min(c);
            permuted.push((r, c, v));
        }

        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for r in 0..n {
            offset.push(offset[r] + (r - first[r] + 1));
        }
        let mut values = vec![T::zero(); offset[n]];
        for (r, c, v) in permuted {
            values[offset[r] + (c - first[r])] = v;
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut sum = values[offset[i] + (j - fi)];
                for k in lo..j {
                    sum = sum - values[offset[i] + (k - fi)] * values[offset[j] + (k - fj)];
                }
                if j == i {
                    if !(sum > T::zero()) || !sum.is_finite() {
                        return Err(FactorError::NotPositiveDefinite { row: perm[i] });
                    }
                    values[offset[i] + (i - fi)] = sum.sqrt();
                } else {
                    values[offset[i] + (j - fi)] = sum / values[offset[j] + (j - fj)];
                }
            }
        }

        Ok(EnvelopeCholesky {
            n,
            perm,
            inv,
            first,
            offset,
            values,
        })
    }
}

/// Cholesky factor of a permuted symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky<T> {
    n: usize,
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> EnvelopeCholesky<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn l(&self, i: usize, k: usize) -> T {
        self.values[self.offset[i] + (k - self.first[i])]
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "right-hand side has wrong length");
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let mut s = y[i];
            for k in self.first[i]..i {
                s = s - self.l(i, k) * y[k];
            }
            y[i] = s / self.l(i, i);
        }
        for i in (0..self.n).rev() {
            let xi = y[i] / self.l(i, i);
            y[i] = xi;
            for k in self.first[i]..i {
                y[k] = y[k] - self.l(i, k) * xi;
            }
        }
        (0..self.n).map(|old| y[self.inv[old]]).collect()
    }
}
