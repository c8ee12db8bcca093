use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::connectivity::ConnectivityGraph;

/// Dense row-major boolean matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<bool>,
}

/// Part-level mask consumed by the denoiser's global attention; `true` lets
/// row part attend to column part.
pub type AttentionMask = BoolMatrix;

impl BoolMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![false; rows * cols] }
    }

    pub fn filled(n: usize, value: bool) -> Self {
        Self { rows: n, cols: n, data: vec![value; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::new(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::shape(format!("rows of length {cols}"), format!("a row of length {}", r.len())));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn all(&self) -> bool {
        self.data.iter().all(|&b| b)
    }

    /// Entrywise `self ⊆ other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// Block-diagonal expansion: every entry becomes a `sizes[i] × sizes[j]` block.
    pub fn expand(&self, sizes: &[usize]) -> Result<Self> {
        if !self.is_square() || sizes.len() != self.rows {
            return Err(Error::shape(format!("{} group sizes", self.rows), sizes.len()));
        }
        let n: usize = sizes.iter().sum();
        let group: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &s)| std::iter::repeat_n(g, s)).collect();
        let mut out = Self::new(n, n);
        for a in 0..n {
            for b in 0..n {
                out.set(a, b, self.get(group[a], group[b]));
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BoolMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: String = (0..self.cols).map(|j| if self.get(i, j) { '1' } else { '.' }).collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

/// Symmetric adjacency over node positions with a false diagonal.
pub fn to_adjacency_matrix(g: &ConnectivityGraph) -> Result<BoolMatrix> {
    let parents = g.parent_positions()?;
    let mut adj = BoolMatrix::new(g.len(), g.len());
    for (c, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            adj.set(p, c, true);
            adj.set(c, p, true);
        }
    }
    Ok(adj)
}

/// Off-diagonal entries are true when a path of at most `hops` edges joins
/// the two nodes; the diagonal equals `self_loops`.
pub fn adjacency_to_attention_mask(adj: &BoolMatrix, self_loops: bool, hops: usize) -> Result<AttentionMask> {
    if !adj.is_square() {
        return Err(Error::shape("a square adjacency matrix", format!("{}x{}", adj.rows, adj.cols)));
    }
    let n = adj.rows;
    let mut mask = BoolMatrix::new(n, n);
    let mut depth = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        depth.fill(usize::MAX);
        depth[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            if depth[u] == hops {
                continue;
            }
            for v in 0..n {
                if adj.get(u, v) && depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    mask.set(s, v, true);
                    queue.push_back(v);
                }
            }
        }
        mask.set(s, s, self_loops);
    }
    Ok(mask)
}
