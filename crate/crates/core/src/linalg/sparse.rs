//! Sparse operators and block decomposition.
//!
//! Mixtures of permuted copies of a small state have a nonzero pattern made
//! of many small cliques. [`Partition`] finds the connected components of
//! that pattern so dense routines can run block by block.

use super::{re, CMat, C64};

/// Square operator stored as sorted, deduplicated (row, col, value) triplets.
#[derive(Clone, Debug, Default)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, C64)>) -> Self {
        entries.sort_unstable_by_key(|a| (a.0, a.1));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            assert!(i < dim && j < dim, "entry ({i},{j}) outside dimension {dim}");
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != re(0.0));
        Self { dim, entries: merged }
    }

    pub fn from_dense(m: &CMat, tol: f64) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)].norm() > tol {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn trace(&self) -> C64 {
        self.entries.iter().filter(|e| e.0 == e.1).fold(re(0.0), |acc, e| acc + e.2)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * s)).collect() }
    }

    pub fn sum<'a>(dim: usize, ops: impl IntoIterator<Item = &'a SparseOp>) -> Self {
        let mut all = Vec::new();
        for op in ops {
            assert_eq!(op.dim, dim);
            all.extend_from_slice(&op.entries);
        }
        Self::from_triplets(dim, all)
    }

    /// V M V† for the monomial V|i> = phase_i |images[i]>.
    pub fn conjugate_monomial(&self, images: &[usize], phases: Option<&[C64]>) -> Self {
        assert_eq!(images.len(), self.dim);
        let entries = self
            .entries
            .iter()
            .map(|&(i, j, v)| {
                let w = match phases {
                    Some(p) => p[i] * v * p[j].conj(),
                    None => v,
                };
                (images[i], images[j], w)
            })
            .collect();
        Self::from_triplets(self.dim, entries)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// Diagonal of the operator.
    pub fn diagonal(&self) -> Vec<C64> {
        let mut d = vec![re(0.0); self.dim];
        for &(i, j, v) in &self.entries {
            if i == j {
                d[i] += v;
            }
        }
        d
    }

    /// Tr(A B).
    pub fn trace_product(&self, other: &SparseOp) -> C64 {
        // entries sorted by (row, col); look up (j, i) in other by binary search
        let mut t = re(0.0);
        for &(i, j, v) in &self.entries {
            if let Ok(k) = other.entries.binary_search_by(|e| (e.0, e.1).cmp(&(j, i))) {
                t += v * other.entries[k].2;
            }
        }
        t
    }
}

/// Connected components of the union of nonzero patterns, at the
/// granularity of fibers: indices `g*fiber .. (g+1)*fiber` always share a
/// component.
#[derive(Clone, Debug)]
pub struct Partition {
    dim: usize,
    fiber: usize,
    comp_of_group: Vec<usize>,
    components: Vec<Vec<usize>>,
}

const NONE: usize = usize::MAX;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl Partition {
    pub fn from_ops(dim: usize, fiber: usize, ops: &[&SparseOp]) -> Self {
        assert!(fiber >= 1 && dim % fiber == 0);
        let groups = dim / fiber;
        let mut parent: Vec<usize> = (0..groups).collect();
        let mut used = vec![false; groups];
        for op in ops {
            assert_eq!(op.dim, dim);
            for &(i, j, _) in &op.entries {
                let (gi, gj) = (i / fiber, j / fiber);
                used[gi] = true;
                used[gj] = true;
                let (ri, rj) = (find(&mut parent, gi), find(&mut parent, gj));
                if ri != rj {
                    let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                    parent[hi] = lo;
                }
            }
        }
        let mut comp_of_root = vec![NONE; groups];
        let mut comp_of_group = vec![NONE; groups];
        let mut components: Vec<Vec<usize>> = Vec::new();
        for g in 0..groups {
            if !used[g] {
                continue;
            }
            let r = find(&mut parent, g);
            if comp_of_root[r] == NONE {
                comp_of_root[r] = components.len();
                components.push(Vec::new());
            }
            let c = comp_of_root[r];
            comp_of_group[g] = c;
            for k in 0..fiber {
                components[c].push(g * fiber + k);
            }
        }
        Self { dim, fiber, comp_of_group, components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Component members (global indices, ascending).
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component_of(&self, index: usize) -> Option<usize> {
        match self.comp_of_group[index / self.fiber] {
            NONE => None,
            c => Some(c),
        }
    }

    pub fn max_size(&self) -> usize {
        self.components.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    /// Position of `index` inside its component.
    pub fn local_index(&self, index: usize) -> usize {
        let c = self.component_of(index).expect("index outside partition");
        self.components[c].binary_search(&index).expect("index missing from its component")
    }

    /// Diagonal blocks of `op`, one per component. Entries that leave the
    /// partition or cross components are dropped; `crossing_weight` reports
    /// their total magnitude.
    pub fn blocks(&self, op: &SparseOp) -> (Vec<CMat>, f64) {
        assert_eq!(op.dim, self.dim);
        let mut blocks: Vec<CMat> = self.components.iter().map(|c| CMat::zeros(c.len(), c.len())).collect();
        let mut crossing = 0.0;
        for &(i, j, v) in &op.entries {
            match (self.component_of(i), self.component_of(j)) {
                (Some(a), Some(b)) if a == b => {
                    let (li, lj) = (self.local_index(i), self.local_index(j));
                    blocks[a][(li, lj)] += v;
                }
                _ => crossing += v.norm(),
            }
        }
        (blocks, crossing)
    }

    /// Block of a fiber-diagonal operator sum_g |g><g| (x) weights[g] * inner,
    /// restricted to component `comp`.
    pub fn fiber_block(&self, comp: usize, inner: &CMat, weights: &[f64]) -> CMat {
        let members = &self.components[comp];
        let f = self.fiber;
        assert_eq!(inner.nrows(), f);
        let n = members.len();
        let mut m = CMat::zeros(n, n);
        for start in (0..n).step_by(f) {
            let g = members[start] / f;
            let w = weights[g];
            if w == 0.0 {
                continue;
            }
            for a in 0..f {
                for b in 0..f {
                    m[(start + a, start + b)] = inner[(a, b)] * w;
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_distance, random_density, RegisterSystem};

    #[test]
    fn triplets_merge_and_drop_zeros() {
        let op = SparseOp::from_triplets(3, vec![(0, 1, re(1.0)), (0, 1, re(2.0)), (2, 2, re(1.0)), (2, 2, re(-1.0))]);
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.entries()[0], (0, 1, re(3.0)));
    }

    #[test]
    fn monomial_conjugation_matches_dense() {
        let rho = random_density(1, RegisterSystem::single("A", 4).unwrap(), 2).unwrap();
        let op = SparseOp::from_dense(rho.matrix(), 0.0);
        let images = [2, 0, 3, 1];
        let phases = [re(1.0), C64::new(0.0, 1.0), re(-1.0), C64::new(0.0, -1.0)];
        let mut v = CMat::zeros(4, 4);
        for i in 0..4 {
            v[(images[i], i)] = phases[i];
        }
        let dense = &v * rho.matrix() * v.adjoint();
        let sparse = op.conjugate_monomial(&images, Some(&phases)).to_dense();
        assert!(frobenius_distance(&dense, &sparse) < 1e-14);
    }

    #[test]
    fn partition_finds_cliques() {
        let op = SparseOp::from_triplets(6, vec![(0, 3, re(1.0)), (3, 0, re(1.0)), (1, 1, re(1.0)), (4, 5, re(0.5))]);
        let p = Partition::from_ops(6, 1, &[&op]);
        assert_eq!(p.components(), &[vec![0, 3], vec![1], vec![4, 5]]);
        assert_eq!(p.component_of(2), None);
        let (blocks, crossing) = p.blocks(&op);
        assert_eq!(crossing, 0.0);
        assert_eq!(blocks[0][(0, 1)], re(1.0));
        let fibered = Partition::from_ops(6, 2, &[&op]);
        assert_eq!(fibered.components(), &[vec![0, 1, 2, 3], vec![4, 5]]);
    }

    #[test]
    fn trace_product_matches_dense() {
        let a = random_density(2, RegisterSystem::single("A", 5).unwrap(), 3).unwrap();
        let b = random_density(3, RegisterSystem::single("A", 5).unwrap(), 2).unwrap();
        let sa = SparseOp::from_dense(a.matrix(), 0.0);
        let sb = SparseOp::from_dense(b.matrix(), 0.0);
        let dense = crate::linalg::trace_product(a.matrix(), b.matrix());
        assert!((sa.trace_product(&sb) - dense).norm() < 1e-14);
    }
}
