//! Dual potentials, sparse symmetric plans and support patterns.

use crate::error::{Error, Result};

/// Lagrange multipliers for the row-sum constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPotential(Vec<f64>);

impl DualPotential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dual potential"));
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Symmetric hollow nonnegative matrix stored as upper-triangle triplets.
///
/// Each stored `(i, j, value)` has `i < j` and `value > 0`; the entry at
/// `(j, i)` is implied. Triplets are kept sorted by `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsePlan {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    feasible: bool,
}

impl SparsePlan {
    /// Builds a plan from upper-triangle triplets. Entries with value `<= 0`
    /// are dropped; duplicates and lower-triangle entries are rejected.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        triplets.retain(|t| t.2 > 0.0);
        for &(i, j, v) in &triplets {
            if i >= j || j >= n {
                return Err(Error::invalid(format!(
                    "triplet ({i}, {j}) must satisfy i < j < {n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("plan entry"));
            }
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        if triplets
            .windows(2)
            .any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::invalid("duplicate triplet"));
        }
        Ok(Self {
            n,
            triplets,
            feasible: false,
        })
    }

    /// Triplets must already be sorted, upper-triangle and positive.
    pub(crate) fn from_sorted_unchecked(n: usize, triplets: Vec<(usize, usize, f64)>) -> Self {
        debug_assert!(triplets.iter().all(|t| t.0 < t.1 && t.1 < n && t.2 > 0.0));
        Self {
            n,
            triplets,
            feasible: false,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted_unchecked(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    /// Number of stored (upper-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let key = (i.min(j), i.max(j));
        self.triplets
            .binary_search_by(|t| (t.0, t.1).cmp(&key))
            .map(|k| self.triplets[k].2)
            .unwrap_or(0.0)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for &(i, j, v) in &self.triplets {
            sums[i] += v;
            sums[j] += v;
        }
        sums
    }

    pub fn max_row_violation(&self) -> f64 {
        self.row_sums()
            .iter()
            .fold(0.0, |m, s| m.max((s - 1.0).abs()))
    }

    /// `‖π1 − 1‖₂`
    pub fn row_violation_l2(&self) -> f64 {
        self.row_sums()
            .iter()
            .map(|s| (s - 1.0) * (s - 1.0))
            .sum::<f64>()
            .sqrt()
    }

    /// Sets the feasibility flag if every row sum is within `tol` of one.
    pub fn check_feasible(&mut self, tol: f64) -> bool {
        self.feasible = self.max_row_violation() <= tol;
        self.feasible
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for &(i, j, v) in &self.triplets {
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
        out
    }

    /// Full symmetric adjacency lists `(neighbour, value)`, both directions.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, v) in &self.triplets {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        for row in &mut adj {
            row.sort_by_key(|e| e.0);
        }
        adj
    }

    /// Frobenius distance between two plans of the same size, counting
    /// both triangles.
    pub fn frobenius_distance(&self, other: &SparsePlan) -> f64 {
        assert_eq!(self.n, other.n, "plans of different size");
        let (a, b) = (&self.triplets, &other.triplets);
        let (mut p, mut q) = (0, 0);
        let mut acc = 0.0;
        while p < a.len() || q < b.len() {
            let ka = a.get(p).map(|t| (t.0, t.1));
            let kb = b.get(q).map(|t| (t.0, t.1));
            let diff = match (ka, kb) {
                (Some(x), Some(y)) if x == y => {
                    p += 1;
                    q += 1;
                    a[p - 1].2 - b[q - 1].2
                }
                (Some(x), Some(y)) if x < y => {
                    p += 1;
                    a[p - 1].2
                }
                (Some(_), None) => {
                    p += 1;
                    a[p - 1].2
                }
                _ => {
                    q += 1;
                    b[q - 1].2
                }
            };
            acc += 2.0 * diff * diff;
        }
        acc.sqrt()
    }

    /// Nonzero pattern as a support mask.
    pub fn support(&self) -> SupportMask {
        SupportMask::from_edges(self.n, self.triplets.iter().map(|t| (t.0, t.1)))
    }

    pub(crate) fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> SparsePlan {
        let triplets = self
            .triplets
            .iter()
            .map(|&(i, j, v)| (i, j, f(i, j, v)))
            .filter(|t| t.2 > 0.0)
            .collect();
        SparsePlan::from_sorted_unchecked(self.n, triplets)
    }
}

/// Symmetric hollow 0/1 pattern in compressed sparse row form. Every edge is
/// stored in both directions; neighbour lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportMask {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl SupportMask {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
        }
    }

    /// All off-diagonal pairs.
    pub fn full(n: usize) -> Self {
        Self::from_edges(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))))
    }

    /// Builds a mask from undirected edges given in either orientation.
    /// Self-loops are ignored and duplicates merged.
    ///
    /// Panics if an index is out of range.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, j) in edges {
            assert!(i < n && j < n, "edge ({i}, {j}) out of range for n = {n}");
            if i != j {
                rows[i].push(j);
                rows[j].push(i);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols }
    }

    /// Builds a mask from a dense 0/1 row-major matrix, requiring symmetry.
    pub fn from_dense(n: usize, pattern: &[bool]) -> Result<Self> {
        if pattern.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: pattern.len(),
            });
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if pattern[i * n + j] != pattern[j * n + i] {
                    return Err(Error::invalid(format!(
                        "pattern not symmetric at ({i}, {j})"
                    )));
                }
                if i < j && pattern[i * n + j] {
                    edges.push((i, j));
                }
            }
        }
        Ok(Self::from_edges(n, edges))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.cols.len() / 2
    }

    /// Undirected edges with `i < j`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .copied()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn union(&self, other: &SupportMask) -> SupportMask {
        assert_eq!(self.n, other.n, "masks of different size");
        SupportMask::from_edges(self.n, self.edges().chain(other.edges()))
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).min().unwrap_or(0)
    }

    pub fn to_dense(&self) -> Vec<bool> {
        let mut out = vec![false; self.n * self.n];
        for i in 0..self.n {
            for &j in self.neighbors(i) {
                out[i * self.n + j] = true;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_lookup_and_sums() {
        let plan =
            SparsePlan::from_triplets(3, vec![(1, 2, 0.5), (0, 1, 0.5), (0, 2, 0.5)]).unwrap();
        assert_eq!(plan.get(2, 1), 0.5);
        assert_eq!(plan.get(1, 1), 0.0);
        assert_eq!(plan.row_sums(), vec![1.0, 1.0, 1.0]);
        assert_eq!(plan.max_row_violation(), 0.0);
        assert_eq!(plan.triplets()[0], (0, 1, 0.5));
    }

    #[test]
    fn plan_rejects_lower_triangle() {
        assert!(SparsePlan::from_triplets(3, vec![(2, 1, 0.5)]).is_err());
        assert!(SparsePlan::from_triplets(3, vec![(1, 1, 0.5)]).is_err());
        assert!(SparsePlan::from_triplets(3, vec![(0, 1, 0.5), (0, 1, 0.2)]).is_err());
    }

    #[test]
    fn frobenius_distance_counts_both_triangles() {
        let a = SparsePlan::from_triplets(3, vec![(0, 1, 1.0)]).unwrap();
        let b = SparsePlan::from_triplets(3, vec![(0, 2, 1.0)]).unwrap();
        assert!((a.frobenius_distance(&b) - 2.0).abs() < 1e-15);
        assert_eq!(a.frobenius_distance(&a), 0.0);
    }

    #[test]
    fn mask_construction() {
        let m = SupportMask::from_edges(4, [(1, 0), (0, 1), (2, 2), (3, 1)]);
        assert_eq!(m.edge_count(), 2);
        assert_eq!(m.neighbors(1), &[0, 3]);
        assert!(m.contains(3, 1));
        assert!(!m.contains(2, 2));
        assert_eq!(m.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 3)]);
        assert_eq!(SupportMask::full(4).edge_count(), 6);
        let dense = m.to_dense();
        assert_eq!(SupportMask::from_dense(4, &dense).unwrap(), m);
    }
}
