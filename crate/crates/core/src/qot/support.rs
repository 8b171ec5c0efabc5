//! Initial supports for the active-set solver.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::plan::SupportMask;

/// Indices of the `k` smallest entries of row `i`, excluding `i` itself.
/// Ties are broken by the smaller index.
pub(crate) fn nearest(c: &CostMatrix, i: usize, k: usize) -> Vec<usize> {
    let row = c.row(i);
    let mut idx: Vec<usize> = (0..c.n()).filter(|&j| j != i).collect();
    let cmp = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// Symmetrised k-nearest-neighbour pattern: `(i, j)` is present when `j` is
/// among the `k` nearest neighbours of `i` or vice versa.
pub fn knn_support(c: &CostMatrix, k: usize) -> Result<SupportMask> {
    let n = c.n();
    if k == 0 || k + 1 > n {
        return Err(Error::invalid(format!(
            "k = {k} must lie in [1, {}]",
            n.saturating_sub(1)
        )));
    }
    let edges = (0..n).flat_map(|i| nearest(c, i, k).into_iter().map(move |j| (i, j)));
    Ok(SupportMask::from_edges(n, edges.collect::<Vec<_>>()))
}

/// Adds the symmetrised patterns of `count` random permutations without
/// fixed points. Every permutation touches every row, so the result has no
/// empty row once `count >= 1`.
pub fn add_random_permutations(s: &SupportMask, count: usize, seed: u64) -> SupportMask {
    let n = s.n();
    if count == 0 || n < 2 {
        return s.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = s.edges().collect();
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..count {
        loop {
            perm.shuffle(&mut rng);
            if perm.iter().enumerate().all(|(i, &p)| i != p) {
                break;
            }
        }
        edges.extend(perm.iter().enumerate().map(|(i, &p)| (i, p)));
    }
    SupportMask::from_edges(n, edges)
}

/// Whether some symmetric hollow bistochastic matrix is supported on `s`.
///
/// Such a matrix exists exactly when the bipartite double cover of `s` (rows
/// on one side, columns on the other) has a perfect matching: a matching is
/// a permutation inside `s`, and symmetrising it gives a feasible plan;
/// conversely Birkhoff's theorem yields a permutation inside the support of
/// any bistochastic matrix. Checked with Hopcroft-Karp.
pub fn supports_feasible_plan(s: &SupportMask) -> bool {
    const FREE: usize = usize::MAX;
    let n = s.n();
    let mut match_row = vec![FREE; n];
    let mut match_col = vec![FREE; n];
    let mut dist = vec![0usize; n];
    let mut queue = Vec::with_capacity(n);
    let mut matched = 0;
    loop {
        // layered BFS from free rows
        queue.clear();
        for i in 0..n {
            if match_row[i] == FREE {
                dist[i] = 0;
                queue.push(i);
            } else {
                dist[i] = usize::MAX;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < queue.len() {
            let i = queue[head];
            head += 1;
            for &j in s.neighbors(i) {
                let k = match_col[j];
                if k == FREE {
                    found = true;
                } else if dist[k] == usize::MAX {
                    dist[k] = dist[i] + 1;
                    queue.push(k);
                }
            }
        }
        if !found {
            break;
        }
        let mut next = vec![0usize; n];
        for i in 0..n {
            if match_row[i] == FREE
                && augment(s, i, &mut match_row, &mut match_col, &mut dist, &mut next)
            {
                matched += 1;
            }
        }
    }
    matched == n
}

fn augment(
    s: &SupportMask,
    root: usize,
    match_row: &mut [usize],
    match_col: &mut [usize],
    dist: &mut [usize],
    next: &mut [usize],
) -> bool {
    // iterative DFS along the BFS layers
    let mut stack = vec![root];
    let mut path_cols: Vec<usize> = Vec::new();
    while let Some(&i) = stack.last() {
        let nb = s.neighbors(i);
        let mut advanced = false;
        while next[i] < nb.len() {
            let j = nb[next[i]];
            next[i] += 1;
            let k = match_col[j];
            if k == usize::MAX {
                path_cols.push(j);
                for (&row, &col) in stack.iter().zip(path_cols.iter()) {
                    match_row[row] = col;
                    match_col[col] = row;
                }
                return true;
            }
            if dist[k] == dist[i] + 1 {
                path_cols.push(j);
                stack.push(k);
                advanced = true;
                break;
            }
        }
        if !advanced {
            dist[i] = usize::MAX;
            stack.pop();
            path_cols.pop();
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::pairwise_cost;

    fn line(n: usize) -> CostMatrix {
        pairwise_cost(&(0..n).map(|k| vec![k as f64]).collect::<Vec<_>>(), false).unwrap()
    }

    #[test]
    fn knn_on_collinear_points() {
        let s = knn_support(&line(3), 1).unwrap();
        assert_eq!(s.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_full_and_out_of_range() {
        assert_eq!(knn_support(&line(5), 4).unwrap(), SupportMask::full(5));
        assert!(knn_support(&line(5), 0).is_err());
        assert!(knn_support(&line(5), 5).is_err());
    }

    #[test]
    fn knn_ties_prefer_smaller_index() {
        // point 1 is equidistant from 0 and 2
        let s = knn_support(&line(3), 1).unwrap();
        assert!(s.contains(1, 0));
        let c = pairwise_cost(&[vec![0.0], vec![1.0], vec![-1.0], vec![10.0]], false).unwrap();
        assert_eq!(nearest(&c, 0, 1), vec![1]);
    }

    #[test]
    fn permutations() {
        let s = SupportMask::empty(7);
        assert_eq!(add_random_permutations(&s, 0, 3), s);
        let a = add_random_permutations(&s, 1, 3);
        assert!(a.min_degree() >= 1);
        assert_eq!(a, add_random_permutations(&s, 1, 3));
        let two = add_random_permutations(&SupportMask::empty(2), 1, 9);
        assert_eq!(two, SupportMask::full(2));
    }

    #[test]
    fn feasibility_of_supports() {
        assert!(supports_feasible_plan(&SupportMask::full(2)));
        assert!(!supports_feasible_plan(&SupportMask::empty(3)));
        // path 0-1-2: needs the (0, 2) pair
        let path = SupportMask::from_edges(3, [(0, 1), (1, 2)]);
        assert!(!supports_feasible_plan(&path));
        // path of four points: the two end edges form a perfect matching
        let path4 = SupportMask::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        assert!(supports_feasible_plan(&path4));
        let star = SupportMask::from_edges(5, (1..5).map(|j| (0, j)));
        assert!(!supports_feasible_plan(&star));
        let s = add_random_permutations(&SupportMask::empty(40), 1, 5);
        assert!(supports_feasible_plan(&s));
    }
}
