use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{bail, Result};

/// Undirected tree edge between two point indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Row-major `f64` copy of a point set; distances are accumulated in `f64`.
pub(crate) struct Points {
    data: Vec<f64>,
    dims: usize,
}

impl Points {
    pub(crate) fn new(points: ArrayView2<'_, f32>) -> Self {
        let dims = points.ncols();
        let data = points.iter().map(|&v| f64::from(v)).collect();
        Self { data, dims }
    }

    pub(crate) fn len(&self) -> usize {
        self.data.len().checked_div(self.dims).unwrap_or(0)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub(crate) fn distance(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Euclidean distance from each point to its `k`-th nearest other point.
pub fn core_distances(points: ArrayView2<'_, f32>, k: usize) -> Result<Vec<f64>> {
    core_distances_of(&Points::new(points), points.nrows(), k)
}

pub(crate) fn core_distances_of(points: &Points, n: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        bail!(Param, "core distance neighbour count must be >= 1");
    }
    if n <= k {
        bail!(
            Param,
            "need more than {k} samples for core distances, got {n}"
        );
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| points.distance(i, j))
                .collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

/// Minimum spanning tree of the mutual-reachability graph
/// `max(core[a], core[b], d(a, b))`, built with Prim's algorithm from point 0.
///
/// Ties go to the smaller point index, and an existing candidate edge is kept
/// over an equal-weight one found later.
pub fn mutual_reachability_mst(points: ArrayView2<'_, f32>, core: &[f64]) -> Vec<Edge> {
    mst_of(&Points::new(points), core)
}

pub(crate) fn mst_of(points: &Points, core: &[f64]) -> Vec<Edge> {
    let n = core.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut best_from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;

    for _ in 1..n {
        let core_current = core[current];
        best.par_iter_mut()
            .zip(best_from.par_iter_mut())
            .zip(in_tree.par_iter())
            .enumerate()
            .for_each(|(j, ((best, from), &done))| {
                if done {
                    return;
                }
                let mr = points.distance(current, j).max(core_current).max(core[j]);
                if mr < *best {
                    *best = mr;
                    *from = current;
                }
            });
        let mut next = usize::MAX;
        let mut next_weight = f64::INFINITY;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < next_weight) {
                next = j;
                next_weight = best[j];
            }
        }
        in_tree[next] = true;
        edges.push(Edge {
            a: best_from[next],
            b: next,
            weight: next_weight,
        });
        current = next;
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn core_distances_on_a_line() {
        let p = array![[0f32], [1.], [10.]];
        assert_eq!(core_distances(p.view(), 1).unwrap(), vec![1., 1., 9.]);
        assert_eq!(core_distances(p.view(), 2).unwrap(), vec![10., 9., 10.]);
    }

    #[test]
    fn duplicates_have_zero_core_distance() {
        let p = array![[2f32, 2.], [2., 2.], [5., 5.]];
        let c = core_distances(p.view(), 1).unwrap();
        assert_eq!(&c[..2], &[0., 0.]);
    }

    #[test]
    fn too_few_samples_is_param_error() {
        let p = array![[0f32], [1.]];
        assert!(core_distances(p.view(), 2).is_err());
        assert!(core_distances(p.view(), 0).is_err());
    }

    #[test]
    fn triangle_keeps_two_lightest_edges() {
        // core 0 everywhere: mr equals plain distance, sides 1, 2, and sqrt(5)
        let p = array![[0f32, 0.], [1., 0.], [1., 2.]];
        let edges = mutual_reachability_mst(p.view(), &[0., 0., 0.]);
        let mut w: Vec<f64> = edges.iter().map(|e| e.weight).collect();
        w.sort_by(f64::total_cmp);
        assert_eq!(w, vec![1., 2.]);
    }

    #[test]
    fn identical_points_give_zero_weight_tree() {
        let p = Array2::<f32>::ones((6, 3));
        let core = core_distances(p.view(), 2).unwrap();
        let edges = mutual_reachability_mst(p.view(), &core);
        assert_eq!(edges.len(), 5);
        assert!(edges.iter().all(|e| e.weight == 0.0));
    }
}
