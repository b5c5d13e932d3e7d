//! Condensed cluster tree: the single-linkage hierarchy pruned so that only
//! splits into two sufficiently large halves create new clusters. Everything
//! else "falls out" of its cluster as individual points.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::hierarchy::Dendrogram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedCluster {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Lambda at which the cluster split off its parent (0 for the root).
    pub lambda_birth: f64,
    /// Largest lambda among the cluster's direct children (points or clusters).
    pub lambda_death: f64,
    /// Points in the cluster at birth.
    pub size: usize,
}

/// Clusters are indexed in creation order, so the root is 0 and every child
/// has a larger index than its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    clusters: Vec<CondensedCluster>,
    point_cluster: Vec<usize>,
    point_lambda: Vec<f64>,
}

impl CondensedTree {
    pub fn n_points(&self) -> usize {
        self.point_cluster.len()
    }

    pub fn clusters(&self) -> &[CondensedCluster] {
        &self.clusters
    }

    /// Cluster the point fell out of.
    pub fn point_cluster(&self, point: usize) -> usize {
        self.point_cluster[point]
    }

    /// Lambda at which the point left its cluster.
    pub fn point_lambda(&self, point: usize) -> f64 {
        self.point_lambda[point]
    }

    pub fn is_leaf(&self, cluster: usize) -> bool {
        self.clusters[cluster].children.is_empty()
    }

    /// `cluster` itself followed by all its descendants.
    pub fn descendants(&self, cluster: usize) -> Vec<usize> {
        let mut out = vec![cluster];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.clusters[out[i]].children);
            i += 1;
        }
        out
    }

    /// Is `ancestor` equal to or above `cluster`?
    pub fn is_ancestor(&self, ancestor: usize, mut cluster: usize) -> bool {
        loop {
            if cluster == ancestor {
                return true;
            }
            match self.clusters[cluster].parent {
                Some(p) => cluster = p,
                None => return false,
            }
        }
    }
}

pub(crate) fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

pub fn condense_tree(dendrogram: &Dendrogram, min_cluster_size: usize) -> CondensedTree {
    let n = dendrogram.n_points();
    let mut clusters = vec![CondensedCluster {
        parent: None,
        children: Vec::new(),
        lambda_birth: 0.0,
        lambda_death: 0.0,
        size: n,
    }];
    let mut point_cluster = vec![0usize; n];
    let mut point_lambda = vec![0f64; n];

    if dendrogram.merges().is_empty() {
        return CondensedTree {
            clusters,
            point_cluster,
            point_lambda,
        };
    }

    let mut fall_out =
        |node: usize, cluster: usize, lambda: f64, clusters: &mut Vec<CondensedCluster>| {
            for p in dendrogram.leaves_under(node) {
                point_cluster[p] = cluster;
                point_lambda[p] = lambda;
            }
            let c = &mut clusters[cluster];
            c.lambda_death = c.lambda_death.max(lambda);
        };

    // (dendrogram node, condensed cluster it belongs to), breadth first
    let mut queue = VecDeque::from([(dendrogram.root(), 0usize)]);
    while let Some((node, cluster)) = queue.pop_front() {
        let Some((left, right)) = dendrogram.children(node) else {
            continue;
        };
        let lambda = lambda_of(dendrogram.merges()[node - n].weight);
        let left_big = dendrogram.size_of(left) >= min_cluster_size;
        let right_big = dendrogram.size_of(right) >= min_cluster_size;

        match (left_big, right_big) {
            (true, true) => {
                for child in [left, right] {
                    let id = clusters.len();
                    clusters.push(CondensedCluster {
                        parent: Some(cluster),
                        children: Vec::new(),
                        lambda_birth: lambda,
                        lambda_death: lambda,
                        size: dendrogram.size_of(child),
                    });
                    clusters[cluster].children.push(id);
                    queue.push_back((child, id));
                }
                let c = &mut clusters[cluster];
                c.lambda_death = c.lambda_death.max(lambda);
            }
            (true, false) => {
                fall_out(right, cluster, lambda, &mut clusters);
                queue.push_back((left, cluster));
            }
            (false, true) => {
                fall_out(left, cluster, lambda, &mut clusters);
                queue.push_back((right, cluster));
            }
            (false, false) => {
                fall_out(left, cluster, lambda, &mut clusters);
                fall_out(right, cluster, lambda, &mut clusters);
            }
        }
    }

    CondensedTree {
        clusters,
        point_cluster,
        point_lambda,
    }
}

/// Per cluster: sum over its points of `lambda_exit - lambda_birth`, where a
/// point that moves on into a child cluster exits at the child's birth.
pub fn stability(tree: &CondensedTree) -> Vec<f64> {
    let mut out = vec![0f64; tree.clusters.len()];
    let gain = |lambda: f64, birth: f64, count: usize| {
        if lambda == birth {
            0.0
        } else {
            (lambda - birth) * count as f64
        }
    };
    for p in 0..tree.n_points() {
        let c = tree.point_cluster[p];
        out[c] += gain(tree.point_lambda[p], tree.clusters[c].lambda_birth, 1);
    }
    for child in tree.clusters.iter().skip(1) {
        let parent = child.parent.expect("non-root cluster has a parent");
        out[parent] += gain(
            child.lambda_birth,
            tree.clusters[parent].lambda_birth,
            child.size,
        );
    }
    out
}
