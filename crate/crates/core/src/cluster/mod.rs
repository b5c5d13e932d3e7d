//! Hierarchical density-based clustering of activation rows.
//!
//! The pipeline is the usual one: core distances, a minimum spanning tree
//! over mutual reachability, a single-linkage dendrogram, the condensed tree,
//! and flat cluster selection (leaf clusters by default).

mod condense;
mod distance;
mod hierarchy;
mod select;

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use condense::{condense_tree, stability, CondensedCluster, CondensedTree};
pub use distance::{core_distances, mutual_reachability_mst, Edge};
pub use hierarchy::{build_hierarchy, Dendrogram, Merge};
pub use select::select_clusters;

use crate::error::{bail, NapError, Result};
use crate::normalize::NormalizedMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    #[default]
    Leaf,
    #[serde(rename = "eom")]
    ExcessOfMass,
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMethod::Leaf => "leaf",
            SelectionMethod::ExcessOfMass => "eom",
        })
    }
}

impl FromStr for SelectionMethod {
    type Err = NapError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leaf" => Ok(SelectionMethod::Leaf),
            "eom" => Ok(SelectionMethod::ExcessOfMass),
            other => Err(NapError::Param(format!(
                "unknown selection '{other}' (expected leaf|eom)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    /// Neighbour rank used for core distances (the point itself excluded).
    pub min_samples: usize,
    pub selection: SelectionMethod,
    pub metric: Metric,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            min_cluster_size: 5,
            min_samples: 5,
            selection: SelectionMethod::Leaf,
            metric: Metric::Euclidean,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_cluster_size < 2 {
            bail!(
                Param,
                "min_cluster_size must be >= 2, got {}",
                self.min_cluster_size
            );
        }
        if self.min_samples < 1 {
            bail!(Param, "min_samples must be >= 1, got {}", self.min_samples);
        }
        Ok(())
    }
}

/// Flat clustering result. Labels are dense, `0..n_clusters`.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    labels: Vec<Option<usize>>,
    strengths: Vec<f64>,
    stabilities: Vec<f64>,
    tree_nodes: Vec<usize>,
}

impl Labeling {
    pub(crate) fn from_parts(
        labels: Vec<Option<usize>>,
        strengths: Vec<f64>,
        stabilities: Vec<f64>,
        tree_nodes: Vec<usize>,
    ) -> Self {
        Self {
            labels,
            strengths,
            stabilities,
            tree_nodes,
        }
    }

    /// Build a labeling directly; mainly for tests and re-imports.
    pub fn new(
        labels: Vec<Option<usize>>,
        strengths: Vec<f64>,
        stabilities: Vec<f64>,
    ) -> Result<Self> {
        if labels.len() != strengths.len() {
            bail!(
                Shape,
                "{} labels but {} strengths",
                labels.len(),
                strengths.len()
            );
        }
        let k = stabilities.len();
        if labels.iter().flatten().any(|&l| l >= k) {
            bail!(Param, "label out of range for {k} clusters");
        }
        if strengths.iter().any(|s| !(0.0..=1.0).contains(s)) {
            bail!(Param, "membership strengths must lie in [0, 1]");
        }
        let tree_nodes = (0..k).collect();
        Ok(Self {
            labels,
            strengths,
            stabilities,
            tree_nodes,
        })
    }

    pub fn n_points(&self) -> usize {
        self.labels.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.stabilities.len()
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, point: usize) -> Option<usize> {
        self.labels[point]
    }

    /// Membership strength in `[0, 1]`; 0 for noise.
    pub fn strength(&self, point: usize) -> f64 {
        self.strengths[point]
    }

    pub fn stability(&self, label: usize) -> f64 {
        self.stabilities[label]
    }

    pub fn stabilities(&self) -> &[f64] {
        &self.stabilities
    }

    /// Condensed-tree cluster that produced `label`.
    pub fn tree_node(&self, label: usize) -> usize {
        self.tree_nodes[label]
    }

    /// Points with `label`, ascending.
    pub fn members(&self, label: usize) -> Vec<usize> {
        (0..self.n_points())
            .filter(|&p| self.labels[p] == Some(label))
            .collect()
    }

    pub fn noise(&self) -> Vec<usize> {
        (0..self.n_points())
            .filter(|&p| self.labels[p].is_none())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Clustering {
    pub tree: CondensedTree,
    pub stabilities: Vec<f64>,
    pub labeling: Labeling,
}

/// Run the full clustering pipeline on the rows of `points`.
pub fn hdbscan(points: ArrayView2<'_, f32>, params: &ClusterParams) -> Result<Clustering> {
    params.validate()?;
    let n = points.nrows();
    if n == 0 {
        bail!(Param, "cannot cluster an empty matrix");
    }
    let pts = distance::Points::new(points);
    debug_assert!(pts.len() == n || points.ncols() == 0);
    let core = distance::core_distances_of(&pts, n, params.min_samples)?;
    let mst = distance::mst_of(&pts, &core);
    let dendrogram = build_hierarchy(n, &mst);
    let tree = condense_tree(&dendrogram, params.min_cluster_size);
    let stabilities = stability(&tree);
    let labeling = select_clusters(&tree, &stabilities, params);
    Ok(Clustering {
        tree,
        stabilities,
        labeling,
    })
}

pub fn cluster(norm: &NormalizedMatrix, params: &ClusterParams) -> Result<Clustering> {
    hdbscan(norm.values(), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn defaults() {
        let p = ClusterParams::default();
        assert_eq!((p.min_cluster_size, p.min_samples), (5, 5));
        assert_eq!(p.selection, SelectionMethod::Leaf);
        assert_eq!(p.metric, Metric::Euclidean);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = ClusterParams {
            min_cluster_size: 1,
            ..ClusterParams::default()
        };
        assert!(matches!(p.validate(), Err(NapError::Param(_))));
        p.min_cluster_size = 2;
        p.min_samples = 0;
        assert!(matches!(p.validate(), Err(NapError::Param(_))));
    }

    #[test]
    fn blob_with_outlier() {
        // five identical points and one far away
        let mut v = vec![0f32; 10];
        v.extend([50.0, 50.0]);
        let pts = Array2::from_shape_vec((6, 2), v).unwrap();
        let c = hdbscan(
            pts.view(),
            &ClusterParams {
                min_samples: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(c.tree.clusters().len(), 1);
        // outlier leaves first, at a finite lambda
        assert!(c.tree.point_lambda(5).is_finite());
        assert!((0..5).all(|p| c.tree.point_lambda(p).is_infinite()));
        assert_eq!(c.labeling.members(0), vec![0, 1, 2, 3, 4]);
        assert_eq!(c.labeling.noise(), vec![5]);
    }

    #[test]
    fn too_few_points_for_any_cluster() {
        let pts = Array2::from_shape_vec((4, 1), vec![0f32, 1., 2., 3.]).unwrap();
        let c = hdbscan(
            pts.view(),
            &ClusterParams {
                min_samples: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(c.labeling.n_clusters(), 0);
        assert_eq!(c.labeling.noise().len(), 4);
    }

    #[test]
    fn selection_parses() {
        assert_eq!(
            "leaf".parse::<SelectionMethod>().unwrap(),
            SelectionMethod::Leaf
        );
        assert_eq!(
            "eom".parse::<SelectionMethod>().unwrap(),
            SelectionMethod::ExcessOfMass
        );
        assert!("best".parse::<SelectionMethod>().is_err());
    }
}
