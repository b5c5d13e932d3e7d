//! Flat cluster extraction from a condensed tree.

use super::condense::CondensedTree;
use super::{ClusterParams, Labeling, SelectionMethod};

/// Pick clusters from the tree and label every point.
///
/// Leaf mode takes every cluster without child clusters. Excess-of-mass keeps
/// a cluster unless its children's combined stability is strictly larger.
/// The root is only eligible when it never splits; it then forms a single
/// cluster of the points that persist to its final lambda.
pub fn select_clusters(
    tree: &CondensedTree,
    stabilities: &[f64],
    params: &ClusterParams,
) -> Labeling {
    let n_clusters = tree.clusters().len();
    let n = tree.n_points();

    if n_clusters == 1 {
        return single_root_cluster(tree, stabilities, params);
    }

    let mut selected = vec![false; n_clusters];
    match params.selection {
        SelectionMethod::Leaf => {
            for (c, sel) in selected.iter_mut().enumerate().skip(1) {
                *sel = tree.is_leaf(c);
            }
        }
        SelectionMethod::ExcessOfMass => {
            let mut subtree = stabilities.to_vec();
            // children always carry larger indices than their parents
            for c in (1..n_clusters).rev() {
                let children = &tree.clusters()[c].children;
                if children.is_empty() {
                    selected[c] = true;
                    continue;
                }
                let below: f64 = children.iter().map(|&k| subtree[k]).sum();
                if below > stabilities[c] {
                    subtree[c] = below;
                } else {
                    selected[c] = true;
                    for d in tree.descendants(c).into_iter().skip(1) {
                        selected[d] = false;
                    }
                }
            }
        }
    }

    let chosen: Vec<usize> = (0..n_clusters).filter(|&c| selected[c]).collect();
    let mut label_of = vec![None; n_clusters];
    for (label, &c) in chosen.iter().enumerate() {
        for d in tree.descendants(c) {
            label_of[d] = Some(label);
        }
    }

    let mut labels = vec![None; n];
    let mut strengths = vec![0.0; n];
    for p in 0..n {
        let Some(label) = label_of[tree.point_cluster(p)] else {
            continue;
        };
        labels[p] = Some(label);
        strengths[p] = membership(
            tree.point_lambda(p),
            tree.clusters()[chosen[label]].lambda_death,
        );
    }
    Labeling::from_parts(
        labels,
        strengths,
        chosen.iter().map(|&c| stabilities[c]).collect(),
        chosen,
    )
}

fn single_root_cluster(
    tree: &CondensedTree,
    stabilities: &[f64],
    params: &ClusterParams,
) -> Labeling {
    let n = tree.n_points();
    let root = &tree.clusters()[0];
    let members: Vec<usize> = (0..n)
        .filter(|&p| tree.point_lambda(p) >= root.lambda_death)
        .collect();
    if n < params.min_cluster_size || members.len() < params.min_cluster_size {
        return Labeling::from_parts(vec![None; n], vec![0.0; n], Vec::new(), Vec::new());
    }
    let mut labels = vec![None; n];
    let mut strengths = vec![0.0; n];
    for p in members {
        labels[p] = Some(0);
        strengths[p] = 1.0;
    }
    Labeling::from_parts(labels, strengths, vec![stabilities[0]], vec![0])
}

/// `lambda_exit / lambda_max`, clamped to `[0, 1]`.
fn membership(lambda: f64, lambda_max: f64) -> f64 {
    if lambda_max == 0.0 || lambda.is_infinite() {
        1.0
    } else {
        (lambda.min(lambda_max) / lambda_max).clamp(0.0, 1.0)
    }
}
