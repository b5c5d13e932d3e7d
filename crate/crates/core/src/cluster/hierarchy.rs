//! Single-linkage dendrogram from a spanning tree.

use super::distance::Edge;

/// One agglomeration step. Ids below `n_points` are points; id `n_points + i`
/// is the cluster created by merge `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub weight: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n_points: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    #[cfg(test)]
    pub(crate) fn from_merges(n_points: usize, merges: Vec<Merge>) -> Self {
        Self { n_points, merges }
    }

    /// Number of points under a node id.
    pub fn size_of(&self, node: usize) -> usize {
        if node < self.n_points {
            1
        } else {
            self.merges[node - self.n_points].size
        }
    }

    pub fn root(&self) -> usize {
        if self.merges.is_empty() {
            0
        } else {
            self.n_points + self.merges.len() - 1
        }
    }

    pub(crate) fn children(&self, node: usize) -> Option<(usize, usize)> {
        node.checked_sub(self.n_points)
            .map(|i| (self.merges[i].left, self.merges[i].right))
    }

    /// All point ids under `node`.
    pub(crate) fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(cur) = stack.pop() {
            match self.children(cur) {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(cur),
            }
        }
        out
    }
}

/// Union-find whose every union mints a fresh label, so roots double as
/// dendrogram node ids.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    next_label: usize,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        let total = (2 * n).saturating_sub(1);
        let mut size = vec![0; total];
        size[..n].fill(1);
        Self {
            parent: (0..total).collect(),
            size,
            next_label: n,
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> usize {
        let label = self.next_label;
        self.next_label += 1;
        self.parent[a] = label;
        self.parent[b] = label;
        self.size[label] = self.size[a] + self.size[b];
        label
    }

    pub(crate) fn size(&self, root: usize) -> usize {
        self.size[root]
    }
}

/// Merge the tree edges in ascending weight order (ties by endpoint indices).
pub fn build_hierarchy(n_points: usize, mst: &[Edge]) -> Dendrogram {
    let mut edges = mst.to_vec();
    edges.sort_by(|x, y| {
        x.weight
            .total_cmp(&y.weight)
            .then(x.a.min(x.b).cmp(&y.a.min(y.b)))
            .then(x.a.max(x.b).cmp(&y.a.max(y.b)))
    });
    let mut uf = UnionFind::new(n_points);
    let mut merges = Vec::with_capacity(n_points.saturating_sub(1));
    for e in edges {
        let (ra, rb) = (uf.find(e.a), uf.find(e.b));
        if ra == rb {
            debug_assert!(false, "edge list is not a tree");
            continue;
        }
        merges.push(Merge {
            left: ra,
            right: rb,
            weight: e.weight,
            size: uf.size(ra) + uf.size(rb),
        });
        uf.union(ra, rb);
    }
    Dendrogram { n_points, merges }
}
