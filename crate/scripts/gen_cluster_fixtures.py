"""Generate reference labelings for the clustering equivalence tests.

Runs the `hdbscan` package (exact MST, both the generic and the kd-tree Prim
backends) and scikit-learn's HDBSCAN on small synthetic datasets, keeps only
datasets on which all three agree, and writes points + labels as JSON.

Mutual-reachability MSTs routinely contain equal-weight edges (one point's
core distance dominating several edges). The reference libraries order those
with an unstable sort, so a dataset is also dropped unless its partition is
the same under many random orderings of the tied edges. Tie-sensitive datasets
are still written, but their labels come from the reference condensing and
selection code fed with ties ordered by (weight, smaller endpoint, larger
endpoint), which is the deterministic order the Rust implementation uses.
The `tie_order` field records which of the two a fixture holds.

    pip install hdbscan scikit-learn
    python scripts/gen_cluster_fixtures.py crates/core/tests/fixtures/hdbscan
"""
import json
import sys
from pathlib import Path

import hdbscan
import numpy as np
from sklearn.cluster import HDBSCAN
from sklearn.datasets import make_blobs, make_circles, make_moons
from sklearn.metrics import adjusted_rand_score
from hdbscan._hdbscan_linkage import label, mst_linkage_core
from hdbscan._hdbscan_reachability import mutual_reachability
from hdbscan._hdbscan_tree import compute_stability, condense_tree, get_clusters
from scipy.spatial.distance import pdist, squareform

MIN_CLUSTER_SIZE = 5
MIN_SAMPLES = 5
TIE_TRIALS = 64


def datasets():
    rng = np.random.default_rng(20221015)
    yield "separated3_2d", make_blobs(200, 2, centers=[[-8, -4], [0, 8], [8, -4]], cluster_std=1.0, random_state=0)[0], False
    yield "blobs3_2d", make_blobs(150, 2, centers=3, cluster_std=0.8, random_state=1)[0], False
    yield "blobs4_3d", make_blobs(200, 3, centers=4, cluster_std=[0.5, 1.0, 1.5, 0.7], random_state=2)[0], False
    a = make_blobs(180, 2, centers=3, random_state=3)[0]
    yield "aniso_2d", a @ np.array([[0.6, -0.6], [-0.4, 0.8]]), False
    b = make_blobs(200, 2, centers=4, cluster_std=0.6, random_state=4)[0]
    yield "blobs_noise_2d", np.vstack([b, rng.uniform(b.min(0), b.max(0), (50, 2))]), False
    yield "blobs5_8d", make_blobs(300, 8, centers=5, cluster_std=1.0, random_state=5)[0], False
    yield "blobs3_16d", make_blobs(120, 16, centers=3, cluster_std=1.2, random_state=6)[0], False
    yield "blobs4_32d", make_blobs(200, 32, centers=4, cluster_std=1.5, random_state=7)[0], False
    yield "moons_2d", make_moons(200, noise=0.06, random_state=8)[0], False
    yield "circles_2d", make_circles(200, noise=0.04, factor=0.45, random_state=9)[0], False
    yield "varied_density_2d", make_blobs(300, 2, centers=3, cluster_std=[0.3, 1.0, 2.0], random_state=10)[0], False
    # activation-like rows: relu'd mixtures with very different per-unit scales
    c = make_blobs(240, 12, centers=4, cluster_std=0.7, random_state=11)[0]
    yield "relu_scaled_12d", np.maximum(c, 0.0) * rng.uniform(0.5, 40.0, 12), True
    d = make_blobs(260, 24, centers=5, cluster_std=0.9, random_state=12)[0]
    yield "signed_scaled_24d", d * rng.uniform(0.1, 25.0, 24), True
    yield "blobs6_4d", make_blobs(280, 4, centers=6, cluster_std=0.5, random_state=13)[0], False
    yield "blobs3_2d_b", make_blobs(200, 2, centers=3, cluster_std=0.6, random_state=14)[0], False
    yield "blobs3_2d_c", make_blobs(200, 2, centers=[[-6, 0], [0, 6], [6, 0]], cluster_std=0.7, random_state=15)[0], False
    yield "blobs3_3d", make_blobs(200, 3, centers=3, cluster_std=0.5, random_state=100)[0], False
    yield "blobs3_3d_split", make_blobs(200, 3, centers=3, cluster_std=0.5, random_state=111)[0], False
    yield "blobs4_6d", make_blobs(250, 6, centers=4, cluster_std=0.9, random_state=16)[0], False
    yield "blobs3_10d", make_blobs(180, 10, centers=3, cluster_std=1.0, random_state=17)[0], False
    yield "blobs5_20d", make_blobs(300, 20, centers=5, cluster_std=1.3, random_state=18)[0], False
    e = make_blobs(200, 16, centers=4, cluster_std=0.8, random_state=19)[0]
    yield "relu_scaled_16d", np.maximum(e, 0.0) * rng.uniform(1.0, 10.0, 16), True
    yield "uniform_noise_3d", np.vstack([
        make_blobs(150, 3, centers=3, cluster_std=0.4, random_state=20)[0],
        rng.uniform(-10, 10, (40, 3)),
    ]), False


def normalize(x):
    scale = np.abs(x).max(axis=0)
    scale[scale == 0] = 1
    return (x / scale).astype(np.float32)


def leaf_labels(mst):
    tree = condense_tree(label(mst), MIN_CLUSTER_SIZE)
    return get_clusters(tree, compute_stability(tree), "leaf", False, False, 0.0, 0, float("inf"))[0]


def same_partition(a, b):
    return adjusted_rand_score(a, b) == 1.0 and np.array_equal(a == -1, b == -1)


def exact_mst(x):
    return mst_linkage_core(mutual_reachability(squareform(pdist(x)), MIN_SAMPLES))


def index_tie_labels(mst):
    lo = np.minimum(mst[:, 0], mst[:, 1])
    hi = np.maximum(mst[:, 0], mst[:, 1])
    return leaf_labels(mst[np.lexsort((hi, lo, mst[:, 2]))])


def tie_robust(mst, reference):
    rng = np.random.default_rng(0)
    if not same_partition(reference, index_tie_labels(mst)):
        return False
    for _ in range(TIE_TRIALS):
        if not same_partition(reference, leaf_labels(mst[np.lexsort((rng.random(len(mst)), mst[:, 2]))])):
            return False
    return True


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, raw, norm in datasets():
        raw = raw.astype(np.float32)
        pts = normalize(raw) if norm else raw
        x = pts.astype(np.float64)
        kw = dict(min_cluster_size=MIN_CLUSTER_SIZE, cluster_selection_method="leaf")
        generic = hdbscan.HDBSCAN(min_samples=MIN_SAMPLES, algorithm="generic", **kw).fit(x).labels_
        prims = hdbscan.HDBSCAN(min_samples=MIN_SAMPLES, algorithm="prims_kdtree", **kw).fit(x).labels_
        # scikit-learn counts the point itself among its min_samples neighbours
        skl = HDBSCAN(min_samples=MIN_SAMPLES + 1, algorithm="kd_tree", **kw).fit(x).labels_
        agree = all(same_partition(generic, other) for other in (prims, skl))
        mst = exact_mst(x)
        robust = tie_robust(mst, generic)
        labels = generic if robust else index_tie_labels(mst)
        n_clusters = int(labels.max()) + 1
        print(
            f"{name}: n={len(x)} d={x.shape[1]} clusters={n_clusters} "
            f"noise={(labels == -1).sum()} agree={agree} tie_robust={robust}"
        )
        if not agree or n_clusters < 2:
            continue
        doc = {
            "name": name,
            "normalize": bool(norm),
            "min_cluster_size": MIN_CLUSTER_SIZE,
            "min_samples": MIN_SAMPLES,
            "points": [[float(v) for v in row] for row in raw],
            "tie_order": "reference" if robust else "index",
            "labels": [int(v) for v in labels],
        }
        (out / f"{name}.json").write_text(json.dumps(doc) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
