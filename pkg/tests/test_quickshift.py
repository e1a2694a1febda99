import numpy as np
import pytest

from ocsketch.evaluate import synth_blobs
from ocsketch.quickshift import (
    NOISE,
    QsConfig,
    auto_k,
    cluster_cores,
    knn_log_density,
    knn_table,
    quickshift_assign,
    select_components,
)


def two_blob_1d(seed=0, n_per=50, gap=100.0):
    rng = np.random.default_rng(seed)
    pts = np.concatenate([rng.standard_normal(n_per), gap + rng.standard_normal(n_per)])
    return pts.reshape(-1, 1)


def test_knn_log_density_by_hand():
    X = np.array([[0.0], [1.0], [3.0]])
    dens = knn_log_density(X, 1)
    assert np.allclose(dens, [0.0, 0.0, -np.log(2)], atol=1e-12)


def test_knn_log_density_uniform_grid_interior():
    X = np.arange(20.0).reshape(-1, 1)
    dens = knn_log_density(X, 2)
    interior = dens[2:-2]
    assert np.allclose(interior, interior[0])


def test_knn_log_density_duplicate_fallback():
    X = np.array([[0.0], [0.0], [1.0], [2.0]])
    dens = knn_log_density(X, 1)
    assert np.all(np.isfinite(dens))
    # duplicated pair uses radius 1e-3 * smallest positive -> highest density
    assert dens[0] == dens.max()


def test_knn_log_density_all_identical():
    with pytest.raises(ValueError):
        knn_log_density(np.zeros((5, 2)), 2)


def test_knn_table_tie_break_by_index():
    X = np.array([[0.0], [1.0], [-1.0], [1.0]])  # points 1 and 3 tie from 0
    nbrs, _ = knn_table(X, 3)
    assert list(nbrs[0]) == [1, 2, 3]


def test_two_blobs_two_cores():
    X = two_blob_1d()
    k_n = int(np.ceil(len(X) ** (2 / 3)))
    table = knn_table(X, k_n)
    dens = knn_log_density(X, k_n, table=table)
    cores = cluster_cores(X, dens, k_n, 0.9, table=table)
    assert len(cores) == 2


def test_single_blob_one_core():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((100, 2))
    k_n = int(np.ceil(100 ** (2 / 3)))
    dens = knn_log_density(X, k_n)
    assert len(cluster_cores(X, dens, k_n, 0.9)) == 1


def test_core_count_non_increasing_in_beta():
    for seed in range(5):
        X, _ = synth_blobs(300, 3, 2, 8.0, seed=seed)
        k_n = int(np.ceil(300 ** (2 / 3)))
        table = knn_table(X, k_n)
        dens = knn_log_density(X, k_n, table=table)
        counts = [len(cluster_cores(X, dens, k_n, b, table=table))
                  for b in (0.5, 0.9, 0.99)]
        assert counts[0] >= counts[1] >= counts[2]


def test_cores_are_disjoint():
    X, _ = synth_blobs(400, 4, 2, 6.0, seed=7)
    k_n = int(np.ceil(400 ** (2 / 3)))
    dens = knn_log_density(X, k_n)
    cores = cluster_cores(X, dens, k_n, 0.9)
    all_pts = np.concatenate(cores)
    assert len(all_pts) == len(set(all_pts.tolist()))


def test_assign_labels_partition():
    X = two_blob_1d(seed=2)
    k_n = int(np.ceil(len(X) ** (2 / 3)))
    table = knn_table(X, k_n)
    dens = knn_log_density(X, k_n, table=table)
    cores = cluster_cores(X, dens, k_n, 0.9, table=table)
    labels = quickshift_assign(X, dens, cores, k_n, table=table)
    assert np.all(labels >= 0)
    # every point in the right half joins the right blob's core
    assert len(np.unique(labels[:50])) == 1
    assert len(np.unique(labels[50:])) == 1
    assert labels[0] != labels[-1]


def test_assign_core_points_keep_label():
    X = two_blob_1d(seed=3)
    k_n = 20
    dens = knn_log_density(X, k_n)
    cores = cluster_cores(X, dens, k_n, 0.9)
    labels = quickshift_assign(X, dens, cores, k_n)
    for cid, members in enumerate(cores):
        assert np.all(labels[members] == cid)


def test_assign_single_hop_to_adjacent_core():
    # densities increase towards 0; point 3 hops to its denser neighbor
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    dens = np.array([3.0, 2.0, 1.0, 0.0])
    cores = [np.array([0, 1, 2])]
    labels = quickshift_assign(X, dens, cores, 2)
    assert labels[3] == 0


def test_select_components_prefix_by_hand():
    # sizes {960, 30, 10}: the 960 cluster alone covers 95% of n=1000
    labels = np.array([0] * 960 + [1] * 30 + [2] * 10)
    rng = np.random.default_rng(4)
    X = rng.standard_normal((1000, 2))
    clustering = select_components(labels, X, coverage=0.95, cap=20)
    assert clustering.k == 1
    assert clustering.clusters[0].size == 960
    assert np.sum(clustering.labels == NOISE) == 40


def test_select_components_even_split():
    labels = np.array([0] * 500 + [1] * 500)
    X = np.random.default_rng(5).standard_normal((1000, 3))
    assert select_components(labels, X).k == 2


def test_select_components_cap():
    labels = np.repeat(np.arange(25), 10)
    X = np.random.default_rng(6).standard_normal((250, 2))
    clustering = select_components(labels, X, coverage=0.95, cap=20)
    assert clustering.k == 20


def test_select_components_init_weights_normalized():
    labels = np.array([0] * 60 + [1] * 30 + [2] * 10)
    X = np.random.default_rng(7).standard_normal((100, 2))
    clustering = select_components(labels, X, coverage=0.85, cap=20)
    pi, mu, sigma = clustering.gmm_init()
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert mu.shape == (clustering.k, 2)
    for S in sigma:
        assert np.array_equal(S, S.T)
        assert np.linalg.eigvalsh(S).min() > 0


def test_auto_k_three_blobs():
    X, y = synth_blobs(900, 3, 2, 10.0, seed=12)
    clustering = auto_k(X)
    assert clustering.k == 3
    _, mu, _ = clustering.gmm_init()
    centers = np.array([X[y == i].mean(axis=0) for i in range(3)])
    for m in mu:
        assert np.min(np.linalg.norm(centers - m, axis=1)) < 0.5


def test_auto_k_single_blob():
    X, _ = synth_blobs(200, 1, 3, 5.0, seed=13)
    assert auto_k(X).k == 1


def test_auto_k_deterministic():
    X, _ = synth_blobs(300, 2, 2, 8.0, seed=14)
    a = auto_k(X)
    b = auto_k(X)
    assert np.array_equal(a.labels, b.labels)
    assert a.k == b.k


def test_k_search_grid_constant():
    # grid used when tuning k instead of the automatic choice
    from ocsketch.evaluate import K_GRID

    assert K_GRID == (1, 4, 6, 8, 10, 12, 14, 16, 18, 20)


def test_qsconfig_defaults():
    cfg = QsConfig()
    assert cfg.beta == 0.9
    assert cfg.coverage == 0.95
    assert cfg.max_clusters == 20
    assert cfg.k_neighbors is None  # resolved to ceil(n^(2/3)) at run time
