import numpy as np
import pytest

from ocsketch.detector import (
    AUTO,
    NORMAL,
    NOVEL,
    DetectorConfig,
    choose_threshold,
    classify,
    deserialize,
    deserialize_ocsvm,
    detect_score,
    detect_scores,
    detector_bytes,
    load_model,
    serialize,
    serialize_ocsvm,
    train_detector,
)
from ocsketch.embedding import EmbeddingModel, embed
from ocsketch.evaluate import synth_cluster_in_cluster
from ocsketch.gmm import GmmModel, fit_em, log_pdf
from ocsketch.ocsvm import train_ocsvm

from ocsketch.detector import DetectorModel


def ring_data(n=1200, seed=0):
    X, y = synth_cluster_in_cluster(2 * n, seed=seed)
    return X[y == 0][:n], X[y == 1][:n]


def small_config(**kw):
    defaults = dict(kind="kjl", m=50, d=4, h_quantile=0.5, k=AUTO, seed=0)
    defaults.update(kw)
    return DetectorConfig(**defaults)


def test_train_fixed_one_is_single_gaussian():
    Xn, _ = ring_data(300)
    cfg = small_config(k=1)
    model = train_detector(Xn, cfg)
    Z = embed(model.embedding, Xn)
    direct = fit_em(Z, 1, seed=0)
    assert np.allclose(model.gmm.mu, direct.mu, atol=1e-10)
    assert np.allclose(model.gmm.sigma, direct.sigma, atol=1e-10)


def test_train_deterministic_model_file():
    Xn, _ = ring_data(400)
    cfg = small_config()
    a = serialize(train_detector(Xn, cfg))
    b = serialize(train_detector(Xn, cfg))
    assert a == b


def test_train_explicit_bandwidth_wins():
    Xn, _ = ring_data(200)
    model = train_detector(Xn, small_config(h=2.5, h_quantile=0.1, k=1))
    assert model.embedding.h == 2.5


def test_train_nystrom_kind():
    Xn, _ = ring_data(200)
    model = train_detector(Xn, small_config(kind="nystrom", k=2))
    assert model.embedding.kind == "nystrom"
    with pytest.raises(ValueError):
        train_detector(Xn, small_config(kind="rff"))


def test_detect_score_composition():
    Xn, Xv = ring_data(300)
    model = train_detector(Xn, small_config(k=2))
    x = Xv[0]
    expected = log_pdf(model.gmm, embed(model.embedding, [x])[0])
    assert detect_score(model, x) == pytest.approx(expected, abs=1e-12)


def test_far_point_scores_like_origin_embedding():
    Xn, _ = ring_data(300)
    model = train_detector(Xn, small_config(k=2))
    far = np.full(2, 1e7)
    expected = log_pdf(model.gmm, np.zeros(model.gmm.d))
    assert detect_score(model, far) == pytest.approx(expected, abs=1e-9)


def test_batch_scores_match_single():
    Xn, Xv = ring_data(250)
    model = train_detector(Xn, small_config(k=1))
    batch = detect_scores(model, Xv[:20])
    singles = [detect_score(model, x) for x in Xv[:20]]
    assert np.allclose(batch, singles, rtol=1e-12, atol=1e-14)


def test_choose_threshold_rank_arithmetic():
    Xn, _ = ring_data(300)
    model = train_detector(Xn, small_config(k=1))
    scores = detect_scores(model, Xn)
    # distinct scores: the 0.05 quantile leaves strictly fewer than 5% below
    t = choose_threshold(model, Xn, 0.05)
    below = np.sum(scores < t)
    assert below <= 0.05 * len(Xn)
    assert t == np.sort(scores)[int(np.ceil(0.05 * len(Xn))) - 1]


def test_choose_threshold_hand_ranks():
    # 100 distinct scores at target 0.05: t is the 5th smallest, 4 flagged
    Xn, _ = ring_data(100)
    model = train_detector(Xn, small_config(k=1, m=40))
    scores = detect_scores(model, Xn)
    assert len(np.unique(scores)) == 100
    t = choose_threshold(model, Xn, 0.05)
    assert t == np.sort(scores)[4]
    assert np.sum(scores < t) == 4


def test_choose_threshold_all_equal_scores():
    Xn, _ = ring_data(100)
    model = train_detector(Xn, small_config(k=1, m=40))
    same = np.tile(Xn[0], (30, 1))
    t = choose_threshold(model, same, 0.2)
    assert np.sum(detect_scores(model, same) < t) == 0  # strict comparison


def test_choose_threshold_zero_fpr():
    Xn, _ = ring_data(150)
    model = train_detector(Xn, small_config(k=1))
    t = choose_threshold(model, Xn, 0.0)
    assert np.sum(detect_scores(model, Xn) < t) == 0


def test_classify_boundary_strict():
    Xn, _ = ring_data(200)
    model = train_detector(Xn, small_config(k=1))
    x = Xn[0]
    model.threshold = detect_score(model, x)
    assert classify(model, x) == NORMAL  # score == threshold
    model.threshold = np.nextafter(model.threshold, np.inf)
    assert classify(model, x) == NOVEL


def test_classify_requires_threshold():
    Xn, _ = ring_data(150)
    model = train_detector(Xn, small_config(k=1))
    with pytest.raises(ValueError):
        classify(model, Xn[0])


def test_classify_consistent_with_scores():
    Xn, Xv = ring_data(400)
    model = train_detector(Xn, small_config(k=2))
    model.threshold = choose_threshold(model, Xn, 0.05)
    pts = np.vstack([Xn[:50], Xv[:50]])
    for x in pts:
        want = NOVEL if detect_score(model, x) < model.threshold else NORMAL
        assert classify(model, x) == want


def test_serialize_roundtrip_bit_exact():
    Xn, _ = ring_data(300)
    model = train_detector(Xn, small_config(k=3))
    data = serialize(model)
    assert serialize(deserialize(data)) == data
    model.threshold = -4.5
    data_t = serialize(model)
    assert len(data_t) == len(data) + 8
    assert deserialize(data_t).threshold == -4.5


def test_serialized_size_formula():
    Xn, _ = ring_data(300)
    model = train_detector(Xn, small_config(k=3))
    m, d, D, k = 50, 4, 2, 3
    expected = 22 + 8 * (m * (D + d) + 1 + k * (1 + d + d * d))
    assert len(serialize(model)) == expected == detector_bytes(model)
    model.threshold = 1.0
    assert len(serialize(model)) == expected + 8 == detector_bytes(model)


def test_deserialize_rejects_corruption():
    Xn, _ = ring_data(200)
    data = serialize(train_detector(Xn, small_config(k=1)))
    with pytest.raises(ValueError):
        deserialize(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        deserialize(data[:-4])  # truncated payload
    bad_version = data[:4] + bytes([99]) + data[5:]
    with pytest.raises(ValueError):
        deserialize(bad_version)


def test_roundtrip_preserves_scores():
    Xn, Xv = ring_data(300)
    model = train_detector(Xn, small_config(k=2))
    restored = deserialize(serialize(model))
    assert np.array_equal(detect_scores(model, Xv[:40]),
                          detect_scores(restored, Xv[:40]))


def test_ocsvm_serialization_roundtrip():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 3))
    model = train_ocsvm(X, 1.0, nu=0.5, seed=0)
    data = serialize_ocsvm(model)
    restored = deserialize_ocsvm(data)
    assert serialize_ocsvm(restored) == data
    with pytest.raises(ValueError):
        deserialize_ocsvm(data[:-1])


def test_load_model_dispatch():
    Xn, _ = ring_data(150)
    det = train_detector(Xn, small_config(k=1))
    svm = train_ocsvm(Xn[:50], 1.0, seed=0)
    assert isinstance(load_model(serialize(det)), DetectorModel)
    assert not isinstance(load_model(serialize_ocsvm(svm)), DetectorModel)
    with pytest.raises(ValueError):
        load_model(b"ZZZZ" + b"\x00" * 40)
