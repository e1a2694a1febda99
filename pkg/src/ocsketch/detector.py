"""Embedding + GMM novelty detectors: train, score, threshold, serialize.

Training embeds the normal data, picks the component count (mode-seeking
clustering or a fixed k), and fits the mixture; scoring is the mixture
log-density of the embedded query, so higher means more normal. Model files
are little-endian float64 regardless of host.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import quickshift as qs_mod
from .embedding import KJL, NYSTROM, EmbeddingModel, embed, embedding_bytes, fit_kjl, fit_nystrom
from .flows import percentile
from .gmm import GmmModel, fit_em, gmm_bytes, log_pdf
from .kernel import quantile_bandwidth
from .ocsvm import OcsvmModel, ocsvm_bytes

NORMAL = "NORMAL"
NOVEL = "NOVEL"

DETECTOR_MAGIC = b"OCKJ"
OCSVM_MAGIC = b"OSVM"
FORMAT_VERSION = 1

_KIND_CODES = {NYSTROM: 0, KJL: 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}

AUTO = "auto"


@dataclass
class DetectorConfig:
    kind: str = KJL
    m: int = 100
    d: int = 5
    h: float | None = None  # explicit bandwidth wins over the quantile
    h_quantile: float = 0.25
    k: int | str = AUTO  # AUTO uses mode-seeking clustering
    qs: qs_mod.QsConfig = field(default_factory=qs_mod.QsConfig)
    seed: int | None = None


@dataclass
class DetectorModel:
    embedding: EmbeddingModel
    gmm: GmmModel
    threshold: float | None = None
    feature_kind: str | None = None

    @property
    def input_dim(self):
        return self.embedding.input_dim


def train_detector(X_normal, config):
    """Train an embedding+GMM detector on normal data.

    Resolves the bandwidth (explicit or distance-quantile), fits the chosen
    embedding, embeds the training data, picks k (clustering or fixed), and
    fits the mixture. The returned model has no threshold yet.
    """
    X = np.atleast_2d(np.asarray(X_normal, dtype=float))
    h = config.h if config.h is not None else quantile_bandwidth(X, config.h_quantile)
    if config.kind == NYSTROM:
        emb = fit_nystrom(X, config.m, config.d, h, seed=config.seed)
    elif config.kind == KJL:
        emb = fit_kjl(X, config.m, config.d, h, seed=config.seed)
    else:
        raise ValueError(f"unknown embedding kind {config.kind!r}")
    Z = embed(emb, X)
    if config.k == AUTO:
        clustering = qs_mod.auto_k(Z, config.qs)
        model = fit_em(Z, clustering.k, init=clustering.gmm_init(), seed=config.seed)
    else:
        model = fit_em(Z, int(config.k), seed=config.seed)
    return DetectorModel(emb, model)


def detect_scores(model, X):
    """Batch log-density scores; higher = more normal."""
    return log_pdf(model.gmm, embed(model.embedding, X))


def detect_score(model, x):
    """Score a single D-vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("detect_score takes a single vector; use detect_scores")
    return float(detect_scores(model, x)[0])


def choose_threshold(model, X_normal, target_fpr=0.05):
    """Threshold at the nearest-rank target_fpr quantile of normal scores.

    Classification is strict (score < t is novel), so at most a target_fpr
    fraction of the calibration data is flagged, and target_fpr = 0 flags
    nothing.
    """
    X = np.atleast_2d(np.asarray(X_normal, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty calibration data")
    if not 0 <= target_fpr <= 1:
        raise ValueError(f"target_fpr must be in [0, 1], got {target_fpr}")
    scores = detect_scores(model, X)
    if target_fpr == 0:
        return float(np.min(scores))
    return float(percentile(scores, target_fpr))


def classify(model, x):
    """NOVEL iff the score falls strictly below the model threshold."""
    if model.threshold is None:
        raise ValueError("model has no threshold; call choose_threshold first")
    return NOVEL if detect_score(model, x) < model.threshold else NORMAL


def detector_bytes(model):
    """Exact serialized file size in bytes."""
    size = embedding_bytes(model.embedding) + gmm_bytes(model.gmm)
    if model.threshold is not None:
        size += 8
    return size


def _floats(a):
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def serialize(model):
    """Serialize a detector model; exact inverse of deserialize."""
    emb, mix = model.embedding, model.gmm
    m, d, D, k = emb.m, emb.d, emb.input_dim, mix.k
    parts = [
        DETECTOR_MAGIC,
        struct.pack("<BB", FORMAT_VERSION, _KIND_CODES[emb.kind]),
        struct.pack("<4I", m, d, D, k),
        _floats(emb.landmarks),
        _floats(emb.P),
        struct.pack("<d", emb.h),
        _floats(mix.pi),
        _floats(mix.mu),
        _floats(mix.sigma),
    ]
    if model.threshold is not None:
        parts.append(struct.pack("<d", model.threshold))
    return b"".join(parts)


class _Reader:
    def __init__(self, buf, offset):
        self.buf = buf
        self.off = offset

    def floats(self, count):
        need = 8 * count
        if self.off + need > len(self.buf):
            raise ValueError(f"truncated payload at byte {self.off}")
        out = np.frombuffer(self.buf, dtype="<f8", count=count, offset=self.off).copy()
        self.off += need
        return out

    def remaining(self):
        return len(self.buf) - self.off


def deserialize(data):
    """Restore a detector model from bytes produced by serialize."""
    if len(data) < 22 or data[:4] != DETECTOR_MAGIC:
        raise ValueError("bad magic: not a detector model file")
    version, kind_code = struct.unpack("<BB", data[4:6])
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {version}")
    if kind_code not in _KIND_NAMES:
        raise ValueError(f"unknown embedding kind code {kind_code}")
    m, d, D, k = struct.unpack("<4I", data[6:22])
    r = _Reader(data, 22)
    landmarks = r.floats(m * D).reshape(m, D)
    P = r.floats(d * m).reshape(d, m)
    h = float(r.floats(1)[0])
    pi = r.floats(k)
    mu = r.floats(k * d).reshape(k, d)
    sigma = r.floats(k * d * d).reshape(k, d, d)
    threshold = None
    if r.remaining() >= 8:
        threshold = float(r.floats(1)[0])
    if r.remaining() != 0:
        raise ValueError(f"trailing bytes after payload: {r.remaining()}")
    emb = EmbeddingModel(_KIND_NAMES[kind_code], landmarks, P, h)
    mix = GmmModel(pi, mu, sigma, reg=0.0)
    return DetectorModel(emb, mix, threshold)


def serialize_ocsvm(model):
    """Serialize an OCSVM model; exact inverse of deserialize_ocsvm."""
    n_sv, D = model.support_vectors.shape
    return b"".join([
        OCSVM_MAGIC,
        struct.pack("<B", FORMAT_VERSION),
        struct.pack("<2I", n_sv, D),
        _floats(model.support_vectors),
        _floats(model.alpha),
        struct.pack("<dd", model.rho, model.h),
    ])


def deserialize_ocsvm(data):
    """Restore an OCSVM model from bytes produced by serialize_ocsvm."""
    if len(data) < 13 or data[:4] != OCSVM_MAGIC:
        raise ValueError("bad magic: not an OCSVM model file")
    version = data[4]
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {version}")
    n_sv, D = struct.unpack("<2I", data[5:13])
    r = _Reader(data, 13)
    sv = r.floats(n_sv * D).reshape(n_sv, D)
    alpha = r.floats(n_sv)
    rho, h = r.floats(2)
    if r.remaining() != 0:
        raise ValueError(f"trailing bytes after payload: {r.remaining()}")
    return OcsvmModel(sv, alpha, float(rho), float(h), nu=float("nan"))


def load_model(data):
    """Dispatch on magic: returns a DetectorModel or an OcsvmModel."""
    if data[:4] == DETECTOR_MAGIC:
        return deserialize(data)
    if data[:4] == OCSVM_MAGIC:
        return deserialize_ocsvm(data)
    raise ValueError("unrecognized model file magic")


def model_bytes(model):
    """Exact file size for either model kind."""
    if isinstance(model, OcsvmModel):
        return ocsvm_bytes(model)
    return detector_bytes(model)
