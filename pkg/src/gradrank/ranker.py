"""MatchPyramid-style scorer: convolutions over the interaction matrix,
adaptive max-pooling to a fixed grid and a small MLP head.

Everything is float64 numpy with hand-written backpropagation. A forward
pass returns an :class:`ActivationCache`; the cache is what the Grad-CAM
code and the training loop differentiate through.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DivergenceError, FormatError, ShapeError, StaleCacheError
from .interaction import build_interaction_matrix

log = logging.getLogger(__name__)

MAGIC = b"GRNK"
FORMAT_VERSION = 1
PADDINGS = ("same", "valid")


@dataclass(frozen=True)
class RankerConfig:
    conv_layers: tuple[tuple[int, int, int], ...] = ((3, 3, 8), (3, 3, 16))
    pool_out: tuple[int, int] = (4, 8)
    mlp_hidden: tuple[int, ...] = (32,)
    seed: int = 0
    padding: str = "same"

    def __post_init__(self):
        object.__setattr__(self, "conv_layers", tuple(tuple(int(x) for x in layer) for layer in self.conv_layers))
        object.__setattr__(self, "pool_out", tuple(int(x) for x in self.pool_out))
        object.__setattr__(self, "mlp_hidden", tuple(int(x) for x in self.mlp_hidden))
        if not self.conv_layers:
            raise ConfigError("at least one convolutional layer is required")
        for layer in self.conv_layers:
            if len(layer) != 3 or min(layer) < 1:
                raise ConfigError(f"conv layer must be (kernel_h, kernel_w, out_channels) >= 1, got {layer}")
        if len(self.pool_out) != 2 or min(self.pool_out) < 1:
            raise ConfigError(f"pool_out must be two positive sizes, got {self.pool_out}")
        if any(h < 1 for h in self.mlp_hidden):
            raise ConfigError(f"hidden widths must be positive, got {self.mlp_hidden}")
        if self.padding not in PADDINGS:
            raise ConfigError(f"padding must be one of {PADDINGS}, got {self.padding!r}")

    def to_dict(self) -> dict:
        return {
            "conv_layers": [list(layer) for layer in self.conv_layers],
            "pool_out": list(self.pool_out),
            "mlp_hidden": list(self.mlp_hidden),
            "seed": self.seed,
            "padding": self.padding,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RankerConfig:
        try:
            return cls(
                conv_layers=tuple(tuple(layer) for layer in data["conv_layers"]),
                pool_out=tuple(data["pool_out"]),
                mlp_hidden=tuple(data["mlp_hidden"]),
                seed=int(data["seed"]),
                padding=data.get("padding", "same"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad config: {exc}") from None

    def parameter_shapes(self) -> dict[str, tuple[int, ...]]:
        """Shapes of every parameter, in serialization order."""
        shapes = {}
        c_in = 1
        for i, (kh, kw, c_out) in enumerate(self.conv_layers):
            shapes[f"conv{i}.weight"] = (c_out, c_in, kh, kw)
            shapes[f"conv{i}.bias"] = (c_out,)
            c_in = c_out
        width = c_in * self.pool_out[0] * self.pool_out[1]
        for i, out in enumerate((*self.mlp_hidden, 1)):
            shapes[f"mlp{i}.weight"] = (out, width)
            shapes[f"mlp{i}.bias"] = (out,)
            width = out
        return shapes


@dataclass
class RankerModel:
    config: RankerConfig
    params: dict[str, np.ndarray]

    def __post_init__(self):
        expected = self.config.parameter_shapes()
        if list(self.params) != list(expected):
            raise ConfigError(f"parameter names {list(self.params)} do not match config {list(expected)}")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ConfigError(f"{name} has shape {self.params[name].shape}, expected {shape}")

    @property
    def n_conv(self) -> int:
        return len(self.config.conv_layers)

    @property
    def n_mlp(self) -> int:
        return len(self.config.mlp_hidden) + 1

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def fingerprint(self) -> bytes:
        h = hashlib.blake2b(digest_size=16)
        for p in self.params.values():
            h.update(np.ascontiguousarray(p).tobytes())
        return h.digest()

    def copy(self) -> RankerModel:
        return RankerModel(self.config, {k: v.copy() for k, v in self.params.items()})

    def score(self, M) -> float:
        return forward(self, M)[0]

    def score_pair(self, query, doc, emb) -> float:
        return forward(self, build_interaction_matrix(query, doc, emb))[0]


def init_model(config: RankerConfig) -> RankerModel:
    """Glorot-uniform weights and zero biases, seeded by ``config.seed``."""
    if not isinstance(config, RankerConfig):
        raise ConfigError(f"expected RankerConfig, got {type(config).__name__}")
    rng = np.random.default_rng(config.seed)
    params = {}
    for name, shape in config.parameter_shapes().items():
        if name.endswith(".bias"):
            params[name] = np.zeros(shape)
            continue
        if len(shape) == 4:
            c_out, c_in, kh, kw = shape
            fan_in, fan_out = c_in * kh * kw, c_out * kh * kw
        else:
            fan_out, fan_in = shape
        s = math.sqrt(6.0 / (fan_in + fan_out))
        params[name] = rng.uniform(-s, s, size=shape)
    return RankerModel(config, params)


# -- building blocks --------------------------------------------------------

def _pad_amounts(kh, kw, padding):
    if padding == "valid":
        return (0, 0), (0, 0)
    return ((kh - 1) // 2, kh - 1 - (kh - 1) // 2), ((kw - 1) // 2, kw - 1 - (kw - 1) // 2)


def _conv_forward(x, weight, bias, padding):
    """Stride-1 cross-correlation. ``x`` is (C_in, H, W)."""
    c_out, c_in, kh, kw = weight.shape
    ph, pw = _pad_amounts(kh, kw, padding)
    xp = np.pad(x, ((0, 0), ph, pw)) if padding == "same" else x
    if xp.shape[1] < kh or xp.shape[2] < kw:
        raise ShapeError(f"input {x.shape[1:]} is smaller than kernel {(kh, kw)}")
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))  # (C_in, H', W', kh, kw)
    h_out, w_out = win.shape[1], win.shape[2]
    cols = win.transpose(0, 3, 4, 1, 2).reshape(c_in * kh * kw, h_out * w_out)
    y = weight.reshape(c_out, -1) @ cols + bias[:, None]
    return y.reshape(c_out, h_out, w_out), cols


def _conv_backward(dy, x_shape, cols, weight, padding):
    c_out, c_in, kh, kw = weight.shape
    h_out, w_out = dy.shape[1:]
    dy2 = dy.reshape(c_out, -1)
    dweight = (dy2 @ cols.T).reshape(weight.shape)
    dbias = dy2.sum(axis=1)
    dcols = (weight.reshape(c_out, -1).T @ dy2).reshape(c_in, kh, kw, h_out, w_out)
    ph, pw = _pad_amounts(kh, kw, padding)
    dxp = np.zeros((c_in, x_shape[1] + sum(ph), x_shape[2] + sum(pw)))
    for i in range(kh):
        for j in range(kw):
            dxp[:, i:i + h_out, j:j + w_out] += dcols[:, i, j]
    dx = dxp[:, ph[0]:ph[0] + x_shape[1], pw[0]:pw[0] + x_shape[2]]
    return dx, dweight, dbias


def adaptive_bins(n_in: int, n_out: int) -> list[tuple[int, int]]:
    """Half-open bin edges covering ``range(n_in)`` with ``n_out`` bins.

    Bin ``i`` spans ``[floor(i*n_in/n_out), ceil((i+1)*n_in/n_out))``; bins
    overlap when ``n_in`` is not a multiple of ``n_out`` and repeat
    elements when ``n_in < n_out``.
    """
    return [((i * n_in) // n_out, -((-(i + 1) * n_in) // n_out)) for i in range(n_out)]


def adaptive_max_pool(a: np.ndarray, out: tuple[int, int]):
    """Max over each adaptive bin of the (K, H, W) array ``a``.

    Returns the pooled (K, p_h, p_w) values and, for each output cell, the
    flat (row-major) index into ``a[k]`` of the first maximal element.
    """
    k, h, w = a.shape
    rows, cols = adaptive_bins(h, out[0]), adaptive_bins(w, out[1])
    pooled = np.empty((k, out[0], out[1]))
    argmax = np.empty((k, out[0], out[1]), dtype=np.int64)
    for i, (r0, r1) in enumerate(rows):
        for j, (c0, c1) in enumerate(cols):
            block = a[:, r0:r1, c0:c1].reshape(k, -1)
            idx = block.argmax(axis=1)
            pooled[:, i, j] = block[np.arange(k), idx]
            br, bc = np.divmod(idx, c1 - c0)
            argmax[:, i, j] = (r0 + br) * w + (c0 + bc)
    return pooled, argmax


def _relu(x):
    return np.maximum(x, 0.0)


# -- forward / backward -----------------------------------------------------

@dataclass
class ActivationCache:
    """Everything recorded by one forward pass over one interaction matrix."""

    input: np.ndarray
    conv_inputs: list = field(default_factory=list)
    conv_cols: list = field(default_factory=list)
    conv_pre: list = field(default_factory=list)
    feature_maps: np.ndarray = None  # post-ReLU output of the last conv layer
    pool_argmax: np.ndarray = None
    mlp_inputs: list = field(default_factory=list)
    mlp_pre: list = field(default_factory=list)
    score: float = 0.0
    fingerprint: bytes = b""

    @property
    def last_feature_maps(self) -> np.ndarray:
        return self.feature_maps


def _as_matrix(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ShapeError(f"interaction matrix must be 2-D, got shape {M.shape}")
    return M


def _check_input(model, M):
    kh, kw, _ = model.config.conv_layers[0]
    if M.shape[0] < kh or M.shape[1] < kw:
        raise ShapeError(f"interaction matrix {M.shape} is smaller than the first kernel {(kh, kw)}")


def _head_forward(model, feature_maps, cache=None):
    pooled, argmax = adaptive_max_pool(feature_maps, model.config.pool_out)
    h = pooled.reshape(-1)
    if cache is not None:
        cache.pool_argmax = argmax
    for i in range(model.n_mlp):
        if cache is not None:
            cache.mlp_inputs.append(h)
        z = model.params[f"mlp{i}.weight"] @ h + model.params[f"mlp{i}.bias"]
        if cache is not None:
            cache.mlp_pre.append(z)
        h = _relu(z) if i < model.n_mlp - 1 else z
    return float(h[0])


def _forward(model, M):
    cache = ActivationCache(input=M)
    x = M[None, :, :]
    for i in range(model.n_conv):
        cache.conv_inputs.append(x)
        z, cols = _conv_forward(x, model.params[f"conv{i}.weight"], model.params[f"conv{i}.bias"],
                                model.config.padding)
        cache.conv_cols.append(cols)
        cache.conv_pre.append(z)
        x = _relu(z)
    cache.feature_maps = x
    cache.score = _head_forward(model, x, cache)
    return cache.score, cache


def forward(model: RankerModel, M) -> tuple[float, ActivationCache]:
    """Score one interaction matrix; returns ``(score, cache)``."""
    M = _as_matrix(M)
    _check_input(model, M)
    score, cache = _forward(model, M)
    if not math.isfinite(score):
        raise DivergenceError(f"non-finite score {score}")
    cache.fingerprint = model.fingerprint()
    return score, cache


def score_from_feature_maps(model: RankerModel, feature_maps) -> float:
    """Run only the pooling + MLP head on given last-layer feature maps."""
    return _head_forward(model, np.asarray(feature_maps, dtype=np.float64))


def _head_backward(model, cache, grads=None, d_score=1.0):
    dh = np.array([d_score])
    for i in reversed(range(model.n_mlp)):
        if i < model.n_mlp - 1:
            dh = dh * (cache.mlp_pre[i] > 0)
        if grads is not None:
            grads[f"mlp{i}.weight"] = np.outer(dh, cache.mlp_inputs[i])
            grads[f"mlp{i}.bias"] = dh
        dh = model.params[f"mlp{i}.weight"].T @ dh
    dpooled = dh.reshape(cache.pool_argmax.shape)
    k, h, w = cache.feature_maps.shape
    dmaps = np.zeros((k, h * w))
    rows = np.broadcast_to(np.arange(k)[:, None, None], cache.pool_argmax.shape)
    np.add.at(dmaps, (rows, cache.pool_argmax), dpooled)
    return dmaps.reshape(k, h, w)


def _check_fresh(model, cache):
    if cache.fingerprint != model.fingerprint():
        raise StaleCacheError("model parameters changed since this cache was produced")


def backward_to_feature_maps(model: RankerModel, cache: ActivationCache) -> np.ndarray:
    """Exact gradient of the score with respect to the last feature maps.

    Max-pooling sends each pooled cell's gradient to its recorded argmax;
    overlapping bins accumulate.
    """
    _check_fresh(model, cache)
    return _head_backward(model, cache)


def _full_backward(model, cache, d_score=1.0):
    grads = {}
    dx = _head_backward(model, cache, grads, d_score)
    for i in reversed(range(model.n_conv)):
        dz = dx * (cache.conv_pre[i] > 0)
        dx, grads[f"conv{i}.weight"], grads[f"conv{i}.bias"] = _conv_backward(
            dz, cache.conv_inputs[i].shape, cache.conv_cols[i],
            model.params[f"conv{i}.weight"], model.config.padding)
    return grads


def parameter_gradients(model: RankerModel, cache: ActivationCache) -> dict[str, np.ndarray]:
    """Gradient of the score with respect to every parameter."""
    _check_fresh(model, cache)
    grads = _full_backward(model, cache)
    return {name: grads[name] for name in model.params}


# -- training ---------------------------------------------------------------

def _pair_matrices(dataset, emb):
    out = []
    for query, pos, neg in dataset.pairs():
        out.append((build_interaction_matrix(query, pos, emb), build_interaction_matrix(query, neg, emb)))
    return out


def train(model: RankerModel, data, emb, epochs: int = 10, lr: float = 0.05, margin: float = 1.0,
          seed: int | None = None, callback=None) -> RankerModel:
    """Pairwise hinge-loss SGD, one (query, positive, negative) triple per step.

    The loss ``max(0, margin - S(q, d+) + S(q, d-))`` is summed over every
    triple in ``data``; triples are visited in a seeded shuffled order each
    epoch. ``model`` is updated in place and returned. ``callback(epoch,
    mean_loss)`` is called after each epoch.
    """
    if any(len(rec.negatives) == 0 for rec in data):
        raise FormatError("every training record needs at least one negative document")
    pairs = _pair_matrices(data, emb)
    for M_pos, M_neg in pairs:
        _check_input(model, M_pos)
        _check_input(model, M_neg)
    rng = np.random.default_rng(model.config.seed if seed is None else seed)
    history = []
    for epoch in range(epochs):
        total = 0.0
        for idx in rng.permutation(len(pairs)):
            M_pos, M_neg = pairs[idx]
            s_pos, c_pos = _forward(model, M_pos)
            s_neg, c_neg = _forward(model, M_neg)
            loss = margin - s_pos + s_neg
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            if loss <= 0.0:
                continue
            total += loss
            g_pos = _full_backward(model, c_pos, -1.0)
            g_neg = _full_backward(model, c_neg, 1.0)
            if lr != 0.0:
                for name, p in model.params.items():
                    p -= lr * (g_pos[name] + g_neg[name])
        mean = total / max(len(pairs), 1)
        if not math.isfinite(mean):
            raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
        history.append(mean)
        log.info("epoch %d loss %.6f", epoch, mean)
        if callback is not None:
            callback(epoch, mean)
    return model


def pairwise_accuracy(model: RankerModel, data, emb) -> float:
    """Fraction of (query, positive, negative) triples ranked correctly."""
    wins = n = 0
    for query, pos, neg in data.pairs():
        wins += model.score_pair(query, pos, emb) > model.score_pair(query, neg, emb)
        n += 1
    return wins / n if n else float("nan")


# -- serialization ----------------------------------------------------------

def model_to_bytes(model: RankerModel) -> bytes:
    cfg = json.dumps(model.config.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION), struct.pack("<I", len(cfg)), cfg]
    for p in model.params.values():
        parts.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
    return b"".join(parts)


def model_from_bytes(blob: bytes) -> RankerModel:
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise FormatError("not a gradrank model file (bad magic bytes)")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported model format version {version}")
    (n_cfg,) = struct.unpack_from("<I", blob, 8)
    if len(blob) < 12 + n_cfg:
        raise FormatError("truncated model file (config)")
    try:
        config = RankerConfig.from_dict(json.loads(blob[12:12 + n_cfg].decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError, ConfigError) as exc:
        raise FormatError(f"unreadable model config: {exc}") from None
    offset = 12 + n_cfg
    params = {}
    for name, shape in config.parameter_shapes().items():
        nbytes = 8 * math.prod(shape)
        if len(blob) < offset + nbytes:
            raise FormatError(f"truncated model file ({name})")
        params[name] = np.frombuffer(blob, dtype="<f8", count=math.prod(shape),
                                     offset=offset).astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(blob):
        raise FormatError(f"{len(blob) - offset} unexpected trailing bytes in model file")
    return RankerModel(config, params)


def save_model(model: RankerModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path) -> RankerModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
