"""Independent reference computations used by the test-suite.

Nothing here calls the code path it is used to check: gradients come from
finite differences of the forward pass, interpolation from the per-cell
formula, window argmaxes from exhaustive exact scans, moments from plain
Python sums and p-values from label permutations.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from gradrank import RankerConfig, forward, init_model
from gradrank.ranker import adaptive_bins

FD_EPS = 1e-4


def relative_error(a, b, floor=1e-8):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def random_config(rng) -> RankerConfig:
    n_conv = int(rng.integers(1, 3))
    layers = tuple((int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(2, 5)))
                   for _ in range(n_conv))
    pool = (int(rng.integers(1, 4)), int(rng.integers(1, 5)))
    hidden = tuple(int(rng.integers(2, 9)) for _ in range(int(rng.integers(0, 3))))
    padding = "same" if rng.random() < 0.5 else "valid"
    return RankerConfig(layers, pool, hidden, seed=int(rng.integers(1 << 30)), padding=padding)


def random_case(rng, positive_maps=True):
    """A random small model and interaction matrix it accepts.

    With ``positive_maps`` the last conv layer gets positive biases so its
    ReLU output is mostly non-zero; exact zero ties inside a pooling bin
    make the score non-differentiable there.
    """
    config = random_config(rng)
    model = init_model(config)
    for name, p in model.params.items():
        if name.endswith(".bias"):
            p[...] = rng.uniform(-0.2, 0.2, size=p.shape)
    if positive_maps:
        last = f"conv{len(config.conv_layers) - 1}.bias"
        model.params[last][...] = rng.uniform(0.5, 1.5, size=model.params[last].shape)
    shrink = sum(k[0] - 1 for k in config.conv_layers), sum(k[1] - 1 for k in config.conv_layers)
    u = int(rng.integers(4, 8)) + (shrink[0] if config.padding == "valid" else 0)
    v = int(rng.integers(13, 30)) + (shrink[1] if config.padding == "valid" else 0)
    M = rng.uniform(-1, 1, size=(u, v))
    return model, M


def near_kink(model, A, coord, eps=FD_EPS):
    """True if moving ``A[coord]`` by ``eps`` either way changes a max-pool
    winner or a hidden ReLU state, where central differences are invalid."""
    plus, minus = A.copy(), A.copy()
    plus[coord] += eps
    minus[coord] -= eps
    states = []
    for X in (A, plus, minus):
        _, pre, winners = forward_from_maps(model, X)
        states.append((winners, [tuple(z > 0) for z in pre[:-1]]))
    return not (states[0] == states[1] == states[2])


def forward_from_maps(model, A):
    """Pool + MLP written out directly.

    Returns the score, every layer's pre-activation and the pooling winners.
    """
    p_h, p_w = model.config.pool_out
    K = A.shape[0]
    pooled = np.empty((K, p_h, p_w))
    winners = []
    for a, (r0, r1) in enumerate(adaptive_bins(A.shape[1], p_h)):
        for b, (c0, c1) in enumerate(adaptive_bins(A.shape[2], p_w)):
            for k in range(K):
                block = A[k, r0:r1, c0:c1]
                best = max(block.ravel())
                pooled[k, a, b] = best
                winners.append(tuple(int(x) for x in np.argwhere(block == best)[0]))
    h = pooled.reshape(-1)
    pre = []
    n = len(model.config.mlp_hidden) + 1
    for layer in range(n):
        z = model.params[f"mlp{layer}.weight"] @ h + model.params[f"mlp{layer}.bias"]
        pre.append(z)
        h = np.maximum(z, 0) if layer < n - 1 else z
    return float(h[0]), pre, winners


def fd_gradient(model, A, coord, eps=FD_EPS):
    """Central difference of the score with respect to one feature-map entry."""
    plus, minus = A.copy(), A.copy()
    plus[coord] += eps
    minus[coord] -= eps
    return (forward_from_maps(model, plus)[0] - forward_from_maps(model, minus)[0]) / (2 * eps)


def fd_all_gradients(model, A, eps=FD_EPS):
    grads = np.zeros_like(A)
    for coord in np.ndindex(*A.shape):
        grads[coord] = fd_gradient(model, A, coord, eps)
    return grads


def fd_localization(model, M, eps=FD_EPS):
    """Brute-force localization map: FD gradients, then mean-pool, combine, clip."""
    _, cache = forward(model, M)
    A = cache.feature_maps
    grads = fd_all_gradients(model, A, eps)
    K, h, w = A.shape
    raw = np.zeros((h, w))
    for k in range(K):
        alpha_k = sum(grads[k, i, j] for i in range(h) for j in range(w)) / (h * w)
        raw += alpha_k * A[k]
    return np.where(raw > 0, raw, 0.0), A


def any_near_kink(model, A, eps=FD_EPS):
    return any(near_kink(model, A, c, eps) for c in np.ndindex(*A.shape))


def bilinear_oracle(raw, u, v):
    """Per-cell align-corners bilinear interpolation."""
    raw = np.asarray(raw, dtype=np.float64)
    h, w = raw.shape
    out = np.empty((u, v))
    for i in range(u):
        y = 0.0 if (u == 1 or h == 1) else i * (h - 1) / (u - 1)
        y0 = int(math.floor(y))
        y1 = min(y0 + 1, h - 1)
        dy = y - y0
        for j in range(v):
            x = 0.0 if (v == 1 or w == 1) else j * (w - 1) / (v - 1)
            x0 = int(math.floor(x))
            x1 = min(x0 + 1, w - 1)
            dx = x - x0
            out[i, j] = ((1 - dy) * (1 - dx) * raw[y0, x0] + (1 - dy) * dx * raw[y0, x1]
                         + dy * (1 - dx) * raw[y1, x0] + dy * dx * raw[y1, x1])
    return out


def brute_window(weights, w):
    """Exhaustive exact scan: (start, end, exact Fraction total), leftmost max."""
    n = len(weights)
    width = min(w, n)
    best = None
    for s in range(n - width + 1):
        total = sum((Fraction(float(x)) for x in weights[s:s + width]), Fraction(0))
        if best is None or total > best[2]:
            best = (s, s + width, total)
    return best


def kurtosis_oracle(values):
    xs = [Fraction(float(x)) for x in np.ravel(values)]
    n = len(xs)
    mu = sum(xs) / n
    m2 = sum((x - mu) ** 2 for x in xs) / n
    m4 = sum((x - mu) ** 4 for x in xs) / n
    return float(m4 / (m2 * m2))


def u_oracle(a, b):
    return sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in a for y in b)


def permutation_pvalue(a, b, n_perm=10_000, seed=0):
    """One-sided P(U >= observed) under random relabelling of the pooled sample."""
    rng = np.random.default_rng(seed)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    pooled = np.concatenate([a, b])
    n_a = a.size

    def u_stat(x, y):
        return np.sum(x[:, None] > y[None, :]) + 0.5 * np.sum(x[:, None] == y[None, :])

    observed = u_stat(a, b)
    hits = 0
    for _ in range(n_perm):
        perm = rng.permutation(pooled)
        hits += u_stat(perm[:n_a], perm[n_a:]) >= observed
    return hits / n_perm
