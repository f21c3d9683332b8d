"""Hot-loop kernels with an optional compiled fast path.

Two inner loops dominate runtime at corpus scale: the skip-gram
negative-sampling update sweep (one dot product and two row updates per
training pair) and the all-pairs token-overlap scan used during graph
construction. Both are available as a Cython extension
(``disambig._kernels``) with pure numpy/Python fallbacks; the compiled
path is selected at import when present, and ``DISAMBIG_PURE_PYTHON=1``
forces the fallbacks. Both paths run the identical algorithm with the
identical deterministic random stream; results agree to floating-point
reduction order.

The dense linear algebra of the training core (attention layers, losses)
is BLAS-bound through numpy and gains nothing from compilation, so it is
deliberately not routed through here.
"""

from __future__ import annotations

import math
import os

import numpy as np

if os.environ.get("DISAMBIG_PURE_PYTHON"):
    _impl = None
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = None

COMPILED = _impl is not None

_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One step of the splitmix64 generator: (new_state, 64-bit output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _u01(bits: int) -> float:
    return (bits >> 11) * 2.0**-53


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def pair_uniform(seed: int, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
    """Deterministic uniform [0,1) draw per (seed, i, j), independent of
    evaluation order. Used for the co-venue keep-probability draws."""
    ii = np.asarray(ii, dtype=np.uint64)
    jj = np.asarray(jj, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix64_array(np.uint64(seed & _MASK64) ^ (ii * np.uint64(0x9E3779B97F4A7C15)))
        h = _mix64_array(h ^ (jj * np.uint64(0xC2B2AE3D27D4EB4F)))
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


# ---------------------------------------------------------------------------
# Skip-gram negative sampling epoch
# ---------------------------------------------------------------------------


def sgns_epoch_pure(
    sents: np.ndarray,
    offsets: np.ndarray,
    w_in: np.ndarray,
    w_out: np.ndarray,
    cum_table: np.ndarray,
    window: int,
    negatives: int,
    alpha0: float,
    alpha_min: float,
    tokens_done: int,
    tokens_total: int,
    state: int,
) -> tuple[float, int, int, int]:
    """One skip-gram negative-sampling pass over the encoded corpus.

    Updates ``w_in``/``w_out`` in place; returns (loss_sum, pair_count,
    tokens_done, rng_state). The learning rate decays linearly with the
    global token counter across epochs.
    """
    loss = 0.0
    pairs = 0
    n_sents = len(offsets) - 1
    for s in range(n_sents):
        sent = sents[offsets[s] : offsets[s + 1]]
        length = len(sent)
        for t in range(length):
            alpha = alpha0 * (1.0 - tokens_done / tokens_total)
            if alpha < alpha_min:
                alpha = alpha_min
            tokens_done += 1
            center = int(sent[t])
            state, r = splitmix64(state)
            reduced = r % window
            start = t - window + reduced
            if start < 0:
                start = 0
            end = t + window - reduced + 1
            if end > length:
                end = length
            vin = w_in[center]
            for c in range(start, end):
                if c == t:
                    continue
                target = int(sent[c])
                grad_in = np.zeros_like(vin)
                for k in range(negatives + 1):
                    if k == 0:
                        out_idx = target
                        label = 1.0
                    else:
                        state, r = splitmix64(state)
                        out_idx = int(np.searchsorted(cum_table, _u01(r), side="right"))
                        if out_idx >= len(cum_table):
                            out_idx = len(cum_table) - 1
                        if out_idx == target:
                            continue
                        label = 0.0
                    vout = w_out[out_idx]
                    z = float(vin @ vout)
                    if z > 40.0:
                        z = 40.0
                    elif z < -40.0:
                        z = -40.0
                    p = 1.0 / (1.0 + math.exp(-z))
                    g = (label - p) * alpha
                    loss -= math.log(max(p if label else 1.0 - p, 1e-12))
                    grad_in += g * vout
                    vout += g * vin
                vin += grad_in
                pairs += 1
    return loss, pairs, tokens_done, state


# ---------------------------------------------------------------------------
# All-pairs token overlap
# ---------------------------------------------------------------------------


def token_overlap_pairs_pure(
    indptr: np.ndarray, tokens: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Intersection sizes for every unordered row pair with nonzero overlap.

    ``tokens[indptr[i]:indptr[i+1]]`` holds row i's sorted unique token ids.
    Returns (i, j, count) arrays with i < j, ordered i-major. The scan
    evaluates all n*(n-1)/2 pairs.
    """
    n = len(indptr) - 1
    row_sets = [set(tokens[indptr[i] : indptr[i + 1]].tolist()) for i in range(n)]
    ii: list[int] = []
    jj: list[int] = []
    cc: list[int] = []
    for i in range(n):
        si = row_sets[i]
        if not si:
            continue
        for j in range(i + 1, n):
            c = len(si & row_sets[j])
            if c:
                ii.append(i)
                jj.append(j)
                cc.append(c)
    return (
        np.asarray(ii, dtype=np.int32),
        np.asarray(jj, dtype=np.int32),
        np.asarray(cc, dtype=np.int32),
    )


def sgns_epoch(*args, **kwargs):
    if _impl is not None:
        return _impl.sgns_epoch(*args, **kwargs)
    return sgns_epoch_pure(*args, **kwargs)


def token_overlap_pairs(indptr: np.ndarray, tokens: np.ndarray):
    if _impl is not None:
        return _impl.token_overlap_pairs(indptr, tokens)
    return token_overlap_pairs_pure(indptr, tokens)
