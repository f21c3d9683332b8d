"""Graph-attention auto-encoder with a cluster-assignment head.

The encoder is two attention layers over the paper graph: the first
splits its width across several heads whose outputs are concatenated,
the second is single-headed. Attention for node i is a softmax over its
graph neighbourhood (self-loop included) of LeakyReLU-scored pairs, and
each layer ends in an ELU. The decoder scores pair (i, j) with the
sigmoid of the embedding inner product and is trained to reproduce the
adjacency; a linear head over the embeddings produces soft cluster
logits whose outer product is trained against the pseudo-label
co-membership matrix. Both losses are the mean binary cross entropy
over all n*n cells, so an all-zero-logit model scores ln 2 on each.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .autograd import Tensor, concat, masked_row_softmax
from .util import atomic_write_bytes

PROB_EPS = 1e-7

_CKPT_MAGIC = b"DWTS"
_CKPT_VERSION = 1


class NonFiniteError(RuntimeError):
    """Raised when an activation, loss, or update stops being finite;
    carries enough context to identify the offending run."""


@dataclass
class ForwardState:
    """One forward pass: per-layer hidden states, the cluster-head
    output ``c`` with its Gram matrix ``cmat``, and the decoded pairwise
    probabilities ``a_hat``."""

    h1: Tensor
    h: Tensor
    c: Tensor
    a_hat: Tensor
    cmat: Tensor


def init_params(
    feature_dim: int,
    n_clusters: int,
    hidden_dims: tuple[int, int] = (128, 128),
    heads: int = 4,
    seed: int = 0,
) -> dict[str, Tensor]:
    """Fresh parameter set. Weights and attention vectors draw Xavier
    uniform bounds sqrt(6 / (fan_in + fan_out)); biases start at zero.
    Draw order is fixed, so a seed pins every value."""
    d1, d2 = hidden_dims
    if d1 % heads:
        raise ValueError("first hidden width %d not divisible by %d heads" % (d1, heads))
    if n_clusters < 1:
        raise ValueError("n_clusters must be positive")
    per_head = d1 // heads
    rng = np.random.default_rng(seed)

    def xavier(fan_in, fan_out, shape):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return Tensor(rng.uniform(-bound, bound, size=shape))

    params: dict[str, Tensor] = {}
    for k in range(heads):
        prefix = "gat1.head%d." % k
        params[prefix + "weight"] = xavier(feature_dim, per_head, (feature_dim, per_head))
        params[prefix + "att_src"] = xavier(per_head, 1, (per_head, 1))
        params[prefix + "att_dst"] = xavier(per_head, 1, (per_head, 1))
        params[prefix + "bias"] = Tensor(np.zeros(per_head))
    params["gat2.weight"] = xavier(d1, d2, (d1, d2))
    params["gat2.att_src"] = xavier(d2, 1, (d2, 1))
    params["gat2.att_dst"] = xavier(d2, 1, (d2, 1))
    params["gat2.bias"] = Tensor(np.zeros(d2))
    params["cluster.weight"] = xavier(d2, n_clusters, (n_clusters, d2))
    params["cluster.bias"] = Tensor(np.zeros(n_clusters))
    return params


def gat_head(
    h: Tensor,
    mask: np.ndarray,
    weight: Tensor,
    att_src: Tensor,
    att_dst: Tensor,
    bias: Tensor,
) -> Tensor:
    """One attention head: project, score every neighbour pair, softmax
    over the masked neighbourhood, aggregate, shift, ELU."""
    z = h @ weight
    scores = ((z @ att_src) + (z @ att_dst).T).leaky_relu(0.2)
    alpha = masked_row_softmax(scores, mask)
    return ((alpha @ z) + bias).elu()


def gat_layer(h: Tensor, mask: np.ndarray, params: dict[str, Tensor], layer: str) -> Tensor:
    """One attention layer: every head whose parameters live under
    ``layer`` (e.g. ``gat1.head0``, or the bare ``gat2`` for a
    single-head layer), concatenated along the feature axis."""
    single = layer + ".weight" in params
    prefixes = (
        [layer]
        if single
        else [
            name[: -len(".weight")]
            for name in sorted(params)
            if name.startswith(layer + ".head") and name.endswith(".weight")
        ]
    )
    outs = [
        gat_head(
            h,
            mask,
            params[p + ".weight"],
            params[p + ".att_src"],
            params[p + ".att_dst"],
            params[p + ".bias"],
        )
        for p in prefixes
    ]
    out = outs[0] if len(outs) == 1 else concat(outs, axis=1)
    bad = ~np.isfinite(out.data).all(axis=1)
    if bad.any():
        raise NonFiniteError(
            "non-finite activation in layer %s at node %d" % (layer, int(bad.argmax()))
        )
    return out


def encode(
    params: dict[str, Tensor], features, adjacency: np.ndarray
) -> tuple[Tensor, Tensor]:
    """Run both attention layers; returns the (n, d1) first-layer state
    and the (n, d2) embedding matrix."""
    h0 = features if isinstance(features, Tensor) else Tensor(features)
    mask = np.asarray(adjacency) > 0
    h1 = gat_layer(h0, mask, params, "gat1")
    return h1, gat_layer(h1, mask, params, "gat2")


def decode(h: Tensor) -> Tensor:
    """Pairwise link probabilities sigmoid(H H^T); symmetric, in (0, 1)."""
    return (h @ h.T).sigmoid()


def cluster_head(h: Tensor, params: dict[str, Tensor]) -> tuple[Tensor, Tensor]:
    """Linear head over the embeddings; returns the (n, m) soft
    assignments and their (n, n) Gram matrix."""
    c = (h @ params["cluster.weight"].T) + params["cluster.bias"]
    return c, c @ c.T


def forward(params: dict[str, Tensor], features, adjacency: np.ndarray) -> ForwardState:
    h1, h = encode(params, features, adjacency)
    c, cmat = cluster_head(h, params)
    return ForwardState(h1=h1, h=h, c=c, a_hat=decode(h), cmat=cmat)


def _bce_mean(p: Tensor, target: np.ndarray) -> Tensor:
    p = p.clip(PROB_EPS, 1.0 - PROB_EPS)
    t = np.asarray(target, dtype=np.float64)
    return -((p.log() * t) + ((1.0 - p).log() * (1.0 - t))).mean()


def recon_loss(a_hat: Tensor, adjacency: np.ndarray) -> Tensor:
    """Mean BCE between the decoded probabilities and the adjacency,
    over all n*n cells including the diagonal."""
    return _bce_mean(a_hat, adjacency)


def cluster_loss(cmat: Tensor, ymat: np.ndarray) -> Tensor:
    """Mean BCE between sigmoid(C C^T) and the pseudo-label co-membership
    matrix."""
    return _bce_mean(cmat.sigmoid(), ymat)


def joint_loss(
    state: ForwardState,
    adjacency: np.ndarray,
    comembership: np.ndarray,
    lam: float = 0.5,
) -> tuple[Tensor, float, float]:
    """Convex blend lam * cluster + (1 - lam) * recon. Returns the loss
    node plus the two component values for tracing."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    rec = recon_loss(state.a_hat, adjacency)
    clu = cluster_loss(state.cmat, comembership)
    total = clu * lam + rec * (1.0 - lam)
    if not np.isfinite(total.data):
        raise NonFiniteError(
            "joint loss is not finite (recon=%r, cluster=%r)"
            % (float(rec.data), float(clu.data))
        )
    return total, float(rec.data), float(clu.data)


class Adam:
    """Adam with additive L2 weight decay folded into the gradient."""

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 1e-4,
    ):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self._params = sorted(params.items())
        self._m = {name: np.zeros_like(p.data) for name, p in self._params}
        self._v = {name: np.zeros_like(p.data) for name, p in self._params}
        self.t = 0

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, p in self._params:
            if p.grad is None:
                raise RuntimeError("step() before backward(): %s has no gradient" % name)
            g = p.grad + self.weight_decay * p.data
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if not np.isfinite(p.data).all():
                raise NonFiniteError("non-finite update for parameter %s" % name)


def save_checkpoint(params: dict, path: str) -> None:
    """Versioned little-endian binary: magic, format version, tensor
    count, then per tensor a name, the shape, and float32 row-major data.
    Values may be Tensors or plain arrays."""
    blob = bytearray()
    blob += _CKPT_MAGIC
    blob += struct.pack("<II", _CKPT_VERSION, len(params))
    for name in sorted(params):
        value = params[name]
        data = value.data if isinstance(value, Tensor) else np.asarray(value)
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded))
        blob += encoded
        blob += struct.pack("<B", data.ndim)
        blob += struct.pack("<%dI" % data.ndim, *data.shape)
        blob += np.ascontiguousarray(data, dtype="<f4").tobytes()
    atomic_write_bytes(path, bytes(blob))


def load_checkpoint(path: str) -> dict[str, Tensor]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _CKPT_MAGIC:
        raise ValueError("%s is not a parameter checkpoint" % path)
    version, count = struct.unpack_from("<II", blob, 4)
    if version != _CKPT_VERSION:
        raise ValueError(
            "checkpoint %s has format version %d, expected %d"
            % (path, version, _CKPT_VERSION)
        )
    pos = 12
    params: dict[str, Tensor] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        name = blob[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = struct.unpack_from("<B", blob, pos)
        pos += 1
        shape = struct.unpack_from("<%dI" % ndim, blob, pos)
        pos += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(blob, dtype="<f4", count=size, offset=pos)
        pos += 4 * size
        params[name] = Tensor(data.astype(np.float64).reshape(shape))
    if pos != len(blob):
        raise ValueError("trailing bytes in checkpoint %s" % path)
    return params
