"""Minimal dense-network toolkit on float64 numpy.

Hand-rolled on purpose: the training rules need the gradient of a critic's
output with respect to its *action inputs* (so that a policy network can be
pushed along it), and the whole pipeline must stay deterministic per seed and
cheap to verify against finite differences. Everything is a plain dict of
float64 arrays; no autograd, no framework.

Layout convention for a spec with layer_sizes (d0, d1, ..., dL):
  params["W{i}"] has shape (d_i, d_{i+1}), params["b{i}"] shape (d_{i+1},)
  y = act(x @ W + b) at every layer; hidden activation is rectified-linear,
  the output activation is one of identity / tanh / sigmoid.

Inputs may be a single vector (d0,) or a batch (B, d0). Parameter gradients
returned by backward() are summed over the batch rows, so the caller scales
the upstream signal (for example by 1/B for a mean loss).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

OUTPUT_ACTIVATIONS = ("identity", "tanh", "sigmoid")


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple[int, ...]
    output_activation: str = "identity"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError("layer_sizes needs >= 2 positive entries")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError("unknown output activation %r"
                             % (self.output_activation,))

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]


def init_params(spec: MlpSpec, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    params: dict[str, np.ndarray] = {}
    for i in range(spec.n_layers):
        fan_in = spec.layer_sizes[i]
        fan_out = spec.layer_sizes[i + 1]
        bound = 1.0 / np.sqrt(fan_in)
        params[f"W{i}"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        params[f"b{i}"] = np.zeros(fan_out)
    return params


def _out_act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "identity":
        return z
    if kind == "tanh":
        return np.tanh(z)
    # logistic; clip the argument so exp never overflows
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def _forward_cached(params, spec: MlpSpec, x: np.ndarray):
    """Returns (activations per layer incl. input, pre-activations per layer)."""
    acts = [x]
    zs = []
    h = x
    for i in range(spec.n_layers):
        z = h @ params[f"W{i}"] + params[f"b{i}"]
        zs.append(z)
        if i < spec.n_layers - 1:
            h = np.maximum(z, 0.0)
        else:
            h = _out_act(z, spec.output_activation)
        acts.append(h)
    return acts, zs


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise ValueError("input must be a vector or a batch of vectors")


def forward(params, spec: MlpSpec, x) -> np.ndarray:
    xb, single = _as_batch(x)
    if xb.shape[1] != spec.in_dim:
        raise ValueError("input width %d does not match spec %d"
                         % (xb.shape[1], spec.in_dim))
    out = _forward_cached(params, spec, xb)[0][-1]
    return out[0] if single else out


def output_preactivation(params, spec: MlpSpec, x) -> np.ndarray:
    """Last-layer pre-activation, for injecting noise before the squash."""
    xb, single = _as_batch(x)
    z = _forward_cached(params, spec, xb)[1][-1]
    return z[0] if single else z


def backward(params, spec: MlpSpec, x, upstream):
    """Chain upstream d(loss)/d(output) back to parameters and the input.

    Returns (grads, input_grad): grads maps every parameter name to the
    batch-summed gradient; input_grad has the same shape as x and keeps the
    per-row resolution, which is what policy updates consume.
    """
    xb, single = _as_batch(x)
    ub, usingle = _as_batch(upstream)
    if ub.shape != (xb.shape[0], spec.out_dim):
        raise ValueError("upstream shape does not match the output")
    acts, zs = _forward_cached(params, spec, xb)

    kind = spec.output_activation
    zL = zs[-1]
    if kind == "identity":
        delta = ub
    elif kind == "tanh":
        t = np.tanh(zL)
        delta = ub * (1.0 - t * t)
    else:
        s = _out_act(zL, "sigmoid")
        delta = ub * s * (1.0 - s)

    grads: dict[str, np.ndarray] = {}
    for i in range(spec.n_layers - 1, -1, -1):
        grads[f"W{i}"] = acts[i].T @ delta
        grads[f"b{i}"] = delta.sum(axis=0)
        delta = delta @ params[f"W{i}"].T
        if i > 0:
            delta = delta * (zs[i - 1] > 0.0)
    input_grad = delta
    return grads, input_grad[0] if single else input_grad


@dataclass
class AdamState:
    """Per-network optimizer state. beta/eps fixed at the usual values."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state: AdamState) -> None:
    """One bias-corrected moment update, in place."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, g in grads.items():
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(params[name])
            state.m[name] = m
            state.v[name] = np.zeros_like(params[name])
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        params[name] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def global_grad_norm(grads) -> float:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_global_norm(grads, max_norm: float) -> float:
    """Scale all gradients together so their joint norm is <= max_norm."""
    norm = global_grad_norm(grads)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def soft_update(target, source, tau: float) -> None:
    """target <- tau * source + (1 - tau) * target, in place."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    for name, t_arr in target.items():
        t_arr *= 1.0 - tau
        t_arr += tau * source[name]


def copy_params(params) -> dict[str, np.ndarray]:
    return {k: v.copy() for k, v in params.items()}


# ---------------------------------------------------------------------------
# Checkpoint container. Binary layout, little-endian throughout:
#   magic "RVLCKPT1" (8 bytes)
#   u32 description length, UTF-8 description
#   u32 tensor count
#   per tensor: u32 name length, UTF-8 name, u32 rank, rank * u64 dims,
#               then prod(dims) float64 values in C order
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"RVLCKPT1"


def save_checkpoint(path, description: str, tensors: dict[str, np.ndarray]) -> None:
    desc = description.encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(desc)))
        f.write(desc)
        f.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            arr = np.asarray(arr, dtype="<f8")
            nm = name.encode("utf-8")
            f.write(struct.pack("<I", len(nm)))
            f.write(nm)
            f.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<Q", dim))
            f.write(np.ascontiguousarray(arr).tobytes())


def load_checkpoint(path) -> tuple[str, dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError("not a checkpoint file (bad magic): %r" % (magic,))
        (dlen,) = struct.unpack("<I", f.read(4))
        description = f.read(dlen).decode("utf-8")
        (count,) = struct.unpack("<I", f.read(4))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<I", f.read(4))
            name = f.read(nlen).decode("utf-8")
            (rank,) = struct.unpack("<I", f.read(4))
            dims = struct.unpack("<%dQ" % rank, f.read(8 * rank))
            n_items = 1
            for dim in dims:
                n_items *= dim
            data = np.frombuffer(f.read(8 * n_items), dtype="<f8")
            if data.size != n_items:
                raise ValueError("truncated checkpoint tensor %r" % name)
            tensors[name] = data.reshape(dims).astype(float)
        return description, tensors
