"""Small tanh MLP classifier with hand-derived gradients.

Parameters live in one flat float64 vector so the optimizers stay
model-agnostic. The layout is layer-major: for each layer, the weight
matrix in row-major order (shape fan_in x fan_out), then the bias.
``unflatten`` returns views into the flat buffer, never copies.

The LoRA variant keeps a frozen base vector and trains low-rank factors
A (fan_in x r) and B (r x out) per layer, with the effective weight
W + (alpha/r) * A @ B. Only A and B entries enter the trainable flat
vector; biases stay frozen with the base.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from . import numeric, rng as vrng


@dataclass
class Batch:
    """Features [n, d] and integer labels [n] in [0, C)."""

    features: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return int(self.features.shape[0])


@dataclass
class MlpParams:
    sizes: Tuple[int, ...]
    theta: np.ndarray


@dataclass
class LoraAdapter:
    sizes: Tuple[int, ...]
    rank: int
    alpha: float
    phi: np.ndarray  # flat trainable vector over (A, B) pairs, layer-major


def layer_shapes(sizes: Sequence[int]) -> List[Tuple[int, int]]:
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError(f"invalid layer sizes {tuple(sizes)}")
    return [(int(sizes[i]), int(sizes[i + 1])) for i in range(len(sizes) - 1)]


def n_params(sizes: Sequence[int]) -> int:
    return sum(fi * fo + fo for fi, fo in layer_shapes(sizes))


def unflatten(theta: np.ndarray, sizes: Sequence[int]) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Split a flat vector into per-layer (W, b) views (no copies)."""
    if theta.shape != (n_params(sizes),):
        raise ValueError(
            f"flat vector has length {theta.shape}, sizes {tuple(sizes)} "
            f"need {n_params(sizes)}"
        )
    layers = []
    off = 0
    for fi, fo in layer_shapes(sizes):
        w = theta[off:off + fi * fo].reshape(fi, fo)
        off += fi * fo
        b = theta[off:off + fo]
        off += fo
        layers.append((w, b))
    return layers


def flatten(layers: Sequence[Tuple[np.ndarray, np.ndarray]], sizes: Sequence[int]) -> np.ndarray:
    """Pack per-layer (W, b) arrays into a fresh flat vector."""
    shapes = layer_shapes(sizes)
    if len(layers) != len(shapes):
        raise ValueError("layer count does not match sizes")
    out = np.empty(n_params(sizes), dtype=np.float64)
    off = 0
    for (w, b), (fi, fo) in zip(layers, shapes):
        if w.shape != (fi, fo) or b.shape != (fo,):
            raise ValueError(f"layer shape mismatch: got {w.shape}/{b.shape}")
        out[off:off + fi * fo] = np.asarray(w, dtype=np.float64).ravel()
        off += fi * fo
        out[off:off + fo] = np.asarray(b, dtype=np.float64)
        off += fo
    return out


def init_mlp(sizes: Sequence[int], rng: vrng.RngState) -> MlpParams:
    """Weights ~ N(0, 1/fan_in), biases zero, drawn layer by layer."""
    sizes = tuple(int(s) for s in sizes)
    theta = np.zeros(n_params(sizes), dtype=np.float64)
    for w, _ in unflatten(theta, sizes):
        fi, fo = w.shape
        draws = vrng.sample_standard_normal(rng, fi * fo)
        w[:, :] = draws.reshape(fi, fo) / np.sqrt(fi)
    return MlpParams(sizes=sizes, theta=theta)


def _check_features(features: np.ndarray, d: int) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != d:
        raise ValueError(f"features must be [n, {d}], got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features contain non-finite values")
    return x


def _check_labels(labels: np.ndarray, n: int, n_classes: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.shape != (n,):
        raise ValueError(f"labels must be [{n}], got {y.shape}")
    y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ValueError(f"labels out of range [0, {n_classes})")
    return y


def _forward_stack(weights, biases, features: np.ndarray):
    """Activations per layer; hidden layers are tanh, output is linear."""
    acts = [features]
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = acts[-1] @ w + b
        acts.append(z if i == last else np.tanh(z))
    return acts


def forward(params: MlpParams, features: np.ndarray) -> np.ndarray:
    """Logits [n, C] for a feature matrix [n, d]."""
    x = _check_features(features, params.sizes[0])
    layers = unflatten(params.theta, params.sizes)
    acts = _forward_stack([w for w, _ in layers], [b for _, b in layers], x)
    logits = acts[-1]
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError("non-finite logits in forward pass")
    return logits


def _ce_from_logits(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and the output-layer error (P - Y)/n."""
    n = logits.shape[0]
    logp = numeric.log_softmax(logits, axis=1)
    loss = float(-np.mean(logp[np.arange(n), labels]))
    dz = np.exp(logp)
    dz[np.arange(n), labels] -= 1.0
    dz /= n
    return loss, dz


def loss_and_grad(params: MlpParams, batch: Batch) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy and its exact gradient as a flat vector."""
    sizes = params.sizes
    x = _check_features(batch.features, sizes[0])
    y = _check_labels(batch.labels, x.shape[0], sizes[-1])
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    layers = unflatten(params.theta, sizes)
    weights = [w for w, _ in layers]
    acts = _forward_stack(weights, [b for _, b in layers], x)
    loss, dz = _ce_from_logits(acts[-1], y)

    grad = np.zeros_like(params.theta)
    gviews = unflatten(grad, sizes)
    for i in range(len(weights) - 1, -1, -1):
        gw, gb = gviews[i]
        gw[:, :] = acts[i].T @ dz
        gb[:] = dz.sum(axis=0)
        if i > 0:
            da = dz @ weights[i].T
            dz = da * (1.0 - acts[i] * acts[i])  # tanh'
    return loss, grad


# ------------------------------------------------------------------ LoRA ---

def lora_shapes(sizes: Sequence[int], rank: int) -> List[Tuple[int, int]]:
    if rank < 1:
        raise ValueError("LoRA rank must be >= 1")
    return layer_shapes(sizes)


def lora_n_params(sizes: Sequence[int], rank: int) -> int:
    return sum(rank * (fi + fo) for fi, fo in lora_shapes(sizes, rank))


def lora_unflatten(adapter: LoraAdapter) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Per-layer (A, B) views into the adapter's flat vector."""
    shapes = lora_shapes(adapter.sizes, adapter.rank)
    want = lora_n_params(adapter.sizes, adapter.rank)
    if adapter.phi.shape != (want,):
        raise ValueError(f"adapter vector length {adapter.phi.shape}, need {want}")
    r = adapter.rank
    pairs = []
    off = 0
    for fi, fo in shapes:
        a = adapter.phi[off:off + fi * r].reshape(fi, r)
        off += fi * r
        b = adapter.phi[off:off + r * fo].reshape(r, fo)
        off += r * fo
        pairs.append((a, b))
    return pairs


def init_lora(sizes: Sequence[int], rank: int, alpha: float, rng: vrng.RngState) -> LoraAdapter:
    """A ~ N(0, 1/fan_in), B = 0, so the adapter starts as a no-op."""
    sizes = tuple(int(s) for s in sizes)
    phi = np.zeros(lora_n_params(sizes, rank), dtype=np.float64)
    adapter = LoraAdapter(sizes=sizes, rank=rank, alpha=float(alpha), phi=phi)
    for a, _ in lora_unflatten(adapter):
        fi = a.shape[0]
        a[:, :] = vrng.sample_standard_normal(rng, fi * rank).reshape(fi, rank) / np.sqrt(fi)
    return adapter


def _effective_weights(base: MlpParams, adapter: LoraAdapter):
    if adapter.sizes != base.sizes:
        raise ValueError("adapter sizes do not match base model")
    scale = adapter.alpha / adapter.rank
    layers = unflatten(base.theta, base.sizes)
    pairs = lora_unflatten(adapter)
    weights = [w + scale * (a @ b) for (w, _), (a, b) in zip(layers, pairs)]
    biases = [b for _, b in layers]
    return weights, biases, pairs, scale


def lora_forward(base: MlpParams, adapter: LoraAdapter, features: np.ndarray) -> np.ndarray:
    x = _check_features(features, base.sizes[0])
    weights, biases, _, _ = _effective_weights(base, adapter)
    logits = _forward_stack(weights, biases, x)[-1]
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError("non-finite logits in LoRA forward pass")
    return logits


def lora_loss_and_grad(base: MlpParams, adapter: LoraAdapter, batch: Batch) -> Tuple[float, np.ndarray]:
    """Loss with adapted weights; gradient only over the (A, B) entries."""
    x = _check_features(batch.features, base.sizes[0])
    y = _check_labels(batch.labels, x.shape[0], base.sizes[-1])
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    weights, biases, pairs, scale = _effective_weights(base, adapter)
    acts = _forward_stack(weights, biases, x)
    loss, dz = _ce_from_logits(acts[-1], y)

    grad = np.zeros_like(adapter.phi)
    gadapter = LoraAdapter(adapter.sizes, adapter.rank, adapter.alpha, grad)
    gpairs = lora_unflatten(gadapter)
    for i in range(len(weights) - 1, -1, -1):
        dw = acts[i].T @ dz  # gradient wrt the effective weight
        a, b = pairs[i]
        ga, gb = gpairs[i]
        ga[:, :] = scale * (dw @ b.T)
        gb[:, :] = scale * (a.T @ dw)
        if i > 0:
            da = dz @ weights[i].T
            dz = da * (1.0 - acts[i] * acts[i])
    return loss, grad
