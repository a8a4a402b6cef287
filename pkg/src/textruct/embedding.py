"""Skip-gram embedding training and nearest-neighbor queries.

Two matrices are learnt by SGD: an input matrix W (one row per word, the
representation used for similarity) and an output matrix W' projecting back
onto the vocabulary. The exact-softmax mode is the reference implementation
used by every correctness test; negative sampling exists purely to scale to
large vocabularies.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpusio import atomic_write_bytes

logger = logging.getLogger(__name__)

_MAGIC = b"SGE1"


@dataclass
class TrainConfig:
    window: int = 5
    dim: int = 200
    epochs: int = 15
    learning_rate: float = 0.025
    mode: str = "exact_softmax"  # or "negative_sampling"
    negative_k: int = 5
    seed: int = 1
    min_count: int = 2
    batch_size: int = 256

    def __post_init__(self):
        if self.window < 1 or self.dim < 1 or self.epochs < 1:
            raise ValueError("window, dim and epochs must be >= 1")
        if self.mode not in ("exact_softmax", "negative_sampling"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "negative_sampling" and self.negative_k < 1:
            raise ValueError("negative_k must be >= 1")


@dataclass
class EmbeddingModel:
    vocab: list[str]
    input_matrix: np.ndarray    # |V| x d
    output_matrix: np.ndarray   # d x |V|
    dim: int
    mode: str = "exact_softmax"
    seed: int = 0
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {t: i for i, t in enumerate(self.vocab)}
        if not np.all(np.isfinite(self.input_matrix)) or not np.all(
            np.isfinite(self.output_matrix)
        ):
            raise ValueError("model matrices contain non-finite values")

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def require(self, token: str) -> int:
        if token not in self.index:
            raise KeyError(f"token not in vocabulary: {token!r}")
        return self.index[token]


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_distribution(model: EmbeddingModel, center: str) -> np.ndarray:
    """Probability of every vocabulary word appearing in the context of
    `center` (full softmax over output scores)."""
    i = model.require(center)
    return _softmax(model.input_matrix[i] @ model.output_matrix)


def context_probability(model: EmbeddingModel, center: str, context: str) -> float:
    """p(context | center) under the full-vocabulary softmax."""
    j = model.require(context)
    return float(softmax_distribution(model, center)[j])


def loss_and_gradient(
    model: EmbeddingModel, pairs: Sequence[tuple[str, str]]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean negative log-probability over (center, context) pairs, with exact
    gradients for both matrices.

    The score gradient is the classic softmax - one_hot, pushed through the
    two projections; everything is averaged over the pair count.
    """
    if not pairs:
        raise ValueError("pairs must be non-empty")
    centers = np.array([model.require(c) for c, _ in pairs], dtype=np.intp)
    contexts = np.array([model.require(x) for _, x in pairs], dtype=np.intp)
    n = len(pairs)
    H = model.input_matrix[centers]                  # n x d
    scores = H @ model.output_matrix                 # n x |V|
    probs = _softmax(scores)
    rows = np.arange(n)
    loss = float(-np.mean(np.log(probs[rows, contexts])))
    dscores = probs.copy()
    dscores[rows, contexts] -= 1.0
    dscores /= n
    grad_output = H.T @ dscores                      # d x |V|
    dH = dscores @ model.output_matrix.T             # n x d
    grad_input = np.zeros_like(model.input_matrix)
    np.add.at(grad_input, centers, dH)
    return loss, grad_input, grad_output


def build_vocab(token_streams: Sequence[Sequence[str]], min_count: int) -> list[str]:
    """Vocabulary ordered by descending count, then token, for determinism."""
    counts: dict[str, int] = {}
    for stream in token_streams:
        for t in stream:
            counts[t] = counts.get(t, 0) + 1
    kept = [(t, c) for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return [t for t, _ in kept]


def _training_pairs(
    token_streams: Sequence[Sequence[str]], index: dict[str, int], window: int
) -> tuple[np.ndarray, np.ndarray]:
    centers: list[int] = []
    contexts: list[int] = []
    for stream in token_streams:
        ids = [index.get(t, -1) for t in stream]
        n = len(ids)
        for t in range(n):
            ci = ids[t]
            if ci < 0:
                continue
            lo = max(0, t - window)
            hi = min(n, t + window + 1)
            for j in range(lo, hi):
                if j == t or ids[j] < 0:
                    continue
                centers.append(ci)
                contexts.append(ids[j])
    return np.array(centers, dtype=np.intp), np.array(contexts, dtype=np.intp)


def _sgd_exact(model, centers, contexts, cfg, rng, on_epoch):
    # One update per batch with summed per-pair gradients, so the learning
    # rate means the same thing as in per-pair SGD whatever the batch size.
    n = len(centers)
    W, Wp = model.input_matrix, model.output_matrix
    batches_per_epoch = (n + cfg.batch_size - 1) // cfg.batch_size
    total_steps = cfg.epochs * batches_per_epoch
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for b in range(batches_per_epoch):
            sel = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            c, x = centers[sel], contexts[sel]
            m = len(sel)
            lr = cfg.learning_rate * max(1e-4, 1.0 - step / total_steps)
            H = W[c]
            probs = _softmax(H @ Wp)
            rows = np.arange(m)
            epoch_loss += float(-np.log(probs[rows, x]).sum())
            dscores = probs
            dscores[rows, x] -= 1.0
            dH = dscores @ Wp.T
            Wp -= lr * (H.T @ dscores)
            np.add.at(W, c, -lr * dH)
            step += 1
        if on_epoch:
            on_epoch(epoch, epoch_loss / n)


def _sgd_negative(model, centers, contexts, cfg, rng, noise_cdf, on_epoch):
    n = len(centers)
    W, Wp = model.input_matrix, model.output_matrix
    k = cfg.negative_k
    batches_per_epoch = (n + cfg.batch_size - 1) // cfg.batch_size
    total_steps = cfg.epochs * batches_per_epoch
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for b in range(batches_per_epoch):
            sel = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            c, pos = centers[sel], contexts[sel]
            m = len(sel)
            lr = cfg.learning_rate * max(1e-4, 1.0 - step / total_steps)
            negs = np.searchsorted(noise_cdf, rng.random((m, k)))
            targets = np.concatenate([pos[:, None], negs], axis=1)  # m x (k+1)
            signs = np.ones((m, k + 1))
            signs[:, 1:] = -1.0
            H = W[c]                                  # m x d
            Ov = Wp.T[targets]                        # m x (k+1) x d
            logits = np.einsum("md,mtd->mt", H, Ov)
            sig = 1.0 / (1.0 + np.exp(-np.clip(signs * logits, -30, 30)))
            epoch_loss += float(-np.log(np.maximum(sig, 1e-12)).sum())
            g = signs * (sig - 1.0)                   # m x (k+1), summed updates
            dH = np.einsum("mt,mtd->md", g, Ov)
            dO = g[:, :, None] * H[:, None, :]        # m x (k+1) x d
            WpT = Wp.T
            np.add.at(WpT, targets.ravel(), -lr * dO.reshape(-1, dO.shape[-1]))
            np.add.at(W, c, -lr * dH)
            step += 1
        if on_epoch:
            on_epoch(epoch, epoch_loss / n)


def train_skip_gram(
    token_streams: Sequence[Sequence[str]],
    cfg: TrainConfig | None = None,
    on_epoch: Callable[[int, float], None] | None = None,
) -> EmbeddingModel:
    """SGD over (center, context) pairs inside a fixed window.

    Deterministic for a given seed: vocabulary order, pair order and every
    random draw come from the seeded generator. Input rows start uniform in
    [-0.5/d, 0.5/d]; output starts at zero, which makes the initial softmax
    exactly uniform.
    """
    cfg = cfg or TrainConfig()
    vocab = build_vocab(token_streams, cfg.min_count)
    if not vocab:
        raise ValueError("empty vocabulary after applying min_count")
    index = {t: i for i, t in enumerate(vocab)}
    rng = np.random.default_rng(cfg.seed)
    W = (rng.random((len(vocab), cfg.dim)) - 0.5) / cfg.dim
    Wp = np.zeros((cfg.dim, len(vocab)))
    model = EmbeddingModel(
        vocab=vocab, input_matrix=W, output_matrix=Wp, dim=cfg.dim,
        mode=cfg.mode, seed=cfg.seed,
    )
    centers, contexts = _training_pairs(token_streams, index, cfg.window)
    if len(centers) == 0:
        logger.warning("no training pairs; returning the initialized model")
        return model
    if cfg.mode == "exact_softmax":
        _sgd_exact(model, centers, contexts, cfg, rng, on_epoch)
    else:
        counts = np.zeros(len(vocab))
        for ci in centers:
            counts[ci] += 1
        weights = np.maximum(counts, 1.0) ** 0.75
        noise_cdf = np.cumsum(weights / weights.sum())
        _sgd_negative(model, centers, contexts, cfg, rng, noise_cdf, on_epoch)
    if not np.all(np.isfinite(model.input_matrix)):
        raise ValueError("training diverged: non-finite input matrix")
    return model


def full_loss(model: EmbeddingModel, pairs: Sequence[tuple[str, str]]) -> float:
    loss, _, _ = loss_and_gradient(model, pairs)
    return loss


def nearest_neighbors(
    model: EmbeddingModel, term: str, k: int
) -> list[tuple[str, float]]:
    """Top-k tokens by cosine similarity of input rows, query excluded,
    descending with lexicographic tie-break. Out-of-vocabulary queries yield
    an empty list with a warning so callers can surface it."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if term not in model.index:
        logger.warning("term not in vocabulary: %r", term)
        return []
    i = model.index[term]
    W = model.input_matrix
    norms = np.linalg.norm(W, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    sims = (W @ W[i]) / (safe * (norms[i] if norms[i] else 1.0))
    sims[norms == 0.0] = 0.0
    if norms[i] == 0.0:
        sims[:] = 0.0
    order = sorted(
        (j for j in range(len(model.vocab)) if j != i),
        key=lambda j: (-sims[j], model.vocab[j]),
    )
    return [(model.vocab[j], float(sims[j])) for j in order[:k]]


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    """Binary layout: magic, |V|, d, mode, seed, length-prefixed utf-8 vocab,
    then W and W' row-major as little-endian float32."""
    parts = [
        _MAGIC,
        struct.pack("<IIBq", len(model.vocab), model.dim,
                    0 if model.mode == "exact_softmax" else 1, model.seed),
    ]
    for token in model.vocab:
        raw = token.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    parts.append(model.input_matrix.astype("<f4").tobytes())
    parts.append(model.output_matrix.astype("<f4").tobytes())
    atomic_write_bytes(path, b"".join(parts))


def load_model(path: str | Path) -> EmbeddingModel:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"not an embedding model file: {path}")
    off = 4
    vsize, dim, mode_byte, seed = struct.unpack_from("<IIBq", data, off)
    off += struct.calcsize("<IIBq")
    vocab = []
    for _ in range(vsize):
        (ln,) = struct.unpack_from("<H", data, off)
        off += 2
        vocab.append(data[off : off + ln].decode("utf-8"))
        off += ln
    need = vsize * dim * 4
    W = np.frombuffer(data, dtype="<f4", count=vsize * dim, offset=off).reshape(
        vsize, dim
    ).astype(np.float64)
    off += need
    Wp = np.frombuffer(data, dtype="<f4", count=dim * vsize, offset=off).reshape(
        dim, vsize
    ).astype(np.float64)
    return EmbeddingModel(
        vocab=vocab, input_matrix=W, output_matrix=Wp, dim=dim,
        mode="exact_softmax" if mode_byte == 0 else "negative_sampling", seed=seed,
    )


def export_text(model: EmbeddingModel, path: str | Path) -> None:
    """Plain-text export: header line "|V| d", then one token and its input
    vector per line."""
    lines = [f"{len(model.vocab)} {model.dim}"]
    for token, row in zip(model.vocab, model.input_matrix):
        lines.append(token + " " + " ".join(f"{v:.6f}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
