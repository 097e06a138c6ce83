"""Paragraph-vector document embeddings (PV-DBOW with negative sampling).

Each document vector is trained by stochastic gradient steps to predict the
document's own words against negatives drawn from the unigram^0.75 noise
distribution; there is no context window, so vectors reflect document word
frequencies. All randomness (init, per-epoch document order, negative
samples) comes from a seeded numpy Generator outside the kernels: the default
sequential mode is bit-reproducible and identical with or without numba. The
opt-in parallel mode trains documents hogwild-style across threads and is
documented as nondeterministic run to run.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gentnow.accel import JIT_ENABLED, maybe_jit, prange
from gentnow.errors import ComputationError
from gentnow.seeds import derive_seed, token_hash


class EmbeddingError(ComputationError):
    pass


@dataclass
class EmbeddingModel:
    dim: int
    doc_vectors: np.ndarray  # (n_docs, dim)
    word_vectors: np.ndarray  # (V, dim) output vectors
    vocabulary: tuple
    word_counts: np.ndarray
    epochs: int
    negative: int
    alpha0: float
    alpha_min: float
    min_count: int
    seed: int
    parallel: bool

    def __post_init__(self):
        self.vocab_index = {t: i for i, t in enumerate(self.vocabulary)}
        self.noise_cum = _noise_cumulative(self.word_counts)


def _noise_cumulative(counts):
    weights = np.asarray(counts, dtype=float) ** 0.75
    cum = np.cumsum(weights / weights.sum())
    cum[-1] = 1.0
    return cum


def _sample_negatives(rng, noise_cum, shape):
    idx = np.searchsorted(noise_cum, rng.random(shape), side="right")
    return np.minimum(idx, len(noise_cum) - 1).astype(np.int32)


@maybe_jit
def _update_position(doc_vec, word_vectors, target, negatives, neg_row, lr,
                     negative, freeze_words):
    dim = doc_vec.shape[0]
    neu1e = np.zeros(dim)
    for s in range(negative + 1):
        if s == 0:
            t = target
            label = 1.0
        else:
            t = negatives[neg_row, s - 1]
            if t == target:
                continue
            label = 0.0
        f = 0.0
        for c in range(dim):
            f += doc_vec[c] * word_vectors[t, c]
        # word2vec-style clamp keeps exp() finite in interpreted mode too
        if f > 6.0:
            sig = 1.0
        elif f < -6.0:
            sig = 0.0
        else:
            sig = 1.0 / (1.0 + math.exp(-f))
        g = (label - sig) * lr
        for c in range(dim):
            neu1e[c] += g * word_vectors[t, c]
            if not freeze_words:
                word_vectors[t, c] += g * doc_vec[c]
    for c in range(dim):
        doc_vec[c] += neu1e[c]


@maybe_jit
def _train_epoch(doc_order, doc_offsets, token_ids, doc_vectors, word_vectors,
                 negatives, alpha0, alpha_min, epoch, n_epochs, negative):
    n_tokens = token_ids.shape[0]
    total = float(n_epochs) * n_tokens
    for di in range(doc_order.shape[0]):
        d = doc_order[di]
        for p in range(doc_offsets[d], doc_offsets[d + 1]):
            lr = alpha0 * (1.0 - (epoch * n_tokens + p) / total)
            if lr < alpha_min:
                lr = alpha_min
            _update_position(doc_vectors[d], word_vectors, token_ids[p],
                             negatives, p, lr, negative, False)


@maybe_jit(parallel=True)
def _train_epoch_parallel(doc_order, doc_offsets, token_ids, doc_vectors,
                          word_vectors, negatives, alpha0, alpha_min, epoch,
                          n_epochs, negative):
    # hogwild: concurrent lock-free updates; nondeterministic by design
    n_tokens = token_ids.shape[0]
    total = float(n_epochs) * n_tokens
    for di in prange(doc_order.shape[0]):
        d = doc_order[di]
        for p in range(doc_offsets[d], doc_offsets[d + 1]):
            lr = alpha0 * (1.0 - (epoch * n_tokens + p) / total)
            if lr < alpha_min:
                lr = alpha_min
            _update_position(doc_vectors[d], word_vectors, token_ids[p],
                             negatives, p, lr, negative, False)


@maybe_jit
def _infer_steps(vec, word_vectors, token_ids, negatives, alpha0, alpha_min,
                 steps, negative):
    n_tokens = token_ids.shape[0]
    total = float(steps) * n_tokens
    row = 0
    for s_i in range(steps):
        for p in range(n_tokens):
            lr = alpha0 * (1.0 - (s_i * n_tokens + p) / total)
            if lr < alpha_min:
                lr = alpha_min
            _update_position(vec, word_vectors, token_ids[p], negatives, row,
                             lr, negative, True)
            row += 1


def fit_embeddings(corpus, dim=25, epochs=20, negative=5, alpha0=0.025,
                   alpha_min=0.0001, min_count=5, seed=0, parallel=False):
    """Train document embeddings; deterministic given seed unless ``parallel``."""
    corpus = list(corpus)
    if not corpus:
        raise EmbeddingError("cannot fit embeddings on an empty corpus")
    if dim < 1:
        raise EmbeddingError("dimension must be >= 1")

    counts = {}
    for tokens in corpus:
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
    vocab = tuple(sorted(t for t, c in counts.items() if c >= min_count))
    if not vocab:
        raise EmbeddingError("vocabulary is empty (min_count too high?)")
    vocab_index = {t: i for i, t in enumerate(vocab)}
    word_counts = np.array([counts[t] for t in vocab], dtype=np.int64)

    token_ids = []
    doc_offsets = np.zeros(len(corpus) + 1, dtype=np.int64)
    for d, tokens in enumerate(corpus):
        ids = [vocab_index[t] for t in tokens if t in vocab_index]
        token_ids.extend(ids)
        doc_offsets[d + 1] = len(token_ids)
    token_ids = np.asarray(token_ids, dtype=np.int32)
    if token_ids.size == 0:
        raise EmbeddingError("no in-vocabulary tokens to train on")

    rng = np.random.default_rng(seed)
    doc_vectors = (rng.random((len(corpus), dim)) - 0.5) / dim
    word_vectors = np.zeros((len(vocab), dim))
    noise_cum = _noise_cumulative(word_counts)

    epoch_fn = _train_epoch_parallel if (parallel and JIT_ENABLED) else _train_epoch
    for epoch in range(epochs):
        order = rng.permutation(len(corpus)).astype(np.int64)
        negatives = _sample_negatives(rng, noise_cum, (token_ids.size, negative))
        epoch_fn(order, doc_offsets, token_ids, doc_vectors, word_vectors,
                 negatives, alpha0, alpha_min, epoch, epochs, negative)

    return EmbeddingModel(
        dim=dim, doc_vectors=doc_vectors, word_vectors=word_vectors,
        vocabulary=vocab, word_counts=word_counts, epochs=epochs,
        negative=negative, alpha0=alpha0, alpha_min=alpha_min,
        min_count=min_count, seed=seed, parallel=parallel,
    )


def infer_vector(model, tokens, steps=50, seed=None):
    """Embed one tokenized review with word vectors frozen.

    Out-of-vocabulary tokens are dropped; a review with no in-vocabulary
    tokens maps to the zero vector. The seed defaults to a stable function of
    the model seed and the token stream.
    """
    ids = [model.vocab_index[t] for t in tokens if t in model.vocab_index]
    if not ids:
        return np.zeros(model.dim)
    if seed is None:
        seed = derive_seed(model.seed, token_hash(tokens))
    rng = np.random.default_rng(seed)
    vec = (rng.random(model.dim) - 0.5) / model.dim
    token_ids = np.asarray(ids, dtype=np.int32)
    negatives = _sample_negatives(
        rng, model.noise_cum, (steps * token_ids.size, model.negative)
    )
    _infer_steps(vec, model.word_vectors, token_ids, negatives, model.alpha0,
                 model.alpha_min, steps, model.negative)
    return vec


def cosine(u, v):
    """Cosine similarity in [-1, 1]; zero vectors compare as 0 by convention."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise EmbeddingError(f"length mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


_FORMAT_VERSION = 1


def save_model(model, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.save(directory / "doc_vectors.npy", model.doc_vectors)
    np.save(directory / "word_vectors.npy", model.word_vectors)
    np.save(directory / "word_counts.npy", model.word_counts)
    (directory / "vocab.txt").write_text("\n".join(model.vocabulary) + "\n", encoding="utf-8")
    meta = {
        "format_version": _FORMAT_VERSION,
        "dim": model.dim,
        "epochs": model.epochs,
        "negative": model.negative,
        "alpha0": model.alpha0,
        "alpha_min": model.alpha_min,
        "min_count": model.min_count,
        "seed": model.seed,
        "parallel": model.parallel,
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")


def load_model(directory):
    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
    if meta.get("format_version") != _FORMAT_VERSION:
        raise EmbeddingError(f"unsupported model format {meta.get('format_version')}")
    return EmbeddingModel(
        dim=meta["dim"],
        doc_vectors=np.load(directory / "doc_vectors.npy"),
        word_vectors=np.load(directory / "word_vectors.npy"),
        vocabulary=tuple((directory / "vocab.txt").read_text(encoding="utf-8").splitlines()),
        word_counts=np.load(directory / "word_counts.npy"),
        epochs=meta["epochs"], negative=meta["negative"], alpha0=meta["alpha0"],
        alpha_min=meta["alpha_min"], min_count=meta["min_count"],
        seed=meta["seed"], parallel=meta["parallel"],
    )
