"""Latent Dirichlet Allocation via collapsed Gibbs sampling.

The sampler keeps flat token arrays plus doc-topic / topic-word count
matrices and resamples every token's topic once per sweep; the term-topic
matrix is averaged over post-burn-in sweeps. Uniform draws are generated
outside the kernel from a seeded numpy Generator, so runs are reproducible
and identical with and without numba.

Topic labels are arbitrary up to permutation; cross-run comparisons must
align topics first (e.g. by cosine over term-topic rows).
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gentnow.accel import maybe_jit
from gentnow.errors import ComputationError
from gentnow.seeds import derive_seed, token_hash


class TopicModelError(ComputationError):
    pass


@dataclass
class TopicModel:
    n_topics: int
    phi: np.ndarray  # (K, V) term weights per topic, rows sum to 1
    vocabulary: tuple
    alpha: float
    beta: float
    iterations: int
    burn_in: int
    min_count: int
    seed: int

    def __post_init__(self):
        self.vocab_index = {t: i for i, t in enumerate(self.vocabulary)}


@maybe_jit
def _gibbs_sweep(token_doc, token_word, z, n_dk, n_kw, n_k, alpha, beta, uniforms):
    n_topics = n_k.shape[0]
    vbeta = n_kw.shape[1] * beta
    cum = np.empty(n_topics)
    for t in range(token_doc.shape[0]):
        d = token_doc[t]
        w = token_word[t]
        k_old = z[t]
        n_dk[d, k_old] -= 1
        n_kw[k_old, w] -= 1
        n_k[k_old] -= 1
        total = 0.0
        for k in range(n_topics):
            total += (n_kw[k, w] + beta) / (n_k[k] + vbeta) * (n_dk[d, k] + alpha)
            cum[k] = total
        r = uniforms[t] * total
        k_new = 0
        while k_new < n_topics - 1 and cum[k_new] <= r:
            k_new += 1
        z[t] = k_new
        n_dk[d, k_new] += 1
        n_kw[k_new, w] += 1
        n_k[k_new] += 1


@maybe_jit
def _infer_sweep(token_word, z, n_k_doc, phi, alpha, uniforms):
    n_topics = phi.shape[0]
    cum = np.empty(n_topics)
    for t in range(token_word.shape[0]):
        w = token_word[t]
        n_k_doc[z[t]] -= 1
        total = 0.0
        for k in range(n_topics):
            total += phi[k, w] * (n_k_doc[k] + alpha)
            cum[k] = total
        r = uniforms[t] * total
        k_new = 0
        while k_new < n_topics - 1 and cum[k_new] <= r:
            k_new += 1
        z[t] = k_new
        n_k_doc[k_new] += 1


def build_vocabulary(corpus, min_count):
    counts = {}
    for tokens in corpus:
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
    vocab = tuple(sorted(t for t, c in counts.items() if c >= min_count))
    return vocab


def _flatten(corpus, vocab_index):
    token_doc, token_word = [], []
    for d, tokens in enumerate(corpus):
        for t in tokens:
            w = vocab_index.get(t)
            if w is not None:
                token_doc.append(d)
                token_word.append(w)
    return (
        np.asarray(token_doc, dtype=np.int32),
        np.asarray(token_word, dtype=np.int32),
    )


def fit_lda(corpus, n_topics, alpha=None, beta=0.01, iterations=1000, burn_in=200,
            seed=0, min_count=5):
    """Fit an LDA model with collapsed Gibbs sampling; deterministic given seed.

    ``alpha`` defaults to 50/K. The term-topic matrix is the average of the
    smoothed count estimate over post-burn-in sweeps.
    """
    corpus = list(corpus)
    if not corpus:
        raise TopicModelError("cannot fit topics on an empty corpus")
    if n_topics < 1:
        raise TopicModelError("n_topics must be >= 1")
    if iterations <= burn_in or burn_in < 0:
        raise TopicModelError("need iterations > burn_in >= 0")
    if alpha is None:
        alpha = 50.0 / n_topics

    vocab = build_vocabulary(corpus, min_count)
    if not vocab:
        raise TopicModelError("vocabulary is empty (min_count too high?)")
    if n_topics > len(vocab):
        raise TopicModelError(
            f"n_topics={n_topics} exceeds vocabulary size {len(vocab)}"
        )
    vocab_index = {t: i for i, t in enumerate(vocab)}
    token_doc, token_word = _flatten(corpus, vocab_index)
    n_docs, n_vocab = len(corpus), len(vocab)

    rng = np.random.default_rng(seed)
    z = rng.integers(0, n_topics, size=token_doc.shape[0]).astype(np.int32)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_kw = np.zeros((n_topics, n_vocab), dtype=np.int64)
    np.add.at(n_dk, (token_doc, z), 1)
    np.add.at(n_kw, (z, token_word), 1)
    n_k = n_kw.sum(axis=1)

    phi_acc = np.zeros((n_topics, n_vocab))
    for it in range(iterations):
        uniforms = rng.random(token_doc.shape[0])
        _gibbs_sweep(token_doc, token_word, z, n_dk, n_kw, n_k, alpha, beta, uniforms)
        if it >= burn_in:
            phi_acc += (n_kw + beta) / (n_k + n_vocab * beta)[:, None]
    phi = phi_acc / (iterations - burn_in)
    phi /= phi.sum(axis=1, keepdims=True)

    return TopicModel(
        n_topics=n_topics, phi=phi, vocabulary=vocab, alpha=float(alpha),
        beta=float(beta), iterations=iterations, burn_in=burn_in,
        min_count=min_count, seed=seed,
    )


def infer_topics(model, tokens, iterations=100, burn_in=50, seed=None):
    """Topic distribution of one tokenized review under a fitted model.

    Gibbs inference with the term-topic matrix frozen. Out-of-vocabulary
    tokens are dropped; a review with no in-vocabulary tokens gets the
    uniform distribution. The inference seed defaults to a stable function of
    the model seed and the token stream, so results do not depend on the
    order reviews are processed in.
    """
    k = model.n_topics
    ids = [model.vocab_index[t] for t in tokens if t in model.vocab_index]
    if not ids:
        return np.full(k, 1.0 / k)
    if seed is None:
        seed = derive_seed(model.seed, token_hash(tokens))
    token_word = np.asarray(ids, dtype=np.int32)
    rng = np.random.default_rng(seed)
    z = rng.integers(0, k, size=token_word.shape[0]).astype(np.int32)
    n_k_doc = np.bincount(z, minlength=k).astype(np.int64)
    acc = np.zeros(k)
    for it in range(iterations):
        uniforms = rng.random(token_word.shape[0])
        _infer_sweep(token_word, z, n_k_doc, model.phi, model.alpha, uniforms)
        if it >= burn_in:
            acc += n_k_doc + model.alpha
    theta = acc / acc.sum()
    return theta


def perplexity(model, corpus, iterations=100, burn_in=50):
    """exp(-mean log-likelihood per token) on a held-out corpus; lower is better."""
    total_ll = 0.0
    n_tokens = 0
    for tokens in corpus:
        ids = [model.vocab_index[t] for t in tokens if t in model.vocab_index]
        if not ids:
            continue
        theta = infer_topics(model, tokens, iterations=iterations, burn_in=burn_in)
        for w in ids:
            p = float(theta @ model.phi[:, w])
            total_ll += np.log(p)
            n_tokens += 1
    if n_tokens == 0:
        raise TopicModelError("held-out corpus has no in-vocabulary tokens")
    return float(np.exp(-total_ll / n_tokens))


def select_k(corpus, candidates, seed=0, holdout_fraction=0.2, folds=1,
             iterations=1000, burn_in=200, alpha=None, beta=0.01, min_count=5,
             infer_iterations=100, infer_burn_in=50):
    """Pick the topic count with the lowest held-out perplexity.

    Returns ``(best_k, table)`` where ``table`` maps each candidate to its
    mean held-out perplexity across folds. Ties go to the smaller K.
    """
    candidates = sorted(set(int(k) for k in candidates))
    if not candidates:
        raise TopicModelError("no candidate topic counts")
    corpus = list(corpus)
    rng = np.random.default_rng(derive_seed(seed, 0x5E1))
    order = rng.permutation(len(corpus))
    n_hold = max(1, int(round(holdout_fraction * len(corpus))))
    if n_hold >= len(corpus):
        raise TopicModelError("holdout fraction leaves no training documents")

    table = {k: [] for k in candidates}
    for fold in range(folds):
        lo = (fold * n_hold) % len(corpus)
        hold_idx = set(order[lo:lo + n_hold].tolist())
        train = [corpus[i] for i in range(len(corpus)) if i not in hold_idx]
        hold = [corpus[i] for i in sorted(hold_idx)]
        for k in candidates:
            model = fit_lda(
                train, k, alpha=alpha, beta=beta, iterations=iterations,
                burn_in=burn_in, seed=derive_seed(seed, k, fold),
                min_count=min_count,
            )
            table[k].append(
                perplexity(model, hold, iterations=infer_iterations,
                           burn_in=infer_burn_in)
            )
    means = {k: float(np.mean(v)) for k, v in table.items()}
    best = min(candidates, key=lambda k: (means[k], k))
    return best, means


def align_topics(phi_a, phi_b):
    """Greedy best-match alignment between two term-topic matrices.

    Topic identities are arbitrary across runs; this pairs each row of
    ``phi_a`` with its closest unmatched row of ``phi_b`` by cosine, highest
    similarity first. Returns a list of (index_a, index_b, cosine).
    """
    a = np.asarray(phi_a, dtype=float)
    b = np.asarray(phi_b, dtype=float)
    if a.shape != b.shape:
        raise TopicModelError("term-topic matrices must share shape to align")
    an = a / np.linalg.norm(a, axis=1, keepdims=True)
    bn = b / np.linalg.norm(b, axis=1, keepdims=True)
    sims = an @ bn.T
    pairs = []
    free_a = set(range(a.shape[0]))
    free_b = set(range(b.shape[0]))
    while free_a:
        i, j = max(((i, j) for i in free_a for j in free_b),
                   key=lambda ij: sims[ij])
        pairs.append((i, j, float(sims[i, j])))
        free_a.remove(i)
        free_b.remove(j)
    return pairs


def top_words(model, topic, n=15):
    """Highest-weight terms of one topic; ties break lexicographically."""
    if not 0 <= topic < model.n_topics:
        raise IndexError(f"topic {topic} out of range for K={model.n_topics}")
    weights = model.phi[topic]
    order = sorted(range(len(model.vocabulary)),
                   key=lambda i: (-weights[i], model.vocabulary[i]))
    return [(model.vocabulary[i], float(weights[i])) for i in order[:n]]


_FORMAT_VERSION = 1


def save_model(model, directory):
    """Persist a fitted model as phi.npy + vocab.txt + meta.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.save(directory / "phi.npy", model.phi)
    (directory / "vocab.txt").write_text("\n".join(model.vocabulary) + "\n", encoding="utf-8")
    meta = {
        "format_version": _FORMAT_VERSION,
        "n_topics": model.n_topics,
        "alpha": model.alpha,
        "beta": model.beta,
        "iterations": model.iterations,
        "burn_in": model.burn_in,
        "min_count": model.min_count,
        "seed": model.seed,
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")


def load_model(directory):
    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
    if meta.get("format_version") != _FORMAT_VERSION:
        raise TopicModelError(f"unsupported model format {meta.get('format_version')}")
    phi = np.load(directory / "phi.npy")
    vocab = tuple((directory / "vocab.txt").read_text(encoding="utf-8").splitlines())
    return TopicModel(
        n_topics=meta["n_topics"], phi=phi, vocabulary=vocab, alpha=meta["alpha"],
        beta=meta["beta"], iterations=meta["iterations"], burn_in=meta["burn_in"],
        min_count=meta["min_count"], seed=meta["seed"],
    )
