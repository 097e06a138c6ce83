"""Deterministic seed derivation.

Every stochastic stage derives its own seed from the run's master seed and a
few integer keys via numpy's SeedSequence mixing, so reruns are reproducible
and concurrent stages never share a stream. Text inputs (e.g. per-review
inference) are keyed by a CRC32 of the token stream; Python's builtin
``hash`` is salted per process and must not be used here.
"""

import zlib

import numpy as np


def derive_seed(master_seed, *keys):
    """Child seed from ``master_seed`` and integer ``keys`` (stable across runs)."""
    seq = np.random.SeedSequence([int(master_seed), *[int(k) & 0xFFFFFFFF for k in keys]])
    return int(seq.generate_state(1)[0])


def token_hash(tokens):
    """Stable 32-bit hash of a token sequence."""
    return zlib.crc32("\x1f".join(tokens).encode("utf-8"))
