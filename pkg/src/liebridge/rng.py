"""Deterministic counter-based random streams for parallel Monte Carlo.

Every path, bridge, and observation draws from its own Philox substream
identified by (seed, domain, index, subindex). The indices live in the two
high words of the 256-bit Philox counter while generation increments the low
word, so each substream has 2^128 blocks of headroom and substreams never
overlap. Samples are therefore a pure function of their identity, independent
of chunking, worker count, and draw order elsewhere.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import ArgumentError

_MASK64 = (1 << 64) - 1

# Stream namespaces. Hashed rather than enumerated so adding one never
# renumbers the others, which would silently change every downstream sample.
DOMAIN_BM = "bm-path"
DOMAIN_BRIDGE = "bridge"
DOMAIN_MLE_BRIDGE = "mle-bridge"
DOMAIN_OBSERVATION = "observation"


def _domain_word(domain: str) -> int:
    digest = hashlib.blake2b(domain.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def metric_salt(a: np.ndarray) -> int:
    """Stable 64-bit tag of a metric's bytes.

    Folded into the stream key when common random numbers are off, so that
    different metrics see decorrelated noise.
    """
    buf = np.ascontiguousarray(a, dtype=float).tobytes()
    return int.from_bytes(hashlib.blake2b(buf, digest_size=8).digest(), "little")


def substream(seed: int, domain: str, index: int = 0, subindex: int = 0,
              salt: int = 0) -> np.random.Generator:
    """Generator for the (seed, domain, index, subindex) substream.

    Raises:
        ArgumentError: negative index or subindex.
    """
    if index < 0 or subindex < 0:
        raise ArgumentError("substream indices must be nonnegative")
    key = np.array([seed & _MASK64, _domain_word(domain) ^ (salt & _MASK64)],
                   dtype=np.uint64)
    counter = np.array([0, 0, index & _MASK64, subindex & _MASK64],
                       dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def normals(seed: int, domain: str, index: int, shape,
            subindex: int = 0, salt: int = 0) -> np.ndarray:
    """Standard-normal draws from one substream, shaped as requested."""
    gen = substream(seed, domain, index, subindex=subindex, salt=salt)
    return gen.standard_normal(shape)
