"""Context-triggered piecewise hashing (the classic spamsum digest).

A 7-byte rolling hash picks block boundaries wherever its value is congruent
to ``block_size - 1``; an FNV-style hash of each block contributes one
base64 character to the signature.  The scan runs at two block sizes at once
(``b`` and ``2b``) and is repeated at half the block size while the primary
signature comes out shorter than half its 64-character budget.

The rolling hash is computed vectorized: each of its three components
depends only on the last seven bytes, so they reduce to short sliding-window
sums/XORs.  The per-block FNV fold is inherently sequential and stays a
byte loop, but only the bytes that actually land in emitted blocks are
folded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ByteStream, FeatureVector

SPAMSUM_LENGTH = 64  # max characters in the primary digest
MIN_BLOCK_SIZE = 3
HASH_FEATURE_LENGTH = 40

_WINDOW = 7
_HASH_INIT = 0x28021967
_HASH_PRIME = 0x01000193
_U32 = 0xFFFFFFFF
_B64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/"
_B64_SET = frozenset(_B64)


@dataclass(frozen=True)
class FuzzyHash:
    """A piecewise hash: block size plus digests at that size and twice it."""

    block_size: int
    digest1: str
    digest2: str

    def __post_init__(self) -> None:
        q, r = divmod(self.block_size, MIN_BLOCK_SIZE)
        if r != 0 or q <= 0 or q & (q - 1):
            raise ValueError(f"block size {self.block_size} is not 3 * 2**k")
        if len(self.digest1) > SPAMSUM_LENGTH or len(self.digest2) > SPAMSUM_LENGTH // 2:
            raise ValueError("digest exceeds its length budget")
        if not _B64_SET.issuperset(self.digest1 + self.digest2):
            raise ValueError("digest contains non-base64 characters")

    @property
    def canonical(self) -> str:
        return f"{self.block_size}:{self.digest1}:{self.digest2}"

    def __str__(self) -> str:
        return self.canonical


def _roll_sums(buf: np.ndarray) -> np.ndarray:
    """Rolling-hash value after each byte, as uint32.

    The three classic components are window sums over the last 7 bytes:
    h1 the plain sum, h2 the age-weighted sum (newest byte weighted 7),
    h3 the shift-XOR fold, whose terms older than 7 bytes have been shifted
    past bit 31 and vanish mod 2**32.
    """
    n = buf.size
    c = buf.astype(np.uint64)
    h1 = np.zeros(n, dtype=np.uint64)
    h2 = np.zeros(n, dtype=np.uint64)
    h3 = np.zeros(n, dtype=np.uint64)
    for k in range(min(_WINDOW, n)):
        lane = c[: n - k]
        h1[k:] += lane
        h2[k:] += np.uint64(_WINDOW - k) * lane
        h3[k:] ^= lane << np.uint64(5 * k)
    return ((h1 + h2 + h3) & np.uint64(_U32)).astype(np.uint32)


def _fold_char(data: bytes, lo: int, hi: int) -> str:
    """Base64 character for the FNV fold of ``data[lo:hi]``."""
    h = _HASH_INIT
    for c in data[lo:hi]:
        h = ((h * _HASH_PRIME) & _U32) ^ c
    return _B64[h & 63]


def _piece_digest(data: bytes, triggers: np.ndarray, last_roll: int, cap: int) -> str:
    """Digest at one block size.

    ``triggers`` holds the byte indices where the rolling hash fired; the
    first ``cap`` of them each commit one character and reset the fold.
    Later triggers and the end-of-input flush share the final character
    slot, folding everything after the last committed block.
    """
    committed = min(len(triggers), cap)
    chars = []
    prev = 0
    for t in triggers[:committed]:
        t = int(t)
        chars.append(_fold_char(data, prev, t + 1))
        prev = t + 1
    if last_roll != 0:
        chars.append(_fold_char(data, prev, len(data)))
    elif len(triggers) > committed:
        # input ended with a dead rolling hash: the last slot keeps the value
        # written at the final trigger
        chars.append(_fold_char(data, prev, int(triggers[-1]) + 1))
    return "".join(chars)


def ssdeep_digest(data: ByteStream) -> FuzzyHash:
    """Piecewise hash of a byte stream; empty input hashes to ``3::``."""
    raw = data.data
    n = len(raw)
    if n:
        roll = _roll_sums(np.frombuffer(raw, dtype=np.uint8))
        last_roll = int(roll[-1])
    else:
        roll = np.empty(0, dtype=np.uint32)
        last_roll = 0

    block_size = MIN_BLOCK_SIZE
    while block_size * SPAMSUM_LENGTH < n:
        block_size *= 2

    while True:
        trig1 = np.flatnonzero(roll % np.uint32(block_size) == np.uint32(block_size - 1))
        trig2 = np.flatnonzero(
            roll % np.uint32(2 * block_size) == np.uint32(2 * block_size - 1)
        )
        digest1 = _piece_digest(raw, trig1, last_roll, SPAMSUM_LENGTH - 1)
        digest2 = _piece_digest(raw, trig2, last_roll, SPAMSUM_LENGTH // 2 - 1)
        if block_size > MIN_BLOCK_SIZE and len(trig1) < SPAMSUM_LENGTH // 2:
            block_size //= 2
        else:
            return FuzzyHash(block_size=block_size, digest1=digest1, digest2=digest2)


def hash_feature(digest: FuzzyHash) -> FeatureVector:
    """Fixed 40-slot numeric rendering of the canonical digest string.

    Code points of ``block:digest1:digest2``, truncated or zero-padded to
    exactly 40 entries.
    """
    codes = [float(ord(ch)) for ch in digest.canonical[:HASH_FEATURE_LENGTH]]
    codes.extend(0.0 for _ in range(HASH_FEATURE_LENGTH - len(codes)))
    return FeatureVector(kind="ssdeep", values=np.array(codes, dtype=np.float64))
