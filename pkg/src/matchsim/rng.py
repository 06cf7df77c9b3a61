"""Seedable random streams.

Every stream is keyed by a ``(master_seed, stream_id)`` pair and backed by
PCG64 seeded through ``numpy.random.SeedSequence``, so deriving a stream
never depends on any other stream having been used first.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

_U64 = 1 << 64
_BLOCK = 1024


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, int) or not 0 <= value < _U64:
                raise ContractViolation(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def child(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)


class Stream:
    """Uniform 64-bit words from one derived generator.

    Words are pulled from the bit generator in blocks; a stream must not be
    shared between threads.
    """

    __slots__ = ("seed", "_bitgen", "_buf", "_pos")

    def __init__(self, seed: SeedSpec):
        self.seed = seed
        sequence = np.random.SeedSequence([seed.master_seed, seed.stream_id])
        self._bitgen = np.random.PCG64(sequence)
        self._buf: list[int] = []
        self._pos = 0

    def next_u64(self) -> int:
        pos = self._pos
        if pos >= len(self._buf):
            self._buf = self._bitgen.random_raw(_BLOCK).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]

    def uniform_below(self, bound: int) -> int:
        """Exactly uniform integer in ``[0, bound)``."""
        if bound <= 1:
            if bound == 1:
                return 0
            raise ContractViolation(f"bound must be >= 1, got {bound}")
        if bound > _U64:
            return self._uniform_below_wide(bound)
        # largest multiple of bound that fits in 64 bits; words above it are redrawn
        zone = _U64 - _U64 % bound
        while True:
            pos = self._pos
            if pos >= len(self._buf):
                self._buf = self._bitgen.random_raw(_BLOCK).tolist()
                pos = 0
            self._pos = pos + 1
            word = self._buf[pos]
            if word < zone:
                return word % bound

    def _uniform_below_wide(self, bound: int) -> int:
        bits = bound.bit_length()
        words = (bits + 63) // 64
        excess = words * 64 - bits
        while True:
            value = 0
            for _ in range(words):
                value = (value << 64) | self.next_u64()
            value >>= excess
            if value < bound:
                return value

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle.

        Consumes words exactly as repeated :meth:`uniform_below` calls would;
        the draw is inlined because this loop dominates explicit sampling.
        """
        buf, pos, size = self._buf, self._pos, len(self._buf)
        for i in range(len(items) - 1, 0, -1):
            bound = i + 1
            zone = _U64 - _U64 % bound
            while True:
                if pos >= size:
                    buf = self._bitgen.random_raw(_BLOCK).tolist()
                    size, pos = _BLOCK, 0
                word = buf[pos]
                pos += 1
                if word < zone:
                    break
            j = word % bound
            items[i], items[j] = items[j], items[i]
        self._buf, self._pos = buf, pos


def derive_stream(seed: SeedSpec) -> Stream:
    return Stream(seed)


def uniform_below(stream: Stream, bound: int) -> int:
    return stream.uniform_below(bound)


def entropy_seed() -> int:
    """A fresh 64-bit master seed from the OS entropy pool."""
    return secrets.randbits(64)
