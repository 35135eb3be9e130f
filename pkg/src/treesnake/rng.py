"""Deterministic, splittable random streams.

Every experiment in this package draws from an :class:`RngStream` addressed
by ``(master_seed, stream_path)``.  Keys are derived by hashing the seed and
path (BLAKE2b) and feed a counter-based Philox generator, so the output is a
pure function of ``(master_seed, stream_path, draw_index)``: replaying a
stream yields identical bits no matter what other streams were consumed in
between, and no matter how many workers the run was split over.

Hot loops compiled with numba cannot hold a numpy ``Generator``; for those,
:meth:`RngStream.kernel_key` derives a 64-bit key from the same address
space, consumed by the splitmix64-style counter generator in
:mod:`treesnake.kernels`.
"""

from __future__ import annotations

import hashlib

import numpy as np

_DOMAIN_GENERATOR = b"treesnake.stream.v1"
_DOMAIN_KERNEL = b"treesnake.kernel.v1"

MASK64 = (1 << 64) - 1


def _hash_path(domain: bytes, master_seed: int, path: tuple) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    h.update(domain)
    h.update(int(master_seed & MASK64).to_bytes(8, "little"))
    for p in path:
        h.update(b"/")
        h.update(int(p).to_bytes(8, "little"))
    return h.digest()


class RngStream:
    """A value-like handle for one deterministic random stream.

    Streams are cheap to create and immutable in configuration; workers
    derive their own streams by path instead of sharing generator state.
    """

    __slots__ = ("master_seed", "path", "_gen")

    def __init__(self, master_seed: int, path=()):
        path = tuple(int(p) for p in path)
        if any(p < 0 for p in path):
            raise ValueError("stream path elements must be non-negative")
        self.master_seed = int(master_seed) & MASK64
        self.path = path
        self._gen = None

    def derive(self, *extra) -> "RngStream":
        """Child stream at ``path + extra``; independent of this one."""
        return RngStream(self.master_seed, self.path + tuple(extra))

    def key128(self) -> int:
        """128-bit Philox key for this ``(seed, path)`` address."""
        return int.from_bytes(
            _hash_path(_DOMAIN_GENERATOR, self.master_seed, self.path), "little"
        )

    def kernel_key(self) -> int:
        """64-bit key for the in-kernel counter generator (distinct domain)."""
        return int.from_bytes(
            _hash_path(_DOMAIN_KERNEL, self.master_seed, self.path)[:8], "little"
        )

    def generator(self) -> np.random.Generator:
        """A fresh numpy Generator positioned at draw index 0."""
        return np.random.Generator(np.random.Philox(key=self.key128()))

    @property
    def gen(self) -> np.random.Generator:
        """Lazily-created generator owned by this handle (sequential draws)."""
        if self._gen is None:
            self._gen = self.generator()
        return self._gen

    # -- scalar conveniences used by the pure-Python samplers ---------------

    def u64(self) -> int:
        return int(self.gen.integers(0, 1 << 64, dtype=np.uint64))

    def random(self) -> float:
        return float(self.gen.random())

    def randbelow(self, n: int) -> int:
        """Uniform integer in  [0, n)."""
        return int(self.gen.integers(0, n))

    def coin(self) -> int:
        return int(self.gen.integers(0, 2))

    def __repr__(self):
        return f"RngStream(seed={self.master_seed}, path={list(self.path)})"


def derive_stream(master_seed: int, path) -> RngStream:
    """Stream addressed by ``(master_seed, path)``; disjoint paths give
    statistically independent output."""
    return RngStream(master_seed, path)
