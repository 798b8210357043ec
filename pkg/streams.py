"""Counter-based random streams.

A stream is identified by (seed, label). Its sample index space is cut into
fixed-size blocks; block ``b`` is generated by a Philox generator whose key is a
hash of (seed, label) and whose counter starts with ``b`` in the high word.
Samplers always draw a full block and the caller truncates, so the value at
index ``i`` depends only on (seed, label, i), never on how blocks are spread
over workers.
"""
import hashlib
from typing import Union

import numpy as np

_COUNTER_SHIFT = 192


class RandomStream:
    __slots__ = ('seed', 'label', 'block_size', '_key')

    def __init__(self, seed: int, label: str = 'root', block_size: int = 4096):
        if block_size < 1:
            raise ValueError("block_size must be positive")
        self.seed = int(seed)
        self.label = label
        self.block_size = int(block_size)
        digest = hashlib.sha256(f"{self.seed}:{label}".encode()).digest()
        self._key = int.from_bytes(digest[:16], 'little')

    def child(self, label: str) -> 'RandomStream':
        return RandomStream(self.seed, f"{self.label}/{label}", self.block_size)

    def block(self, index: int) -> np.random.Generator:
        """Generator for block ``index``; independent of every other block."""
        if index < 0:
            raise ValueError("block index must be non-negative")
        bit_generator = np.random.Philox(counter=int(index) << _COUNTER_SHIFT, key=self._key)
        return np.random.Generator(bit_generator)

    def generator(self) -> np.random.Generator:
        return self.block(0)

    def n_blocks(self, n_samples: int) -> int:
        return -(-int(n_samples) // self.block_size)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, label={self.label!r})"


RandomSource = Union[RandomStream, np.random.Generator, int, None]


def as_generator(source: RandomSource) -> np.random.Generator:
    """Accept a stream, a numpy Generator or an integer seed."""
    if isinstance(source, np.random.Generator):
        return source
    if isinstance(source, RandomStream):
        return source.generator()
    return np.random.default_rng(source)
