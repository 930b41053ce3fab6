"""Value types shared by every other module: genomes, populations, seeded RNG streams.

All randomness in the library flows through RandomSource so that a run is
reproducible from (seed, stream) alone, on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np


@dataclass(frozen=True)
class RandomSource:
    """A named, replayable random stream.

    Two RandomSource values with the same (seed, stream) produce identical
    draw sequences; distinct streams derived from one seed are independent.
    Ensembles give run i the stream id i and share a single master seed.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.stream < 0:
            raise ValueError("seed and stream must be non-negative")

    def generator(self) -> np.random.Generator:
        """Fresh generator at the start of this stream."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def derive(self, stream: int) -> "RandomSource":
        """Same seed, different stream id."""
        return RandomSource(self.seed, stream)


RngLike = Union[RandomSource, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Accept either a RandomSource or a live Generator; return a Generator."""
    if isinstance(rng, RandomSource):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise ValueError(f"not a random source: {rng!r}")


class Genome:
    """Immutable fixed-length bit string.

    Backed by a read-only uint8 array; equality and hashing use the bit
    pattern, so genomes work as dict keys and set members.
    """

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int]):
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits,
                         dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("genome must be a non-empty 1-d bit sequence")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("genome bits must be 0 or 1")
        arr = arr.copy()
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def from_string(cls, s: str) -> "Genome":
        return cls([int(c) for c in s])

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def __len__(self) -> int:
        return int(self._bits.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Genome):
            return NotImplemented
        return self._bits.size == other._bits.size and bool(
            np.all(self._bits == other._bits))

    def __hash__(self) -> int:
        return hash(self._bits.tobytes())

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    def __repr__(self) -> str:
        return f"Genome({self})"


def hamming_distance(a: Genome, b: Genome) -> int:
    """Number of positions at which two equal-length genomes differ."""
    if len(a) != len(b):
        raise ValueError(f"genome lengths differ: {len(a)} vs {len(b)}")
    return int(np.count_nonzero(a.bits != b.bits))


def random_genome(length: int, rng: RngLike) -> Genome:
    """Uniform random genome: each bit independently 0 or 1 with p=1/2."""
    if length < 1:
        raise ValueError("genome length must be >= 1")
    gen = as_generator(rng)
    return Genome(gen.integers(0, 2, size=length, dtype=np.uint8))


@dataclass(frozen=True)
class Individual:
    """A genome with an optional cached fitness."""

    genome: Genome
    fitness: Optional[float] = None

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None

    def require_fitness(self) -> float:
        if self.fitness is None:
            raise ValueError("individual has not been evaluated")
        return self.fitness


class Population:
    """Ordered multiset of equal-length genomes, optionally evaluated as a cohort.

    Internally a (size, length) uint8 bit matrix plus an optional float64
    fitness vector.  The engine manipulates the arrays directly; `members`
    materialises Individual values for callers that want the object view.
    """

    __slots__ = ("_bits", "_fitness")

    def __init__(self, bits: np.ndarray, fitness: Optional[np.ndarray] = None):
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[0] == 0 or bits.shape[1] == 0:
            raise ValueError("population needs a non-empty 2-d bit matrix")
        if not np.all((bits == 0) | (bits == 1)):
            raise ValueError("population bits must be 0 or 1")
        bits = bits.copy()
        bits.setflags(write=False)
        self._bits = bits
        if fitness is not None:
            fitness = np.asarray(fitness, dtype=np.float64).copy()
            if fitness.shape != (bits.shape[0],):
                raise ValueError("fitness vector length must match population size")
            fitness.setflags(write=False)
        self._fitness = fitness

    @classmethod
    def from_members(cls, members: Sequence[Individual]) -> "Population":
        if not members:
            raise ValueError("population must not be empty")
        bits = np.stack([ind.genome.bits for ind in members])
        if all(ind.evaluated for ind in members):
            fit = np.array([ind.fitness for ind in members], dtype=np.float64)
        elif any(ind.evaluated for ind in members):
            raise ValueError("population must be evaluated all-or-none")
        else:
            fit = None
        return cls(bits, fit)

    @classmethod
    def random(cls, size: int, length: int, rng: RngLike) -> "Population":
        if size < 1:
            raise ValueError("population size must be >= 1")
        gen = as_generator(rng)
        return cls(gen.integers(0, 2, size=(size, length), dtype=np.uint8))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def fitness(self) -> np.ndarray:
        if self._fitness is None:
            raise ValueError("population has not been evaluated")
        return self._fitness

    @property
    def evaluated(self) -> bool:
        return self._fitness is not None

    @property
    def size(self) -> int:
        return int(self._bits.shape[0])

    @property
    def genome_length(self) -> int:
        return int(self._bits.shape[1])

    def with_fitness(self, fitness: np.ndarray) -> "Population":
        return Population(self._bits, fitness)

    def member(self, i: int) -> Individual:
        fit = None if self._fitness is None else float(self._fitness[i])
        return Individual(Genome(self._bits[i]), fit)

    @property
    def members(self) -> tuple:
        return tuple(self.member(i) for i in range(self.size))

    def __len__(self) -> int:
        return self.size


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a (n, length) bit matrix into (n, ceil(length/64)) uint64 words.

    Used for fast Hamming distances; bit j of word w holds gene 64*w + j.
    """
    n, length = bits.shape
    words = (length + 63) // 64
    out = np.zeros((n, words), dtype=np.uint64)
    for w in range(words):
        chunk = bits[:, 64 * w:64 * (w + 1)].astype(np.uint64)
        shifts = np.arange(chunk.shape[1], dtype=np.uint64)
        out[:, w] = (chunk << shifts).sum(axis=1, dtype=np.uint64)
    return out


def unpack_bits(packed: np.ndarray, length: int) -> np.ndarray:
    """Inverse of pack_bits."""
    n, words = packed.shape
    out = np.zeros((n, length), dtype=np.uint8)
    for w in range(words):
        hi = min(length - 64 * w, 64)
        shifts = np.arange(hi, dtype=np.uint64)
        out[:, 64 * w:64 * w + hi] = (
            (packed[:, w:w + 1] >> shifts) & np.uint64(1)).astype(np.uint8)
    return out
