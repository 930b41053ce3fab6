"""Deceptive trap benchmark functions built from concatenated unitation blocks.

Three block variants are supported:

* ``standard``  - fully deceptive trap; single global block optimum at all-ones.
* ``modified``  - trap with the all-zeros configuration raised to the global
  value, so each block has two optima and an m-block problem has 2^m.
* ``bipolar``   - folded trap in the distance from half-ones; block optima at
  all-zeros and all-ones with a deceptive attractor at half-ones.

Blocks are contiguous and non-overlapping: block i covers genes
[i*k, (i+1)*k).  Fitness is the sum of the per-block values, so the problems
are additively separable and the per-block schema statistics below are exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from .core import Genome, Population

VARIANTS = ("standard", "modified", "bipolar")

# problems small enough to enumerate their optima exactly
ENUMERATION_CAP_M = 12


@dataclass(frozen=True)
class ProblemSpec:
    """A concatenated trap instance: m blocks of k bits each."""

    variant: str
    blocks: int
    block_size: int

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.blocks < 1:
            raise ValueError("need at least one block")
        if self.block_size < 2:
            raise ValueError("block size must be >= 2")
        if self.variant == "bipolar":
            if self.block_size % 2 != 0 or self.block_size < 4:
                raise ValueError("bipolar blocks must have even size >= 4")

    @property
    def length(self) -> int:
        return self.blocks * self.block_size

    @property
    def optima_per_block(self) -> int:
        return 1 if self.variant == "standard" else 2

    @property
    def optima_count(self) -> int:
        return self.optima_per_block ** self.blocks

    def block_genes(self, block: int) -> Tuple[int, ...]:
        self._check_block(block)
        k = self.block_size
        return tuple(range(block * k, (block + 1) * k))

    def block_partition(self) -> Tuple[Tuple[int, ...], ...]:
        """The true linkage groups, one per block."""
        return tuple(self.block_genes(b) for b in range(self.blocks))

    def _check_block(self, block: int):
        if not 0 <= block < self.blocks:
            raise ValueError(f"block index {block} out of range [0, {self.blocks})")


def unitation_values(variant: str, k: int) -> np.ndarray:
    """Block fitness by number of ones, as a length k+1 lookup table."""
    return _unitation_values(variant, k).copy()


@lru_cache(maxsize=None)
def _unitation_values(variant: str, k: int) -> np.ndarray:
    u = np.arange(k + 1, dtype=np.float64)
    if variant == "bipolar":
        half = k // 2
        v = np.abs(u - half)
        vals = np.where(v == half, 1.0, 0.75 * (1.0 - v / (half - 1)))
    else:
        vals = np.where(u == k, 1.0, 0.75 * (1.0 - u / (k - 1)))
        if variant == "modified":
            vals[0] = 1.0
    vals.setflags(write=False)
    return vals


def block_fitness(spec: ProblemSpec, ones: int) -> float:
    """Value contributed by one block holding `ones` one-bits."""
    if not 0 <= ones <= spec.block_size:
        raise ValueError(f"unitation {ones} out of range for block size {spec.block_size}")
    return float(_unitation_values(spec.variant, spec.block_size)[ones])


def evaluate(spec: ProblemSpec, genome: Genome) -> float:
    """Fitness of a single genome: sum of block values."""
    if len(genome) != spec.length:
        raise ValueError(f"genome length {len(genome)} != problem length {spec.length}")
    return float(evaluate_bits(spec, genome.bits[None, :])[0])


def evaluate_bits(spec: ProblemSpec, bits: np.ndarray) -> np.ndarray:
    """Vectorised fitness for a (n, length) bit matrix."""
    n, length = bits.shape
    if length != spec.length:
        raise ValueError(f"bit matrix width {length} != problem length {spec.length}")
    lut = _unitation_values(spec.variant, spec.block_size)
    ones = bits.reshape(n, spec.blocks, spec.block_size).sum(axis=2)
    return lut[ones].sum(axis=1)


def evaluate_population(spec: ProblemSpec, pop: Population) -> Population:
    return pop.with_fitness(evaluate_bits(spec, pop.bits))


@dataclass(frozen=True)
class OptimaCatalog:
    """All global optima of a problem, in lexicographic genome order.

    `packed` holds each optimum as a single integer (genome bits read
    left-to-right as most-significant-first), which makes membership tests a
    sorted-array lookup.
    """

    spec: ProblemSpec
    genomes: Tuple[Genome, ...]

    @property
    def count(self) -> int:
        return len(self.genomes)

    def index_of(self, genome: Genome) -> int:
        """Position of an optimum in lexicographic order, or -1."""
        try:
            return self.genomes.index(genome)
        except ValueError:
            return -1


def enumerate_optima(spec: ProblemSpec) -> OptimaCatalog:
    """Exact global optima, ordered lexicographically by genome string.

    Capped at ENUMERATION_CAP_M blocks; beyond that the catalog would be
    pointlessly large for the experiments this library runs.
    """
    if spec.blocks > ENUMERATION_CAP_M:
        raise ValueError(
            f"optima enumeration capped at m <= {ENUMERATION_CAP_M}, got m = {spec.blocks}")
    k = spec.block_size
    if spec.variant == "standard":
        configs = [np.ones(k, dtype=np.uint8)]
    else:
        configs = [np.zeros(k, dtype=np.uint8), np.ones(k, dtype=np.uint8)]
    genomes = []
    # itertools.product yields block choices in lexicographic order, and
    # earlier blocks are more significant in the genome string, so the
    # resulting genome list is lexicographically sorted already.
    for choice in itertools.product(range(len(configs)), repeat=spec.blocks):
        genomes.append(Genome(np.concatenate([configs[c] for c in choice])))
    return OptimaCatalog(spec, tuple(genomes))


def config_unitation(k: int) -> np.ndarray:
    """Number of ones for each k-bit configuration index (lexicographic)."""
    idx = np.arange(2 ** k, dtype=np.uint32)
    return np.bitwise_count(idx).astype(np.int64)


def expected_fitness(spec: ProblemSpec) -> float:
    """Mean fitness of a uniformly random genome."""
    lut = _unitation_values(spec.variant, spec.block_size)
    return float(lut[config_unitation(spec.block_size)].mean() * spec.blocks)


def true_schema_fitness(spec: ProblemSpec, block: int) -> np.ndarray:
    """Analytic schema fitness of every configuration of one block.

    Entry j is the block value of configuration j minus the mean block value
    over all 2^k configurations, i.e. the deviation a perfectly estimated
    schema fitness converges to when the rest of the population is held at
    the uniform distribution.  Indexing is lexicographic with the block's
    first gene as the most significant bit.
    """
    spec._check_block(block)
    k = spec.block_size
    lut = _unitation_values(spec.variant, k)
    values = lut[config_unitation(k)]
    return values - values.mean()
