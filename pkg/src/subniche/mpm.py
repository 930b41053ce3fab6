"""Marginal product models: MDL scoring, greedy partition search, sampling.

The model is a partition of the gene positions into disjoint groups, each
carrying a full joint frequency table over its 2^k configurations.  Search
starts from all singletons and repeatedly merges the pair of groups that
most reduces

    total bits = log2(n) * sum_i (2^k_i - 1)            (model complexity)
               + n' * sum_i sum_j -p_ij log2 p_ij       (population complexity)

stopping when no merge strictly improves the sum.  Configuration tables are
indexed lexicographically: within a group the genes are listed in ascending
position order and the first gene is the most significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import Population, RngLike, as_generator

# a merge must beat the current score by this many bits to be taken
IMPROVEMENT_EPS = 1e-9

# joint tables above this size are counted sparsely instead of via bincount
_DENSE_CONFIG_LIMIT = 16

# candidate merges beyond this many genes can never pay their description
# cost at any feasible population size, and their config indices would not
# be safe in int64 arithmetic; they are rejected without being scored
_MAX_CANDIDATE_GENES = 48


@dataclass(frozen=True)
class PartitionModel:
    """A gene partition plus one joint frequency table per group."""

    groups: Tuple[Tuple[int, ...], ...]
    marginals: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.groups) != len(self.marginals):
            raise ValueError("one marginal table per group required")
        seen: set = set()
        for genes, table in zip(self.groups, self.marginals):
            if len(genes) == 0:
                raise ValueError("empty gene group")
            if list(genes) != sorted(genes):
                raise ValueError(f"group genes must be ascending: {genes}")
            if seen.intersection(genes):
                raise ValueError("groups must be disjoint")
            seen.update(genes)
            if table.shape != (2 ** len(genes),):
                raise ValueError(
                    f"marginal table for group {genes} must have 2^{len(genes)} entries")
            if np.any(table < 0.0):
                raise ValueError("marginal probabilities must be non-negative")
            if abs(float(table.sum()) - 1.0) > 1e-9:
                raise ValueError("marginal table must sum to 1")
        if seen != set(range(len(seen))) or min(seen) != 0:
            raise ValueError("groups must partition positions 0..length-1 exactly")

    @property
    def genome_length(self) -> int:
        return sum(len(g) for g in self.groups)

    def partition_key(self) -> Tuple[Tuple[int, ...], ...]:
        """Canonical, order-insensitive form of the partition."""
        return tuple(sorted((tuple(sorted(g)) for g in self.groups)))

    def signature(self) -> str:
        return "".join("[" + ",".join(map(str, g)) + "]" for g in self.partition_key())


@dataclass(frozen=True)
class MdlScore:
    model_bits: float
    population_bits: float

    @property
    def total(self) -> float:
        return self.model_bits + self.population_bits


def model_complexity(model: PartitionModel, n: int) -> float:
    """Bits to describe the model's frequency tables at population size n."""
    if n < 2:
        raise ValueError("model complexity needs a population of at least 2")
    return math.log2(n) * sum(2 ** len(g) - 1 for g in model.groups)


def compressed_population_complexity(model: PartitionModel, selected: Population) -> float:
    """Bits to describe the population once compressed under the model."""
    n = selected.size
    total = 0.0
    for table in model.marginals:
        nz = table[table > 0.0]
        total += float(-(nz * np.log2(nz)).sum())
    return n * total


def mdl_score(model: PartitionModel, selected: Population, n: Optional[int] = None) -> MdlScore:
    """Combined score; `n` overrides the size used for model complexity."""
    return MdlScore(model_complexity(model, selected.size if n is None else n),
                    compressed_population_complexity(model, selected))


def config_indices(bits: np.ndarray, genes: Sequence[int]) -> np.ndarray:
    """Lexicographic configuration index of each row, restricted to `genes`."""
    k = len(genes)
    powers = (1 << np.arange(k - 1, -1, -1)).astype(np.int64)
    return bits[:, list(genes)].astype(np.int64) @ powers


def estimate_marginals(groups: Sequence[Sequence[int]], pop: Population) -> Tuple[np.ndarray, ...]:
    """Empirical joint frequency table of each group, no smoothing."""
    tables = []
    for genes in groups:
        idx = config_indices(pop.bits, genes)
        counts = np.bincount(idx, minlength=2 ** len(genes)).astype(np.float64)
        tables.append(counts / pop.size)
    return tuple(tables)


def _entropy_from_counts(counts: np.ndarray, n: int) -> float:
    """Shannon entropy in bits of a distribution given by integer counts."""
    nz = counts[counts > 0]
    return math.log2(n) - float((nz * np.log2(nz)).sum()) / n


class _Group:
    __slots__ = ("gid", "genes", "idx", "entropy")

    def __init__(self, gid: int, genes: Tuple[int, ...], idx: np.ndarray, entropy: float):
        self.gid = gid
        self.genes = genes
        self.idx = idx
        self.entropy = entropy

    @property
    def k(self) -> int:
        return len(self.genes)


def _joint_counts(a: _Group, b: _Group, n: int) -> Tuple[np.ndarray, np.ndarray]:
    joint = a.idx * np.int64(1 << b.k) + b.idx
    width = a.k + b.k
    if width <= _DENSE_CONFIG_LIMIT:
        counts = np.bincount(joint, minlength=1 << width)
        return joint, counts
    _, counts = np.unique(joint, return_counts=True)
    return joint, counts


def _merge_delta(a: _Group, b: _Group, n: int, log2_n_model: float) -> float:
    """Score change from merging groups a and b (negative is an improvement)."""
    if a.k + b.k > _MAX_CANDIDATE_GENES:
        return math.inf
    _, counts = _joint_counts(a, b, n)
    h_joint = _entropy_from_counts(counts, n)
    d_model = log2_n_model * float((1 << (a.k + b.k)) - (1 << a.k) - (1 << b.k) + 1)
    d_pop = n * (h_joint - a.entropy - b.entropy)
    return d_model + d_pop


def greedy_model_search(selected: Population, n: Optional[int] = None) -> PartitionModel:
    """Greedy merge search for the best-scoring partition of the genes.

    Starts from all singletons.  Each round scores every pair of current
    groups and merges the pair with the largest strict improvement, breaking
    exact ties in favour of the lexicographically smallest pair of group
    positions.  `n` sets the population size used for model complexity and
    defaults to the number of selected individuals.

    The returned model's marginal tables are re-estimated from `selected`
    in canonical lexicographic indexing.
    """
    bits = selected.bits
    ns, length = bits.shape
    if ns < 2:
        raise ValueError("model search needs at least 2 individuals")
    n_model = ns if n is None else n
    if n_model < 2:
        raise ValueError("model complexity population size must be >= 2")
    log2_n_model = math.log2(n_model)

    # singletons, with all pairwise joint counts obtained from one matmul
    ones = bits.astype(np.float64)
    c1 = ones.sum(axis=0)
    c11 = ones.T @ ones

    groups: list = []
    for g in range(length):
        counts = np.array([ns - c1[g], c1[g]])
        entropy = _entropy_from_counts(counts, ns)
        groups.append(_Group(g, (g,), bits[:, g].astype(np.int64), entropy))

    deltas = {}
    i_idx, j_idx = np.triu_indices(length, k=1)
    p11 = c11[i_idx, j_idx]
    p10 = c1[i_idx] - p11
    p01 = c1[j_idx] - p11
    p00 = ns - p11 - p10 - p01
    stacked = np.stack([p00, p01, p10, p11], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(stacked > 0, np.log2(np.where(stacked > 0, stacked, 1.0)), 0.0)
    h_pair = math.log2(ns) - (stacked * logs).sum(axis=1) / ns
    for pos in range(i_idx.size):
        a, b = groups[int(i_idx[pos])], groups[int(j_idx[pos])]
        d = log2_n_model + ns * (h_pair[pos] - a.entropy - b.entropy)
        deltas[(a.gid, b.gid)] = d

    next_gid = length

    def cached_delta(a: _Group, b: _Group) -> float:
        key = (a.gid, b.gid) if a.gid < b.gid else (b.gid, a.gid)
        d = deltas.get(key)
        if d is None:
            d = _merge_delta(a, b, ns, log2_n_model)
            deltas[key] = d
        return d

    while len(groups) > 1:
        best_d = -IMPROVEMENT_EPS
        best_pair = None
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                d = cached_delta(groups[i], groups[j])
                if d < best_d:
                    best_d = d
                    best_pair = (i, j)
        if best_pair is None:
            break
        i, j = best_pair
        a, b = groups[i], groups[j]
        for key in [k for k in deltas if a.gid in k or b.gid in k]:
            del deltas[key]
        joint_idx = a.idx * np.int64(1 << b.k) + b.idx
        width = a.k + b.k
        if width <= _DENSE_CONFIG_LIMIT:
            counts = np.bincount(joint_idx, minlength=1 << width)
        else:
            _, counts = np.unique(joint_idx, return_counts=True)
        merged = _Group(next_gid, tuple(sorted(a.genes + b.genes)), joint_idx,
                        _entropy_from_counts(counts, ns))
        next_gid += 1
        groups[i] = merged
        del groups[j]

    final_groups = tuple(sorted((g.genes for g in groups), key=lambda genes: genes[0]))
    marginals = estimate_marginals(final_groups, selected)
    return PartitionModel(final_groups, marginals)


def sample_population(model: PartitionModel, count: int, rng: RngLike) -> Population:
    """Draw `count` genomes with each group sampled independently from its table."""
    if count < 1:
        raise ValueError("sample count must be >= 1")
    gen = as_generator(rng)
    bits = sample_bits(model.groups, model.marginals, count, gen)
    return Population(bits)


def sample_bits(groups: Sequence[Sequence[int]], tables: Sequence[np.ndarray],
                count: int, gen: np.random.Generator) -> np.ndarray:
    """Array-level sampler shared by model and niche-frequency sampling."""
    length = sum(len(g) for g in groups)
    bits = np.zeros((count, length), dtype=np.uint8)
    for genes, table in zip(groups, tables):
        k = len(genes)
        cum = np.cumsum(table)
        cum[-1] = 1.0  # guard against float round-off at the top end
        draws = np.searchsorted(cum, gen.random(count), side="right")
        for pos, gene in enumerate(genes):
            bits[:, gene] = (draws >> (k - 1 - pos)) & 1
    return bits


def all_partitions(length: int):
    """Every partition of range(length), for brute-force oracle comparisons."""
    positions = list(range(length))

    def rec(rest):
        if not rest:
            yield []
            return
        head, tail = rest[0], rest[1:]
        for sub in rec(tail):
            yield [[head]] + [list(g) for g in sub]
            for i in range(len(sub)):
                grown = [list(g) for g in sub]
                grown[i] = [head] + grown[i]
                yield grown

    for part in rec(positions):
        yield tuple(tuple(sorted(g)) for g in part)


def best_partition_score(selected: Population, n: Optional[int] = None) -> float:
    """Exhaustive minimum MDL score over all partitions (tiny lengths only)."""
    length = selected.genome_length
    if length > 6:
        raise ValueError("exhaustive partition search is limited to length <= 6")
    best = math.inf
    for part in all_partitions(length):
        groups = tuple(sorted(part, key=lambda g: g[0]))
        model = PartitionModel(groups, estimate_marginals(groups, selected))
        best = min(best, mdl_score(model, selected, n).total)
    return best
