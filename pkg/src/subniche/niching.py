"""Niche preservation back-ends: sub-structural niching and restricted
tournament replacement.

Sub-structural niching estimates a fitness for every configuration (schema)
of every model group from the evaluated population, converts the estimates
into per-group sampling frequencies, and samples offspring from those
frequencies instead of the learned marginals.  Restricted tournament
replacement inserts each offspring against its nearest neighbour within a
small uniformly drawn window, keeping the fitter of the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numba import njit

from .core import Individual, Population, RngLike, as_generator, pack_bits
from .mpm import PartitionModel, config_indices, sample_bits

# deviations this close to zero are treated as no signal, so that float dust
# cannot masquerade as a fitness difference between equally good schemata
_SIGNAL_EPS = 1e-9


@dataclass(frozen=True)
class SchemaTable:
    """Per-group schema statistics estimated from one evaluated population.

    `fitness[g][j]` is the mean fitness of the carriers of configuration j of
    group g minus the population mean fitness; configurations with no carrier
    get exactly 0.  `support[g][j]` is the carrier count.  `frequencies` is
    None until proportionate_frequencies fills it.
    """

    groups: Tuple[Tuple[int, ...], ...]
    fitness: Tuple[np.ndarray, ...]
    support: Tuple[np.ndarray, ...]
    population_mean: float
    frequencies: Optional[Tuple[np.ndarray, ...]] = None

    def schema_count(self) -> int:
        return sum(2 ** len(g) for g in self.groups)


def estimate_schema_fitness(model: PartitionModel, evaluated: Population) -> SchemaTable:
    """Schema fitness of every group configuration, from the full population.

    The estimate for a configuration is the average fitness of the
    individuals carrying it minus the average fitness of the whole evaluated
    population.  Absent configurations are assigned zero.
    """
    fitness = evaluated.fitness
    if evaluated.genome_length != model.genome_length:
        raise ValueError("population genome length does not match the model")
    mean = float(fitness.mean())
    devs = []
    supports = []
    for genes in model.groups:
        size = 2 ** len(genes)
        idx = config_indices(evaluated.bits, genes)
        counts = np.bincount(idx, minlength=size)
        sums = np.bincount(idx, weights=fitness, minlength=size)
        dev = np.zeros(size, dtype=np.float64)
        present = counts > 0
        dev[present] = sums[present] / counts[present] - mean
        devs.append(dev)
        supports.append(counts.astype(np.int64))
    return SchemaTable(model.groups, tuple(devs), tuple(supports), mean)


def proportionate_frequencies(table: SchemaTable) -> SchemaTable:
    """Turn schema fitness estimates into per-group sampling frequencies.

    Within each group, negative estimates are clamped to zero and the
    remainder normalised, so sampling mass goes to the configurations that
    beat the population mean, in proportion to how much they beat it by.

    When no configuration rises above the mean the clamped masses are all
    zero.  That is the steady state of a population that has settled on a
    set of equally fit niches (every carrier average equals the population
    average), and resetting such a group to uniform would wipe the niches
    out.  The group instead falls back to raw carrier mean fitness over the
    configurations actually present, which keeps equally fit niches at equal
    shares and restores them there after sampling noise.  A uniform table is
    the last resort, for groups with no usable signal at all.
    """
    tol = _SIGNAL_EPS * max(1.0, abs(table.population_mean))
    freqs = []
    for dev, support in zip(table.fitness, table.support):
        mass = np.where(dev > tol, dev, 0.0)
        total = float(mass.sum())
        if total > 0.0:
            freqs.append(mass / total)
            continue
        raw = np.where(support > 0, dev + table.population_mean, 0.0)
        raw = np.maximum(raw, 0.0)
        raw[np.abs(raw) <= tol] = 0.0
        total = float(raw.sum())
        if total > 0.0:
            freqs.append(raw / total)
        else:
            freqs.append(np.full(dev.size, 1.0 / dev.size))
    return SchemaTable(table.groups, table.fitness, table.support,
                       table.population_mean, tuple(freqs))


def sample_with_frequencies(model: PartitionModel, table: SchemaTable,
                            count: int, rng: RngLike) -> Population:
    """Sample offspring using niche frequencies in place of learned marginals."""
    if count < 1:
        raise ValueError("sample count must be >= 1")
    if table.groups != model.groups:
        raise ValueError("schema table was built for a different partition")
    if table.frequencies is None:
        raise ValueError("schema table has no frequencies; run proportionate_frequencies")
    gen = as_generator(rng)
    return Population(sample_bits(model.groups, table.frequencies, count, gen))


@dataclass(frozen=True)
class RtsConfig:
    """Restricted tournament replacement settings.

    `window` is the number of distinct population members drawn per
    offspring; `replace_on_tie` controls whether an offspring with exactly
    the incumbent's fitness takes its slot.
    """

    window: int
    replace_on_tie: bool = True

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")


def draw_windows(gen: np.random.Generator, population_size: int, window: int,
                 count: int) -> np.ndarray:
    """Uniform without-replacement index windows, one row per offspring."""
    if window > population_size:
        raise ValueError(
            f"window {window} exceeds population size {population_size}")
    if window == population_size:
        return np.tile(np.arange(population_size, dtype=np.int64), (count, 1))
    if window * 4 > population_size:
        # dense case: random order of all indices, keep the first `window`
        order = np.argsort(gen.random((count, population_size)), axis=1)
        return order[:, :window].astype(np.int64)
    idx = gen.integers(0, population_size, size=(count, window), dtype=np.int64)
    while True:
        srt = np.sort(idx, axis=1)
        bad = (srt[:, 1:] == srt[:, :-1]).any(axis=1)
        if not bad.any():
            return idx
        idx[bad] = gen.integers(0, population_size,
                                size=(int(bad.sum()), window), dtype=np.int64)


@njit(cache=True)
def _popcount_u64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@njit(cache=True)
def _rts_insert_kernel(pop_packed, pop_fitness, off_packed, off_fitness,
                       windows, replace_on_tie):
    """Sequentially insert offspring; mutates pop_packed and pop_fitness.

    Returns the population slot each offspring replaced, -1 where it lost.
    Later offspring see the replacements made by earlier ones.
    """
    n_off = off_packed.shape[0]
    words = pop_packed.shape[1]
    replaced = np.full(n_off, -1, dtype=np.int64)
    for o in range(n_off):
        best = np.int64(-1)
        best_dist = np.int64(1 << 40)
        for w in range(windows.shape[1]):
            cand = windows[o, w]
            dist = np.int64(0)
            for j in range(words):
                dist += np.int64(_popcount_u64(pop_packed[cand, j] ^ off_packed[o, j]))
            # ties go to the lowest population index among the drawn members
            if dist < best_dist or (dist == best_dist and cand < best):
                best_dist = dist
                best = cand
        fo = off_fitness[o]
        fb = pop_fitness[best]
        if fo > fb or (replace_on_tie and fo == fb):
            for j in range(words):
                pop_packed[best, j] = off_packed[o, j]
            pop_fitness[best] = fo
            replaced[o] = best
    return replaced


def rts_insert_cohort(pop_bits: np.ndarray, pop_packed: np.ndarray,
                      pop_fitness: np.ndarray, off_bits: np.ndarray,
                      off_fitness: np.ndarray, cfg: RtsConfig,
                      gen: np.random.Generator) -> np.ndarray:
    """Insert a whole offspring cohort in index order, in place.

    All three population arrays (bits, packed words, fitness) are updated
    consistently.  Window index rows are drawn up front; draws never depend
    on population contents, so pre-drawing leaves the sequential semantics
    intact.  Returns the per-offspring replaced slots (-1 where rejected).
    """
    n = pop_bits.shape[0]
    windows = draw_windows(gen, n, cfg.window, off_bits.shape[0])
    off_packed = pack_bits(off_bits)
    replaced = _rts_insert_kernel(pop_packed, pop_fitness, off_packed,
                                  off_fitness, windows, cfg.replace_on_tie)
    mask = replaced >= 0
    if mask.any():
        slots = replaced[mask]
        writers = np.nonzero(mask)[0]
        # keep only the last write to each slot
        rev_slots, first_in_rev = np.unique(slots[::-1], return_index=True)
        last_writers = writers[::-1][first_in_rev]
        pop_bits[rev_slots] = off_bits[last_writers]
    return replaced


def rts_replace(pop: Population, offspring: Individual, cfg: RtsConfig,
                rng: RngLike) -> Population:
    """One restricted tournament insertion; returns the resulting population.

    Draws `cfg.window` distinct members uniformly, finds the drawn member
    closest to the offspring in Hamming distance (ties to the lowest
    population index), and replaces it when the offspring is strictly
    fitter, or equally fit with replace_on_tie set.
    """
    if not pop.evaluated:
        raise ValueError("population must be evaluated before replacement")
    if not offspring.evaluated:
        raise ValueError("offspring must be evaluated before replacement")
    if len(offspring.genome) != pop.genome_length:
        raise ValueError("offspring genome length does not match the population")
    gen = as_generator(rng)
    window = draw_windows(gen, pop.size, cfg.window, 1)[0]
    dists = (pop.bits[window] != offspring.genome.bits).sum(axis=1)
    best = int(window[dists == dists.min()].min())
    fo = offspring.require_fitness()
    fb = float(pop.fitness[best])
    if fo > fb or (cfg.replace_on_tie and fo == fb):
        bits = pop.bits.copy()
        bits[best] = offspring.genome.bits
        fitness = pop.fitness.copy()
        fitness[best] = fo
        return Population(bits, fitness)
    return pop
