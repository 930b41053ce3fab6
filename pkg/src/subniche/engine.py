"""Generational engine tying model search and niche preservation together.

One generation of either algorithm:

* ``subniche``: select parents, learn a partition model from them, estimate
  schema fitness on the full evaluated population, convert to niche
  frequencies, sample a complete replacement cohort from those frequencies.
* ``rts``: select parents, pair them up, produce children by uniform
  crossover, then insert each child into the parent population by
  restricted tournament replacement.

Runs are pure functions of their config: the config carries the random
seed and stream id, and every stochastic choice draws from the one
generator derived from them.

Populations start uniform-random by default.  Maintenance experiments
instead start from the ``optima`` layout (the catalog of global optima
tiled to the population size), which puts every niche at equal share on
generation zero so that what the trace shows is retention, not discovery.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from .core import Population, RandomSource, RngLike, as_generator, pack_bits
from .mpm import PartitionModel, greedy_model_search, sample_bits
from .niching import (RtsConfig, estimate_schema_fitness,
                      proportionate_frequencies, rts_insert_cohort)
from .problems import OptimaCatalog, ProblemSpec, enumerate_optima, evaluate_bits

ALGORITHMS = ("subniche", "rts")
INIT_MODES = ("random", "optima")


@dataclass(frozen=True)
class Tournament:
    """Size-s tournament selection, drawn with replacement, ties uniform."""

    size: int = 2

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("tournament size must be >= 1")


@dataclass(frozen=True)
class Truncation:
    """Keep the best `fraction` of the population, repeated to full count."""

    fraction: float

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("truncation fraction must be in (0, 1]")


Selection = Union[Tournament, Truncation]


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run bit for bit."""

    problem: ProblemSpec
    algo: str
    population_size: int
    generations: int
    seed: int
    stream: int = 0
    selection: Selection = Tournament(2)
    rts: Optional[RtsConfig] = None
    record_interval: int = 1
    init: str = "random"

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}, expected one of {ALGORITHMS}")
        if self.init not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init!r}, expected one of {INIT_MODES}")
        if self.population_size < 2:
            raise ValueError("population size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.record_interval < 1:
            raise ValueError("record interval must be >= 1")

    def rts_config(self) -> RtsConfig:
        """Replacement settings; the window defaults to the genome length."""
        if self.rts is not None:
            return self.rts
        return RtsConfig(window=self.problem.length)

    def random_source(self) -> RandomSource:
        return RandomSource(self.seed, self.stream)


def _select_indices(fitness: np.ndarray, selection: Selection, count: int,
                    gen: np.random.Generator) -> np.ndarray:
    n = fitness.shape[0]
    if isinstance(selection, Tournament):
        draws = gen.integers(0, n, size=(count, selection.size))
        keys = fitness[draws]
        is_best = keys == keys.max(axis=1, keepdims=True)
        # uniform choice among tied entrants
        jitter = gen.random((count, selection.size))
        pick = (is_best * jitter).argmax(axis=1)
        return draws[np.arange(count), pick]
    if isinstance(selection, Truncation):
        keep = max(1, int(np.ceil(selection.fraction * n)))
        order = np.argsort(-fitness, kind="stable")[:keep]
        return np.resize(order, count)
    raise ValueError(f"unknown selection scheme: {selection!r}")


def tournament_select(pop: Population, size: int, count: int, rng: RngLike) -> Population:
    """Select `count` members by size-s tournaments with replacement."""
    if count < 1:
        raise ValueError("selection count must be >= 1")
    gen = as_generator(rng)
    idx = _select_indices(pop.fitness, Tournament(size), count, gen)
    return Population(pop.bits[idx], pop.fitness[idx])


def truncation_select(pop: Population, fraction: float, count: int, rng: RngLike) -> Population:
    """Select `count` members by truncation to the best `fraction`."""
    if count < 1:
        raise ValueError("selection count must be >= 1")
    gen = as_generator(rng)
    idx = _select_indices(pop.fitness, Truncation(fraction), count, gen)
    return Population(pop.bits[idx], pop.fitness[idx])


@dataclass
class RunState:
    """Mutable in-flight state of one run."""

    config: RunConfig
    bits: np.ndarray
    fitness: np.ndarray
    packed: np.ndarray
    gen: np.random.Generator
    generation: int = 0
    evaluations: int = 0
    model: Optional[PartitionModel] = None

    @property
    def population(self) -> Population:
        return Population(self.bits, self.fitness)


def init_state(config: RunConfig) -> RunState:
    """Initial evaluated population: uniform random, or the optima layout.

    ``optima`` tiles the catalog of global optima round-robin to the
    population size and shuffles the rows, giving every optimum n/n_opt
    copies (within one) at generation zero.
    """
    gen = config.random_source().generator()
    n, length = config.population_size, config.problem.length
    if config.init == "optima":
        catalog = enumerate_optima(config.problem)
        layout = np.stack([g.bits for g in catalog.genomes])
        bits = layout[np.arange(n) % catalog.count]
        gen.shuffle(bits, axis=0)
    else:
        bits = gen.integers(0, 2, size=(n, length), dtype=np.uint8)
    fitness = evaluate_bits(config.problem, bits)
    return RunState(config, bits, fitness, pack_bits(bits), gen,
                    evaluations=n)


def step_subniche(state: RunState) -> RunState:
    """One generation of sub-structural niching; replaces the whole cohort."""
    cfg = state.config
    n = cfg.population_size
    sel = _select_indices(state.fitness, cfg.selection, n, state.gen)
    selected = Population(state.bits[sel], state.fitness[sel])
    model = greedy_model_search(selected, n=n)
    table = proportionate_frequencies(
        estimate_schema_fitness(model, state.population))
    off_bits = sample_bits(model.groups, table.frequencies, n, state.gen)
    off_fitness = evaluate_bits(cfg.problem, off_bits)
    state.bits = off_bits
    state.fitness = off_fitness
    state.packed = pack_bits(off_bits)
    state.model = model
    state.generation += 1
    state.evaluations += n
    return state


def crossover_uniform(parents: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Children of consecutive parent pairs under per-bit uniform crossover.

    Rows 2i and 2i+1 are the complementary children of parents 2i and 2i+1.
    An unpaired trailing parent (odd count) passes through unchanged.
    """
    children = parents.copy()
    pairs = parents.shape[0] // 2
    if pairs:
        a = parents[0:2 * pairs:2]
        b = parents[1:2 * pairs:2]
        mask = gen.random((pairs, parents.shape[1])) < 0.5
        children[0:2 * pairs:2] = np.where(mask, a, b)
        children[1:2 * pairs:2] = np.where(mask, b, a)
    return children


def step_rts(state: RunState) -> RunState:
    """One generation of crossover plus restricted tournament replacement."""
    cfg = state.config
    n = cfg.population_size
    rts_cfg = cfg.rts_config()
    if rts_cfg.window > n:
        raise ValueError(
            f"replacement window {rts_cfg.window} exceeds population size {n}")
    sel = _select_indices(state.fitness, cfg.selection, n, state.gen)
    off_bits = crossover_uniform(state.bits[sel], state.gen)
    off_fitness = evaluate_bits(cfg.problem, off_bits)
    # insertion mutates bits/packed/fitness in place, in offspring order
    writable = state.bits if state.bits.flags.writeable else state.bits.copy()
    rts_insert_cohort(writable, state.packed, state.fitness, off_bits,
                      off_fitness, rts_cfg, state.gen)
    state.bits = writable
    state.generation += 1
    state.evaluations += n
    return state


_STEPS = {"subniche": step_subniche, "rts": step_rts}


class OptimumIndex:
    """Fast lookup from population rows to catalog optimum ids."""

    def __init__(self, catalog: OptimaCatalog):
        self.count = catalog.count
        packed = pack_bits(np.stack([g.bits for g in catalog.genomes]))
        self.words = packed.shape[1]
        if self.words == 1:
            order = np.argsort(packed[:, 0])
            self._sorted_keys = packed[order, 0]
            self._order = order
        else:
            self._by_bytes = {packed[i].tobytes(): i for i in range(self.count)}

    def counts(self, packed: np.ndarray) -> np.ndarray:
        out = np.zeros(self.count, dtype=np.int64)
        if self.words == 1:
            keys = packed[:, 0]
            pos = np.searchsorted(self._sorted_keys, keys)
            pos_c = np.minimum(pos, self._sorted_keys.size - 1)
            hit = self._sorted_keys[pos_c] == keys
            if hit.any():
                ids = self._order[pos_c[hit]]
                out += np.bincount(ids, minlength=self.count)
        else:
            for row in packed:
                i = self._by_bytes.get(row.tobytes())
                if i is not None:
                    out[i] += 1
        return out


@dataclass
class RunTrace:
    """Per-generation records of one run plus its evaluation count."""

    config: RunConfig
    catalog: OptimaCatalog
    generations: np.ndarray
    shares: np.ndarray
    distinct_optima: np.ndarray
    best_fitness: np.ndarray
    partitions: List[str]
    evaluations: int

    def share_at(self, generation: int) -> np.ndarray:
        """Market share vector recorded at `generation`."""
        hits = np.nonzero(self.generations == generation)[0]
        if hits.size == 0:
            raise ValueError(f"generation {generation} was not recorded")
        return self.shares[hits[0]]

    def distinct_at(self, generation: int) -> int:
        hits = np.nonzero(self.generations == generation)[0]
        if hits.size == 0:
            raise ValueError(f"generation {generation} was not recorded")
        return int(self.distinct_optima[hits[0]])


def run(config: RunConfig) -> RunTrace:
    """Run to the configured horizon, recording every record_interval-th
    generation (always including generation 0 and the final one)."""
    state = init_state(config)
    catalog = enumerate_optima(config.problem)
    index = OptimumIndex(catalog)
    step = _STEPS[config.algo]

    gens: List[int] = []
    shares: List[np.ndarray] = []
    distinct: List[int] = []
    best: List[float] = []
    partitions: List[str] = []

    def record():
        counts = index.counts(state.packed)
        gens.append(state.generation)
        shares.append(counts / config.population_size)
        distinct.append(int((counts > 0).sum()))
        best.append(float(state.fitness.max()))
        partitions.append(state.model.signature() if state.model is not None else "")

    record()
    for t in range(1, config.generations + 1):
        step(state)
        if t % config.record_interval == 0 or t == config.generations:
            record()

    expected = config.population_size * (config.generations + 1)
    assert state.evaluations == expected, "evaluation accounting drifted"
    return RunTrace(config, catalog, np.array(gens), np.stack(shares),
                    np.array(distinct), np.array(best), partitions,
                    state.evaluations)
