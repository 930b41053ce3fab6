"""Experiment protocols on top of the engine: ensembles, sweeps, searches.

Every experiment here follows the same reproducibility scheme: a master
seed plus a deterministic stream id per (population size, run index) cell,
so any cell can be recomputed in isolation and whole sweeps are bit-stable
regardless of execution order.

Maintenance experiments (market share, gamma sweeps, population-size
searches) start runs from the ``optima`` population layout: every niche
begins at equal share and the measured quantity is retention.  Random
starts would confound retention with the arbitrary order in which niches
are first discovered.

Results persist as CSV only (one schema per experiment kind, documented on
the writer functions); statistics are computed here so downstream plotting
never re-derives them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import Population, pack_bits
from .engine import OptimumIndex, RunConfig, RunTrace, Tournament, run
from .mpm import PartitionModel, estimate_marginals
from .niching import SchemaTable, estimate_schema_fitness, proportionate_frequencies
from .problems import (OptimaCatalog, ProblemSpec, enumerate_optima,
                       evaluate_bits, expected_fitness, true_schema_fitness)

PROBE_FLOOR = 16  # smallest population a size search will ever try


def market_share(pop: Population, catalog: OptimaCatalog) -> np.ndarray:
    """Fraction of the population sitting exactly on each catalog optimum."""
    counts = OptimumIndex(catalog).counts(pack_bits(pop.bits))
    return counts / pop.size


def success(pop: Population, catalog: OptimaCatalog, required: int) -> bool:
    """True iff at least `required` distinct optima have a copy present."""
    if required > catalog.count:
        raise ValueError(
            f"required {required} exceeds the {catalog.count} known optima")
    counts = OptimumIndex(catalog).counts(pack_bits(pop.bits))
    return int((counts > 0).sum()) >= required


def maintenance_config(problem: ProblemSpec, algo: str, seed: int = 7) -> RunConfig:
    """Canonical template for retention experiments.

    Population size and horizon are placeholders; sweeps override them per
    cell.  Binary tournament keeps selection pressure out of the picture,
    and the optima layout puts every niche on the board at generation zero.
    """
    return RunConfig(problem, algo, population_size=2, generations=0,
                     seed=seed, selection=Tournament(2), init="optima")


@dataclass(frozen=True)
class ExperimentConfig:
    """An ensemble protocol: a template run plus sweep coordinates."""

    base: RunConfig
    runs: int = 50
    checkpoints: Tuple[int, ...] = (100, 500)
    required: Optional[int] = None  # None: every catalog optimum
    grid: Tuple[int, ...] = (125, 250, 500, 1000, 2000)
    max_population: int = 1 << 20

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("ensemble size must be >= 1")
        if not self.checkpoints:
            raise ValueError("need at least one generation checkpoint")
        if any(t < 0 for t in self.checkpoints):
            raise ValueError("checkpoints must be non-negative")
        if list(self.checkpoints) != sorted(self.checkpoints):
            raise ValueError("checkpoints must be ascending")
        if not self.grid or any(n < 2 for n in self.grid):
            raise ValueError("population grid entries must be >= 2")
        if self.required is not None and self.required < 1:
            raise ValueError("required optimum count must be >= 1")
        if self.max_population < PROBE_FLOOR:
            raise ValueError(f"population cap below the {PROBE_FLOOR} probe floor")

    def required_count(self, catalog: OptimaCatalog) -> int:
        return catalog.count if self.required is None else self.required


def _cell_config(cfg: ExperimentConfig, n: int, horizon: int, run_idx: int) -> RunConfig:
    # unique stream per (population, run) cell; independent of sweep order
    rts = cfg.base.rts_config()
    if rts.window > n:
        rts = replace(rts, window=n)  # tiny probes: crowding window spans everyone
    return replace(cfg.base, population_size=n, generations=horizon,
                   stream=n * cfg.runs + run_idx, record_interval=1, rts=rts)


def _binomial_stderr(p: float, runs: int) -> float:
    return math.sqrt(p * (1.0 - p) / runs)


# ---------------------------------------------------------------------------
# market-share ensembles (share trajectories at a fixed population size)

@dataclass
class ShareEnsemble:
    """Per-run share trajectories of every optimum at one population size."""

    config: ExperimentConfig
    population_size: int
    generations: np.ndarray          # recorded generations, shared by runs
    shares: np.ndarray               # (runs, generations, optima)
    catalog: OptimaCatalog

    def _window(self, gen_lo: int, gen_hi: int) -> np.ndarray:
        mask = (self.generations >= gen_lo) & (self.generations <= gen_hi)
        if not mask.any():
            raise ValueError(f"no recorded generations in [{gen_lo}, {gen_hi}]")
        return self.shares[:, mask, :]

    def mean_share(self, gen_lo: int, gen_hi: int) -> np.ndarray:
        """Per-optimum share averaged over runs and a generation window."""
        return self._window(gen_lo, gen_hi).mean(axis=(0, 1))

    def share_std(self, gen_lo: int, gen_hi: int) -> float:
        """Across-generation share deviation, averaged over optima and runs."""
        return float(self._window(gen_lo, gen_hi).std(axis=1).mean())


def share_ensemble(cfg: ExperimentConfig, population_size: int,
                   horizon: int) -> ShareEnsemble:
    """Run the ensemble at one size, recording every generation's shares."""
    traces: List[RunTrace] = []
    for r in range(cfg.runs):
        traces.append(run(_cell_config(cfg, population_size, horizon, r)))
    return ShareEnsemble(cfg, population_size, traces[0].generations.copy(),
                         np.stack([t.shares for t in traces]),
                         traces[0].catalog)


# ---------------------------------------------------------------------------
# gamma sweeps (retention probability over a population grid)

@dataclass(frozen=True)
class GammaCell:
    algo: str
    population_size: int
    checkpoint: int
    gamma: float
    stderr: float
    runs: int


@dataclass
class SweepResult:
    """Gamma estimates over (population size, checkpoint) cells."""

    cells: Tuple[GammaCell, ...]

    def gamma(self, population_size: int, checkpoint: int) -> float:
        for c in self.cells:
            if c.population_size == population_size and c.checkpoint == checkpoint:
                return c.gamma
        raise KeyError((population_size, checkpoint))

    def stderr(self, population_size: int, checkpoint: int) -> float:
        for c in self.cells:
            if c.population_size == population_size and c.checkpoint == checkpoint:
                return c.stderr
        raise KeyError((population_size, checkpoint))


def gamma_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Retention probability at each grid size and generation checkpoint.

    gamma is the fraction of the ensemble in which at least the required
    number of distinct optima is present at the checkpoint.
    """
    catalog = enumerate_optima(cfg.base.problem)
    required = cfg.required_count(catalog)
    horizon = max(cfg.checkpoints)
    cells: List[GammaCell] = []
    for n in cfg.grid:
        hits = {t: 0 for t in cfg.checkpoints}
        for r in range(cfg.runs):
            trace = run(_cell_config(cfg, n, horizon, r))
            for t in cfg.checkpoints:
                if trace.distinct_at(t) >= required:
                    hits[t] += 1
        for t in cfg.checkpoints:
            g = hits[t] / cfg.runs
            cells.append(GammaCell(cfg.base.algo, n, t, g,
                                   _binomial_stderr(g, cfg.runs), cfg.runs))
    return SweepResult(tuple(cells))


# ---------------------------------------------------------------------------
# minimum-population search

@dataclass
class MinPopResult:
    """Outcome of one population-size search at a fixed checkpoint."""

    algo: str
    n_opt: int
    checkpoint: int
    target: float
    n_min: Optional[int]            # None when the search saturated the cap
    largest_failure: Optional[int]  # bisection lower bound; None at the floor
    saturated: bool
    runs: int
    probes: Dict[int, float] = field(default_factory=dict)


def _search_threshold(probes: Dict[int, float], target: float,
                      cap: int) -> Tuple[Optional[int], Optional[int], bool]:
    """Doubling-then-bisection over an already-probed gamma(n) table."""
    lo: Optional[int] = None
    n = PROBE_FLOOR
    while probes[n] < target:
        lo = n
        n *= 2
        if n > cap:
            return None, lo, True
    hi = n
    if lo is None:
        return hi, None, False
    while hi - lo > max(1, hi // 10):
        mid = (lo + hi) // 2
        if probes[mid] >= target:
            hi = mid
        else:
            lo = mid
    return hi, lo, False


def min_population_profile(cfg: ExperimentConfig, target: float,
                           checkpoints: Sequence[int]) -> Dict[int, MinPopResult]:
    """Smallest population reaching gamma >= target, at several horizons.

    One ensemble per probed size serves every horizon: retention is read
    off the same trajectories at each checkpoint, which keeps the resulting
    sizes comparable across horizons (no re-rolled ensembles).  The search
    doubles up from the probe floor, then bisects the bracket down to a 10%
    resolution.  A probe smaller than the required optimum count is scored
    zero without running: that many distinct optima cannot fit.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target gamma must be in (0, 1)")
    checkpoints = sorted(set(int(t) for t in checkpoints))
    if not checkpoints or checkpoints[0] < 1:
        raise ValueError("checkpoints must be positive")
    catalog = enumerate_optima(cfg.base.problem)
    required = cfg.required_count(catalog)
    horizon = max(checkpoints)
    cache: Dict[int, Dict[int, float]] = {}

    def probe(n: int) -> Dict[int, float]:
        if n in cache:
            return cache[n]
        if n < required:
            cache[n] = {t: 0.0 for t in checkpoints}
            return cache[n]
        hits = {t: 0 for t in checkpoints}
        for r in range(cfg.runs):
            trace = run(_cell_config(cfg, n, horizon, r))
            for t in checkpoints:
                if trace.distinct_at(t) >= required:
                    hits[t] += 1
        cache[n] = {t: hits[t] / cfg.runs for t in checkpoints}
        return cache[n]

    results: Dict[int, MinPopResult] = {}
    for t in checkpoints:
        class _Lazy(dict):
            def __missing__(self, n):
                return probe(n)[t]
        n_min, lo, saturated = _search_threshold(_Lazy(), target,
                                                 cfg.max_population)
        results[t] = MinPopResult(cfg.base.algo, catalog.count, t, target,
                                  n_min, lo, saturated, cfg.runs,
                                  {n: g[t] for n, g in sorted(cache.items())})
    return results


def min_population(cfg: ExperimentConfig, target: float, checkpoint: int) -> MinPopResult:
    """Single-horizon convenience wrapper around min_population_profile."""
    return min_population_profile(cfg, target, [checkpoint])[checkpoint]


def mahfoud_model(n_opt: int, gamma: float, t: int) -> float:
    """Drift population-sizing estimate for keeping n_opt niches t generations.

    Models each generation as an independent uniform resampling of n slots
    over n_opt niches and asks that all survive every generation with
    probability gamma.  The value is proportional only (no leading
    constant), so it serves curve-shape and ratio comparisons.
    """
    if n_opt < 2:
        raise ValueError("need at least two niches")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must be in (0, 1)")
    if t < 1:
        raise ValueError("horizon must be >= 1 generation")
    per_gen = 1.0 - gamma ** (1.0 / t)
    return math.log(per_gen / n_opt) / math.log((n_opt - 1) / n_opt)


# ---------------------------------------------------------------------------
# sampling-frequency verification

@dataclass(frozen=True)
class FrequencyRow:
    block: int
    schema: str            # configuration bits, first gene leftmost
    ideal: float
    experimental: float
    stderr: float


@dataclass
class FrequencyReport:
    """Ideal vs measured sampling frequencies, plus one block's trajectory."""

    problem: ProblemSpec
    rows: Tuple[FrequencyRow, ...]
    trajectory: np.ndarray           # (runs, generations, block-0 configs)
    trajectory_generations: np.ndarray

    def max_abs_error(self) -> float:
        return max(abs(r.experimental - r.ideal) for r in self.rows)


def ideal_frequencies(problem: ProblemSpec) -> List[np.ndarray]:
    """Sampling frequencies implied by exact uniform-population schema fitness."""
    tables = []
    for b in range(problem.blocks):
        dev = true_schema_fitness(problem, b)
        k = problem.block_size
        support = np.full(dev.size, 2 ** (problem.length - k), dtype=np.int64)
        table = SchemaTable((problem.block_genes(b),), (dev,), (support,),
                            expected_fitness(problem), None)
        tables.append(proportionate_frequencies(table).frequencies[0])
    return tables


def verify_frequencies(problem: ProblemSpec, runs: int = 30,
                       generations: int = 100, warmup: int = 20,
                       sample_size: int = 5000, seed: int = 7) -> FrequencyReport:
    """Measure the schema sampling frequencies the niching step produces.

    Each generation draws a fresh uniform population, estimates schema
    fitness over the true block partition, and converts it to sampling
    frequencies; the experimental value is the average from `warmup`
    onward.  The uniform reference population matches the distribution the
    ideal frequencies are defined against, so estimator quality is the only
    source of discrepancy.
    """
    if not 1 <= warmup <= generations:
        raise ValueError("warmup must fall within the run horizon")
    groups = problem.block_partition()
    k = problem.block_size
    ideal = ideal_frequencies(problem)
    per_run: List[List[np.ndarray]] = []   # run -> block -> mean frequencies
    traj: List[np.ndarray] = []
    for r in range(runs):
        gen = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(entropy=seed, spawn_key=(r,))))
        sums = [np.zeros(2 ** k) for _ in range(problem.blocks)]
        kept = 0
        block0: List[np.ndarray] = []
        for t in range(1, generations + 1):
            bits = (gen.random((sample_size, problem.length)) < 0.5).astype(np.uint8)
            pop = Population(bits, evaluate_bits(problem, bits))
            model = PartitionModel(groups, estimate_marginals(groups, pop))
            table = proportionate_frequencies(
                estimate_schema_fitness(model, pop))
            block0.append(table.frequencies[0].copy())
            if t >= warmup:
                kept += 1
                for b in range(problem.blocks):
                    sums[b] += table.frequencies[b]
        per_run.append([s / kept for s in sums])
        traj.append(np.stack(block0))

    rows: List[FrequencyRow] = []
    for b in range(problem.blocks):
        samples = np.stack([per_run[r][b] for r in range(runs)])
        mean = samples.mean(axis=0)
        sd = samples.std(axis=0, ddof=1) if runs > 1 else np.zeros(2 ** k)
        for j in range(2 ** k):
            rows.append(FrequencyRow(b, format(j, f"0{k}b"), float(ideal[b][j]),
                                     float(mean[j]), float(sd[j] / math.sqrt(runs))))
    return FrequencyReport(problem, tuple(rows), np.stack(traj),
                           np.arange(1, generations + 1))


# ---------------------------------------------------------------------------
# CSV persistence (the only output format; headers are part of the contract)

def _write_rows(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def write_trace_csv(path: str, ensemble: ShareEnsemble) -> None:
    """Schema: run,generation,optimum_id,share."""
    rows = []
    for r in range(ensemble.shares.shape[0]):
        for gi, g in enumerate(ensemble.generations):
            for o in range(ensemble.shares.shape[2]):
                rows.append((r, int(g), o, _fmt(ensemble.shares[r, gi, o])))
    _write_rows(path, ("run", "generation", "optimum_id", "share"), rows)


def write_run_trace_csv(path: str, trace: RunTrace, run_idx: int = 0) -> None:
    """Single-run trace in the same schema as write_trace_csv."""
    rows = []
    for gi, g in enumerate(trace.generations):
        for o in range(trace.shares.shape[1]):
            rows.append((run_idx, int(g), o, _fmt(trace.shares[gi, o])))
    _write_rows(path, ("run", "generation", "optimum_id", "share"), rows)


def write_gamma_csv(path: str, results: Sequence[SweepResult]) -> None:
    """Schema: algo,pop,checkpoint,gamma,stderr,runs."""
    rows = []
    for result in results:
        for c in result.cells:
            rows.append((c.algo, c.population_size, c.checkpoint,
                         _fmt(c.gamma), _fmt(c.stderr), c.runs))
    _write_rows(path, ("algo", "pop", "checkpoint", "gamma", "stderr", "runs"), rows)


def write_minpop_csv(path: str, results: Sequence[MinPopResult]) -> None:
    """Schema: algo,n_opt,t,n_min,runs.  Saturated searches write n_min=-1."""
    rows = []
    for r in results:
        n_min = -1 if r.n_min is None else r.n_min
        rows.append((r.algo, r.n_opt, r.checkpoint, n_min, r.runs))
    _write_rows(path, ("algo", "n_opt", "t", "n_min", "runs"), rows)


def write_freq_csv(path: str, report: FrequencyReport) -> None:
    """Schema: block,schema,ideal,experimental,stderr."""
    rows = [(r.block, r.schema, _fmt(r.ideal), _fmt(r.experimental),
             _fmt(r.stderr)) for r in report.rows]
    _write_rows(path, ("block", "schema", "ideal", "experimental", "stderr"), rows)


def write_frequency_trace_csv(path: str, report: FrequencyReport) -> None:
    """Block-0 schema trajectories in the run-trace schema.

    The optimum_id column carries the schema's configuration index; one row
    per (run, generation, configuration).
    """
    rows = []
    for r in range(report.trajectory.shape[0]):
        for gi, g in enumerate(report.trajectory_generations):
            for j in range(report.trajectory.shape[2]):
                rows.append((r, int(g), j, _fmt(report.trajectory[r, gi, j])))
    _write_rows(path, ("run", "generation", "optimum_id", "share"), rows)
