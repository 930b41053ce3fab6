"""Extended compact GA with niche preservation back-ends and a benchmark
harness for niche-maintenance and population-sizing experiments."""

from .core import (Genome, Individual, Population, RandomSource,
                   hamming_distance, random_genome)
from .engine import (OptimumIndex, RunConfig, RunState, RunTrace, Tournament,
                     Truncation, crossover_uniform, init_state, run, step_rts,
                     step_subniche, tournament_select, truncation_select)
from .harness import (ExperimentConfig, FrequencyReport, GammaCell,
                      MinPopResult, ShareEnsemble, SweepResult, gamma_sweep,
                      ideal_frequencies, mahfoud_model, maintenance_config,
                      market_share, min_population, min_population_profile,
                      share_ensemble, success, verify_frequencies)
from .mpm import (MdlScore, PartitionModel, compressed_population_complexity,
                  estimate_marginals, greedy_model_search, mdl_score,
                  model_complexity, sample_population)
from .niching import (RtsConfig, SchemaTable, estimate_schema_fitness,
                      proportionate_frequencies, rts_replace,
                      sample_with_frequencies)
from .problems import (OptimaCatalog, ProblemSpec, block_fitness,
                       enumerate_optima, evaluate, evaluate_population,
                       expected_fitness, true_schema_fitness, unitation_values)

__all__ = [
    "Genome", "Individual", "Population", "RandomSource",
    "hamming_distance", "random_genome",
    "ProblemSpec", "OptimaCatalog", "block_fitness", "evaluate",
    "evaluate_population", "enumerate_optima", "true_schema_fitness",
    "unitation_values",
    "PartitionModel", "MdlScore", "model_complexity",
    "compressed_population_complexity", "mdl_score", "estimate_marginals",
    "greedy_model_search", "sample_population",
    "SchemaTable", "RtsConfig", "estimate_schema_fitness",
    "proportionate_frequencies", "sample_with_frequencies", "rts_replace",
    "RunConfig", "RunState", "RunTrace", "Tournament", "Truncation",
    "OptimumIndex", "crossover_uniform",
    "init_state", "step_subniche", "step_rts", "run",
    "tournament_select", "truncation_select",
    "ExperimentConfig", "GammaCell", "SweepResult", "MinPopResult",
    "ShareEnsemble", "FrequencyReport", "maintenance_config", "market_share",
    "success", "share_ensemble", "gamma_sweep", "min_population",
    "min_population_profile", "mahfoud_model", "ideal_frequencies",
    "verify_frequencies", "expected_fitness",
]

__version__ = "0.1.0"
