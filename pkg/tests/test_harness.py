"""Experiment harness: share metrics, sweeps, size searches, CSV output."""

import csv
import math
from fractions import Fraction

import numpy as np
import pytest

from subniche.core import Population
from subniche.engine import RunConfig, Tournament, run
from subniche.harness import (PROBE_FLOOR, ExperimentConfig, FrequencyReport,
                              FrequencyRow, MinPopResult, gamma_sweep,
                              ideal_frequencies, mahfoud_model,
                              maintenance_config, market_share, min_population,
                              min_population_profile, share_ensemble, success,
                              verify_frequencies, write_freq_csv,
                              write_frequency_trace_csv, write_gamma_csv,
                              write_minpop_csv, write_run_trace_csv,
                              write_trace_csv)
from subniche.problems import ProblemSpec, enumerate_optima, evaluate_bits

MTRAP = ProblemSpec("modified", 5, 4)
SMALL = ProblemSpec("modified", 2, 4)  # 4 optima on 8 genes: fast ensembles


def _optima_pop(problem, rows):
    catalog = enumerate_optima(problem)
    bits = np.stack([catalog.genomes[i].bits for i in rows])
    return Population(bits, evaluate_bits(problem, bits)), catalog


def test_market_share_of_the_full_catalog_is_uniform():
    pop, catalog = _optima_pop(MTRAP, list(range(32)))
    assert np.allclose(market_share(pop, catalog), 1 / 32)


def test_market_share_of_off_optimum_genomes_is_zero():
    bits = np.tile(np.array([0, 1] * 10, dtype=np.uint8), (6, 1))
    pop = Population(bits, evaluate_bits(MTRAP, bits))
    catalog = enumerate_optima(MTRAP)
    assert market_share(pop, catalog).sum() == 0.0


def test_market_share_counts_copies():
    pop, catalog = _optima_pop(MTRAP, [3, 3, 7, 9])
    share = market_share(pop, catalog)
    assert share[3] == 0.5
    assert share[7] == share[9] == 0.25
    assert share.sum() == 1.0


def test_success_threshold_is_inclusive():
    pop, catalog = _optima_pop(MTRAP, [0, 1, 2, 2])
    assert success(pop, catalog, 3)
    assert not success(pop, catalog, 4)
    with pytest.raises(ValueError):
        success(pop, catalog, 33)


def test_drift_model_reproduces_the_worked_sizing_example():
    assert mahfoud_model(32, 31 / 32, 100) == pytest.approx(362.88, abs=0.01)


def test_drift_model_grows_with_horizon_and_niche_count():
    base = mahfoud_model(32, 0.95, 100)
    assert mahfoud_model(32, 0.95, 200) > base
    assert mahfoud_model(64, 0.95, 100) > base
    assert mahfoud_model(32, 0.99, 100) > base


def test_drift_model_rejects_degenerate_arguments():
    for bad in ((1, 0.9, 100), (32, 0.0, 100), (32, 1.0, 100), (32, 0.9, 0)):
        with pytest.raises(ValueError):
            mahfoud_model(*bad)


def test_ideal_frequencies_match_exact_rational_values():
    blocks = ideal_frequencies(MTRAP)
    assert len(blocks) == 5
    for freq in blocks:
        assert freq.sum() == pytest.approx(1.0, abs=1e-12)
        assert freq[0b0000] == pytest.approx(float(Fraction(21, 62)), abs=1e-12)
        assert freq[0b1111] == pytest.approx(float(Fraction(21, 62)), abs=1e-12)
        for c in (0b0001, 0b0010, 0b0100, 0b1000):
            assert freq[c] == pytest.approx(float(Fraction(5, 62)), abs=1e-12)
        assert freq[0b0011] == 0.0  # negative deviation, clamped out


def test_ideal_frequencies_favor_the_global_block_optimum():
    freq = ideal_frequencies(ProblemSpec("standard", 5, 4))[0]
    assert freq[0b1111] == pytest.approx(float(Fraction(43, 114)), abs=1e-12)
    assert freq[0b0000] == pytest.approx(float(Fraction(9, 38)), abs=1e-12)
    assert freq[0b0001] == pytest.approx(float(Fraction(11, 114)), abs=1e-12)
    assert freq[0b1111] > freq[0b0000] > freq[0b0001]


def test_maintenance_template_pins_the_protocol_fields():
    cfg = maintenance_config(MTRAP, "rts")
    assert cfg.algo == "rts"
    assert cfg.init == "optima"
    assert cfg.seed == 7
    assert cfg.selection == Tournament(2)


def test_experiment_config_validation():
    base = maintenance_config(SMALL, "subniche")
    with pytest.raises(ValueError):
        ExperimentConfig(base, runs=0)
    with pytest.raises(ValueError):
        ExperimentConfig(base, checkpoints=())
    with pytest.raises(ValueError):
        ExperimentConfig(base, checkpoints=(500, 100))
    with pytest.raises(ValueError):
        ExperimentConfig(base, checkpoints=(-1, 100))
    with pytest.raises(ValueError):
        ExperimentConfig(base, grid=(1, 100))
    with pytest.raises(ValueError):
        ExperimentConfig(base, required=0)
    with pytest.raises(ValueError):
        ExperimentConfig(base, max_population=PROBE_FLOOR - 1)
    catalog = enumerate_optima(SMALL)
    assert ExperimentConfig(base).required_count(catalog) == 4
    assert ExperimentConfig(base, required=2).required_count(catalog) == 2


def test_share_ensemble_shapes_and_windows():
    cfg = ExperimentConfig(maintenance_config(SMALL, "subniche"), runs=3)
    ens = share_ensemble(cfg, population_size=64, horizon=4)
    assert ens.shares.shape == (3, 5, 4)
    assert list(ens.generations) == [0, 1, 2, 3, 4]
    mean = ens.mean_share(0, 4)
    assert mean.shape == (4,)
    # niche sampling keeps blocks pure, so every member stays on an optimum
    assert mean.sum() == pytest.approx(1.0, abs=1e-12)
    assert ens.share_std(1, 4) >= 0.0
    with pytest.raises(ValueError):
        ens.mean_share(100, 200)


def test_gamma_is_one_when_the_population_dwarfs_the_niche_count():
    cfg = ExperimentConfig(maintenance_config(SMALL, "subniche"), runs=3,
                           checkpoints=(3,), grid=(64,))
    sweep = gamma_sweep(cfg)
    assert sweep.gamma(64, 3) == 1.0
    assert sweep.stderr(64, 3) == 0.0
    with pytest.raises(KeyError):
        sweep.gamma(65, 3)


def test_gamma_is_zero_when_the_population_cannot_hold_the_catalog():
    # 32 optima cannot fit in 16 slots, whatever the dynamics do
    cfg = ExperimentConfig(maintenance_config(MTRAP, "subniche"), runs=2,
                           checkpoints=(2, 5), grid=(16,))
    sweep = gamma_sweep(cfg)
    assert sweep.gamma(16, 2) == 0.0
    assert sweep.gamma(16, 5) == 0.0


def test_gamma_sweep_replays_identically():
    cfg = ExperimentConfig(maintenance_config(SMALL, "rts"), runs=2,
                           checkpoints=(2, 4), grid=(16, 32))
    assert gamma_sweep(cfg).cells == gamma_sweep(cfg).cells


def test_size_search_passes_at_the_floor_for_an_easy_target():
    # crowding never evicts an optimum for a worse child, so keeping one
    # optimum from an all-optima start succeeds at any population size
    cfg = ExperimentConfig(maintenance_config(SMALL, "rts"), runs=3,
                           required=1)
    result = min_population(cfg, target=0.9, checkpoint=2)
    assert result.n_min == PROBE_FLOOR
    assert result.largest_failure is None
    assert not result.saturated
    assert result.probes[PROBE_FLOOR] >= 0.9


def test_size_search_brackets_the_threshold():
    cfg = ExperimentConfig(maintenance_config(MTRAP, "subniche"), runs=3)
    result = min_population(cfg, target=0.9, checkpoint=3)
    assert not result.saturated
    assert result.n_min is not None and result.largest_failure is not None
    assert result.largest_failure < result.n_min
    assert result.probes[result.n_min] >= 0.9
    assert result.probes[result.largest_failure] < 0.9
    # bracket was bisected down to the advertised 10% resolution
    assert result.n_min - result.largest_failure <= max(1, result.n_min // 10)
    assert result.n_opt == 32


def test_size_search_reports_saturation_at_the_cap():
    cfg = ExperimentConfig(maintenance_config(MTRAP, "subniche"), runs=2,
                           max_population=16)
    result = min_population(cfg, target=0.9, checkpoint=5)
    assert result.saturated
    assert result.n_min is None
    assert result.largest_failure == 16


def test_size_profile_shares_probes_across_horizons():
    cfg = ExperimentConfig(maintenance_config(SMALL, "subniche"), runs=3)
    profile = min_population_profile(cfg, target=0.5, checkpoints=[2, 4])
    assert set(profile) == {2, 4}
    # same ensembles serve both horizons, so probed sizes agree
    assert set(profile[2].probes) == set(profile[4].probes)
    assert profile[4].saturated or profile[4].n_min >= profile[2].n_min


def test_size_search_rejects_bad_targets_and_checkpoints():
    cfg = ExperimentConfig(maintenance_config(SMALL, "subniche"), runs=2)
    for target in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            min_population(cfg, target=target, checkpoint=2)
    with pytest.raises(ValueError):
        min_population(cfg, target=0.5, checkpoint=0)


def test_frequency_verification_protocol_shapes():
    report = verify_frequencies(SMALL, runs=2, generations=6, warmup=3,
                                sample_size=400, seed=7)
    assert report.trajectory.shape == (2, 6, 16)
    assert list(report.trajectory_generations) == list(range(1, 7))
    assert len(report.rows) == 2 * 16
    for b in (0, 1):
        total = sum(r.experimental for r in report.rows if r.block == b)
        assert total == pytest.approx(1.0, abs=1e-9)
    assert report.max_abs_error() < 0.1
    with pytest.raises(ValueError):
        verify_frequencies(SMALL, runs=1, generations=5, warmup=0)
    with pytest.raises(ValueError):
        verify_frequencies(SMALL, runs=1, generations=5, warmup=6)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_trace_csv_schema(tmp_path):
    cfg = ExperimentConfig(maintenance_config(SMALL, "subniche"), runs=2)
    ens = share_ensemble(cfg, population_size=16, horizon=2)
    path = tmp_path / "trace.csv"
    write_trace_csv(str(path), ens)
    rows = _read_csv(path)
    assert rows[0] == ["run", "generation", "optimum_id", "share"]
    assert len(rows) == 1 + 2 * 3 * 4
    assert rows[1][:3] == ["0", "0", "0"]
    assert 0.0 <= float(rows[1][3]) <= 1.0


def test_single_run_trace_csv_schema(tmp_path):
    trace = run(RunConfig(SMALL, "rts", 16, 2, seed=7, init="optima"))
    path = tmp_path / "trace.csv"
    write_run_trace_csv(str(path), trace, run_idx=4)
    rows = _read_csv(path)
    assert rows[0] == ["run", "generation", "optimum_id", "share"]
    assert {r[0] for r in rows[1:]} == {"4"}
    assert len(rows) == 1 + 3 * 4


def test_gamma_csv_schema(tmp_path):
    cfg = ExperimentConfig(maintenance_config(SMALL, "subniche"), runs=2,
                           checkpoints=(2,), grid=(16,))
    path = tmp_path / "gamma.csv"
    write_gamma_csv(str(path), [gamma_sweep(cfg)])
    rows = _read_csv(path)
    assert rows[0] == ["algo", "pop", "checkpoint", "gamma", "stderr", "runs"]
    assert rows[1][0] == "subniche"
    assert rows[1][1] == "16"
    assert rows[1][5] == "2"


def test_minpop_csv_encodes_saturation_as_minus_one(tmp_path):
    results = [
        MinPopResult("subniche", 32, 100, 0.97, 250, 230, False, 50),
        MinPopResult("rts", 32, 100, 0.97, None, 1 << 20, True, 50),
    ]
    path = tmp_path / "minpop.csv"
    write_minpop_csv(str(path), results)
    rows = _read_csv(path)
    assert rows[0] == ["algo", "n_opt", "t", "n_min", "runs"]
    assert rows[1] == ["subniche", "32", "100", "250", "50"]
    assert rows[2] == ["rts", "32", "100", "-1", "50"]


def test_freq_csv_schema(tmp_path):
    report = FrequencyReport(
        SMALL,
        (FrequencyRow(0, "0000", 21 / 62, 0.3391, 0.0005),
         FrequencyRow(0, "1111", 21 / 62, 0.3379, 0.0005)),
        np.zeros((1, 1, 16)), np.array([1]))
    path = tmp_path / "freq.csv"
    write_freq_csv(str(path), report)
    rows = _read_csv(path)
    assert rows[0] == ["block", "schema", "ideal", "experimental", "stderr"]
    assert rows[1][1] == "0000"
    assert float(rows[1][2]) == pytest.approx(21 / 62, abs=1e-9)


def test_frequency_trace_csv_reuses_the_trace_schema(tmp_path):
    traj = np.random.default_rng(0).random((2, 3, 4))
    report = FrequencyReport(SMALL, (), traj, np.array([1, 2, 3]))
    path = tmp_path / "freq_trace.csv"
    write_frequency_trace_csv(str(path), report)
    rows = _read_csv(path)
    assert rows[0] == ["run", "generation", "optimum_id", "share"]
    assert len(rows) == 1 + 2 * 3 * 4
    assert rows[1][:3] == ["0", "1", "0"]
