import numpy as np
import pytest

from cavrebound.design import ModelSpec
from cavrebound.errors import InvalidConfig
from cavrebound.estimator import fit_model
from cavrebound.synthetic import (
    HOURS_PER_MILE,
    SyntheticConfig,
    _draw_columns,
    design_for,
    generate_population,
    monte_carlo_recovery,
)


def test_config_validation():
    for bad in ({"n": 0}, {"price_log_correlation": 1.0}, {"noise_sd": -1}, {"mode": "other"},
                {"income_group_probabilities": [0.5, 0.5, 0, 0, 0.1]}, {"mode": "structural", "alpha": 0.5},
                {"betas": {"log_x": 1}}):
        with pytest.raises(InvalidConfig):
            SyntheticConfig(**bad)
    with pytest.raises(InvalidConfig):
        SyntheticConfig.from_dict({"sample_size": 5})


def test_config_from_file(tmp_path):
    (tmp_path / "s.yaml").write_text("synthetic:\n  n: 123\n  seed: 4\n")
    cfg = SyntheticConfig.from_file(tmp_path / "s.yaml")
    assert (cfg.n, cfg.seed) == (123, 4)
    assert SyntheticConfig.from_dict(cfg.to_dict()) == cfg


def test_population_is_deterministic():
    cfg = SyntheticConfig(n=50, seed=8)
    a, b = generate_population(cfg), generate_population(cfg)
    assert a == b
    assert generate_population(SyntheticConfig(n=50, seed=9)) != a
    assert a[0].id == "S01" and a[-1].id == "S50"


def test_records_carry_the_drawn_prices():
    cfg = SyntheticConfig(n=200, seed=2)
    cols = _draw_columns(cfg, np.random.default_rng(cfg.seed))
    recs = generate_population(cfg)
    assert np.allclose([r.fuel_cost for r in recs], cols["p_f"], rtol=1e-15)
    assert np.allclose([r.time_cost() for r in recs], cols["p_t"], rtol=1e-12)
    assert all(r.hours_per_mile == HOURS_PER_MILE for r in recs)


def test_price_moments():
    cfg = SyntheticConfig(n=200_000, seed=1)
    c = _draw_columns(cfg, np.random.default_rng(cfg.seed))
    assert np.corrcoef(np.log(c["p_f"]), np.log(c["p_t"]))[0, 1] == pytest.approx(0.37, abs=0.01)
    assert c["p_f"].mean() == pytest.approx(0.10, rel=0.01)
    assert c["p_t"].mean() == pytest.approx(0.40, rel=0.02)
    assert np.bincount(c["groups"])[1:].min() > 0.19 * cfg.n
    assert len(np.unique(c["clusters"])) == 50


def test_structural_mode_elasticity_for_other_alpha():
    cfg = SyntheticConfig(n=2000, mode="structural", alpha=-3.0, noise_sd=0, cluster_effect_sd=0, seed=2)
    assert cfg.true_elasticities() == {"log_pi": -0.25}
    fit = fit_model(design_for(_draw_columns(cfg, np.random.default_rng(2)), ModelSpec("M4")))
    assert fit.coef("log_pi") == pytest.approx(-0.25, abs=1e-9)


def test_monte_carlo_small_run_is_reproducible():
    cfg = SyntheticConfig(n=2000, n_clusters=20, seed=5)
    a = monte_carlo_recovery(cfg, 6)
    b = monte_carlo_recovery(cfg, 6)
    assert a.to_dict() == b.to_dict()
    assert set(a.coefficients) == {"log_p_f", "log_p_t"}
    assert a.ovb is not None and len(a.ovb["eps_f_m1"]) == 6
    with pytest.raises(InvalidConfig):
        monte_carlo_recovery(cfg, 1)


def test_monte_carlo_parallel_matches_serial():
    cfg = SyntheticConfig(n=1000, n_clusters=10, seed=6)
    serial = monte_carlo_recovery(cfg, 4)
    parallel = monte_carlo_recovery(cfg, 4, n_jobs=2)
    assert serial.to_dict() == parallel.to_dict()


def test_monte_carlo_interacted_truth():
    cfg = SyntheticConfig(n=3000, n_clusters=20, seed=7, group_betas={"log_p_t:g5": -0.2})
    rep = monte_carlo_recovery(cfg, 3, ModelSpec("M3", interact_income=True))
    assert rep.coefficients["log_p_t:g5"]["truth"] == -0.2
    assert rep.coefficients["log_p_f:g2"]["truth"] == 0.0
