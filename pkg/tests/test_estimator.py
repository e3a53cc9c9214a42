import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from cavrebound.design import ModelSpec, build_design
from cavrebound.errors import (
    DegenerateResponse,
    MissingCoefficient,
    NonPositiveWeight,
    RankDeficient,
    SingleCluster,
)
from cavrebound.estimator import (
    ElasticitySet,
    FitResult,
    cluster_robust_cov,
    extract_elasticities,
    fit_model,
    weighted_pseudo_r2,
    wls_fit,
)
from cavrebound.synthetic import SYNTHETIC_CONTROLS, SyntheticConfig, _draw_columns, design_for, generate_population

SIX = dict(
    X=[[1.0, 0.2, 3.0], [1.0, -1.1, 2.5], [1.0, 0.7, 0.4], [1.0, 1.9, 1.1], [1.0, -0.4, 2.2], [1.0, 0.8, -0.6]],
    y=[0.3, -1.2, 1.4, 2.6, 0.1, 1.9],
    w=[1.0, 0.5, 2.0, 1.2, 0.8, 1.7],
    clusters=["x", "x", "y", "y", "z", "z"],
)


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def test_exact_fit():
    beta = wls_fit(np.array([[1.0], [2.0], [3.0]]), np.array([2.0, 4.0, 6.0]), np.ones(3))
    assert beta == pytest.approx([2.0], rel=1e-14)


def test_wls_matches_normal_equations():
    X, y, w = (np.array(SIX[k]) for k in ("X", "y", "w"))
    assert _rel(wls_fit(X, y, w), oracles.wls_normal_equations(SIX["X"], SIX["y"], SIX["w"])) < 1e-10


@pytest.mark.parametrize("correction", ["CR0", "CR1"])
def test_sandwich_matches_oracle(correction):
    X, y, w = (np.array(SIX[k]) for k in ("X", "y", "w"))
    e = y - X @ wls_fit(X, y, w)
    V = cluster_robust_cov(X, e, w, np.array(SIX["clusters"]), correction)
    assert _rel(V, oracles.sandwich(SIX["X"], SIX["y"], SIX["w"], SIX["clusters"], correction)) < 1e-10


def test_singleton_clusters_cr0_is_hc0():
    rng = np.random.default_rng(0)
    X = np.column_stack([np.ones(40), rng.normal(size=(40, 2))])
    y = X @ [1.0, 0.5, -0.3] + rng.normal(size=40) * (1 + np.abs(X[:, 1]))
    w = rng.uniform(0.5, 2.0, 40)
    e = y - X @ wls_fit(X, y, w)
    V = cluster_robust_cov(X, e, w, np.arange(40), "CR0")
    assert _rel(V, oracles.hc0(X.tolist(), y.tolist(), w.tolist())) < 1e-10


def test_cr1_close_to_classical_under_homoskedasticity():
    rng = np.random.default_rng(1)
    ratios = []
    for _ in range(200):
        n = 400
        X = np.column_stack([np.ones(n), rng.normal(size=n), rng.normal(size=n)])
        y = X @ [0.5, 1.0, -1.0] + rng.normal(size=n)
        w = np.ones(n)
        e = y - X @ wls_fit(X, y, w)
        V = cluster_robust_cov(X, e, w, rng.integers(0, 100, size=n), "CR1")
        s2 = e @ e / (n - 3)
        Vc = s2 * np.linalg.inv(X.T @ X)
        ratios.append(np.sqrt(np.diag(V)[1:] / np.diag(Vc)[1:]))
    mean_ratio = np.mean(ratios, axis=0)
    assert np.all(np.abs(mean_ratio - 1.0) < 0.15), mean_ratio


def test_rank_deficiency_names_column():
    X = np.array(SIX["X"])
    X = np.column_stack([X, X[:, 1]])
    with pytest.raises(RankDeficient) as exc:
        wls_fit(X, np.array(SIX["y"]), np.array(SIX["w"]), ["const", "a", "b", "a_copy"])
    assert exc.value.columns in (["a"], ["a_copy"])


def test_weights_must_be_positive():
    X, y = np.array(SIX["X"]), np.array(SIX["y"])
    with pytest.raises(NonPositiveWeight):
        wls_fit(X, y, np.array([1, 1, 0, 1, 1, 1.0]))


def test_single_cluster():
    X, y, w = (np.array(SIX[k]) for k in ("X", "y", "w"))
    e = y - X @ wls_fit(X, y, w)
    with pytest.raises(SingleCluster):
        cluster_robust_cov(X, e, w, np.zeros(6))
    V = cluster_robust_cov(X, e, w, np.zeros(6), allow_single_cluster=True)
    assert np.all(np.isfinite(V))


def test_degenerate_response():
    with pytest.raises(DegenerateResponse):
        weighted_pseudo_r2(np.ones(5), np.ones(5), np.ones(5))


@pytest.fixture(scope="module")
def synth_columns():
    cfg = SyntheticConfig(n=3000, n_clusters=30, seed=9)
    return _draw_columns(cfg, np.random.default_rng(cfg.seed))


def test_weighted_orthogonality(synth_columns):
    d = design_for(synth_columns, ModelSpec("M3"))
    fit = fit_model(d, ModelSpec("M3"))
    e = d.y - d.X @ fit.beta
    scale = np.sum(d.w * np.abs(d.y))
    assert np.max(np.abs((d.w * e) @ d.X)) < 1e-8 * scale


def test_weight_scale_invariance(synth_columns):
    d = design_for(synth_columns, ModelSpec("M3"))
    a = fit_model(d, correction="CR0")
    d.w = d.w * 37.5
    b = fit_model(d, correction="CR0")
    assert _rel(b.beta, a.beta) < 1e-10
    assert _rel(b.vcov, a.vcov) < 1e-10
    assert b.pseudo_r2 == pytest.approx(a.pseudo_r2, rel=1e-10)


def test_permutation_invariance(synth_columns):
    d = design_for(synth_columns, ModelSpec("M4"))
    a = fit_model(d)
    perm = np.random.default_rng(2).permutation(d.n)
    d.y, d.X, d.w, d.clusters = d.y[perm], d.X[perm], d.w[perm], d.clusters[perm]
    b = fit_model(d)
    assert _rel(b.beta, a.beta) < 1e-10 and _rel(b.vcov, a.vcov) < 1e-10
    assert b.pseudo_r2 == pytest.approx(a.pseudo_r2, rel=1e-12)


def test_nested_pseudo_r2(synth_columns):
    r2 = {m: fit_model(design_for(synth_columns, ModelSpec(m))).pseudo_r2 for m in ("M1", "M2", "M3")}
    assert r2["M3"] >= r2["M1"] and r2["M3"] >= r2["M2"]


def test_fit_recovers_truth_within_three_se():
    cfg = SyntheticConfig(n=50_000, seed=21)
    fit = fit_model(design_for(_draw_columns(cfg, np.random.default_rng(cfg.seed)), ModelSpec("M3")))
    for name, truth in (("log_p_f", -0.10), ("log_p_t", -0.40)):
        assert abs(fit.coef(name) - truth) < 3 * fit.stderr(name)
    assert fit.n_clusters == 50 and fit.correction == "CR1"
    assert fit.metadata["p_value_method"] == "normal approximation"


def test_p_values_follow_normal_approximation(synth_columns):
    from scipy import stats

    fit = fit_model(design_for(synth_columns, ModelSpec("M3")))
    j = fit.index("log_p_t")
    assert fit.p_values[j] == pytest.approx(2 * stats.norm.sf(abs(fit.beta[j] / fit.se[j])))
    assert np.allclose(fit.se, np.sqrt(np.diag(fit.vcov)))
    assert np.allclose(fit.vcov, fit.vcov.T)
    assert np.all(np.linalg.eigvalsh(fit.vcov) > -1e-12)


def test_fit_result_round_trip(synth_columns):
    spec = ModelSpec("M3", interact_income=True)
    fit = fit_model(design_for(synth_columns, spec), spec)
    d = json.loads(json.dumps(fit.to_dict()))
    back = FitResult.from_dict(d)
    assert back.names == fit.names and np.array_equal(back.beta, fit.beta) and np.array_equal(back.vcov, fit.vcov)
    assert back.spec == spec
    assert FitResult.from_dict({"fit": d}).names == fit.names


def _fake_fit(names, beta, vcov):
    beta = np.asarray(beta, float)
    vcov = np.asarray(vcov, float)
    se = np.sqrt(np.diag(vcov))
    return FitResult(list(names), beta, vcov, se, np.zeros_like(beta), 0.3, 100, 10)


def test_group_elasticity_is_base_plus_interaction():
    names = ["const", "log_p_f"] + [f"log_p_f:g{g}" for g in range(2, 6)]
    beta = [1.0, -0.153, 0.022, 0.056, 0.061, 0.044]
    vcov = np.diag([0.1, 0.026 ** 2, 0.01, 0.01, 0.01, 0.02 ** 2])
    vcov[1, 5] = vcov[5, 1] = -0.0002
    es = extract_elasticities(_fake_fit(names, beta, vcov), ModelSpec("M1", interact_income=True))
    assert es.group(1)["eps_f"] == -0.153
    assert es.group(5)["eps_f"] == pytest.approx(-0.109)
    assert es.per_group_se[5]["eps_f"] == pytest.approx(np.sqrt(0.026 ** 2 + 0.02 ** 2 - 0.0004))
    assert es.eps_f is None


def test_uninteracted_groups_share_base():
    es = extract_elasticities(_fake_fit(["const", "log_pi"], [1.0, -0.39], np.diag([0.1, 0.0025])), ModelSpec("M4"))
    assert es.eps_vmt == -0.39
    assert all(es.group(g)["eps_vmt"] == -0.39 for g in range(1, 6))
    with pytest.raises(MissingCoefficient):
        extract_elasticities(_fake_fit(["const", "log_pi"], [1, -0.39], np.eye(2)), ModelSpec("M3"))


def test_m4_group_truth_recovered():
    cfg = SyntheticConfig(n=50_000, seed=4, betas={"const": 9.0, "log_pi": -0.30},
                          group_betas={"log_pi:g3": -0.05, "log_pi:g5": -0.15})
    spec = ModelSpec("M4", interact_income=True)
    fit = fit_model(design_for(_draw_columns(cfg, np.random.default_rng(cfg.seed)), spec), spec)
    es = extract_elasticities(fit, spec)
    truth = {1: -0.30, 2: -0.30, 3: -0.35, 4: -0.30, 5: -0.45}
    for g, t in truth.items():
        assert abs(es.group(g)["eps_vmt"] - t) < 3 * es.per_group_se[g]["eps_vmt"]


def test_elasticity_set_round_trip_and_merge():
    a = ElasticitySet(eps_f=-0.1, eps_t=-0.4, se={"eps_f": 0.01}, per_group={1: {"eps_f": -0.1}})
    b = ElasticitySet(per_group={1: {"eps_vmt": -0.25}, 2: {"eps_vmt": -0.35}})
    m = a.merged(b)
    assert m.group(1) == {"eps_f": -0.1, "eps_vmt": -0.25} and m.eps_t == -0.4
    assert ElasticitySet.from_dict(json.loads(json.dumps(m.to_dict()))) == m
    assert ElasticitySet.from_dict({"elasticities": m.to_dict()}) == m


def test_records_path_matches_column_path():
    cfg = SyntheticConfig(n=800, n_clusters=12, seed=5)
    recs = generate_population(cfg)
    spec = ModelSpec("M3")
    a = fit_model(build_design(recs, spec, SYNTHETIC_CONTROLS), spec)
    b = fit_model(design_for(_draw_columns(cfg, np.random.default_rng(cfg.seed)), spec), spec)
    assert a.names == b.names
    assert _rel(a.beta, b.beta) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_weight_invariance_property(seed, c):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(30), rng.normal(size=(30, 2))])
    y = rng.normal(size=30)
    w = rng.uniform(0.1, 3, 30)
    cl = rng.integers(0, 5, 30)
    cl[:5] = np.arange(5)
    b1 = wls_fit(X, y, w)
    b2 = wls_fit(X, y, w * c)
    V1 = cluster_robust_cov(X, y - X @ b1, w, cl, "CR0")
    V2 = cluster_robust_cov(X, y - X @ b2, w * c, cl, "CR0")
    assert _rel(b2, b1) < 1e-9 and _rel(V2, V1) < 1e-9
