"""Synthetic household populations with known demand parameters.

Prices are jointly lognormal with a configurable log-correlation; errors
carry an additive cluster effect. Populations come either from the
reduced-form log-log models or from the structural demand closed form, and
feed the same estimation path as surveyed data.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .core_model import HouseholdRecord, structural_vmt
from .design import ModelSpec, design_from_columns, normalize_control_config
from .errors import FileNotFound, InvalidConfig
from .estimator import fit_model

SYNTHETIC_CONTROLS = normalize_control_config(
    {
        "blocks": {
            "synthetic": {
                "numeric": ["hhsize"],
                "categorical": {
                    "urban": ["1", "2"],
                    "income_group": ["1", "2", "3", "4", "5"],
                },
            }
        }
    }
)

GAS_PRICE = 2.40
HOURS_PER_MILE = 1.0 / 30.0


@dataclass
class SyntheticConfig:
    n: int = 50_000
    mode: str = "reduced"  # or "structural"
    betas: dict = field(default_factory=lambda: {"const": 9.0, "log_p_f": -0.10, "log_p_t": -0.40})
    group_betas: dict = field(default_factory=dict)  # e.g. {"log_p_t:g5": -0.18}
    control_effects: dict = field(default_factory=lambda: {"hhsize": 0.05, "urban=2": -0.10})
    alpha: float = -1.0
    xi: float = 1.0
    t_y: float = 0.0
    price_log_correlation: float = 0.37
    mean_p_f: float = 0.10
    mean_p_t: float = 0.40
    log_sd_f: float = 0.30
    log_sd_t: float = 0.60
    n_clusters: int = 50
    cluster_effect_sd: float = 0.20
    noise_sd: float = 0.80
    income_group_probabilities: list = field(default_factory=lambda: [0.2] * 5)
    weight_log_sd: float = 0.50
    seed: int = 20170101

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n <= 0:
            raise InvalidConfig("n must be positive")
        if self.mode not in ("reduced", "structural"):
            raise InvalidConfig(f"mode must be 'reduced' or 'structural', got {self.mode!r}")
        if not abs(self.price_log_correlation) < 1:
            raise InvalidConfig("price_log_correlation must lie in (-1, 1)")
        for name in ("log_sd_f", "log_sd_t", "cluster_effect_sd", "noise_sd", "weight_log_sd"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be non-negative")
        if not (self.mean_p_f > 0 and self.mean_p_t > 0):
            raise InvalidConfig("mean prices must be positive")
        if self.n_clusters < 1:
            raise InvalidConfig("n_clusters must be at least 1")
        p = np.asarray(self.income_group_probabilities, dtype=float)
        if p.shape != (5,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise InvalidConfig("income_group_probabilities must be 5 non-negative values summing to 1")
        if self.mode == "structural" and not self.alpha < 0:
            raise InvalidConfig("structural mode needs alpha < 0")
        known = {"const", "log_p_f", "log_p_t", "log_pi"}
        if self.mode == "reduced" and not set(self.betas) <= known:
            raise InvalidConfig(f"unknown beta(s): {sorted(set(self.betas) - known)}")

    @classmethod
    def from_file(cls, path) -> "SyntheticConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFound(path)
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        data = data.get("synthetic", data)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticConfig":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(data) - allowed
        if unknown:
            raise InvalidConfig(f"unknown synthetic config key(s): {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def true_elasticities(self) -> dict:
        if self.mode == "structural":
            return {"log_pi": -1.0 / (1.0 - self.alpha)}
        return {k: v for k, v in self.betas.items() if k != "const"}


def _draw_columns(cfg: SyntheticConfig, rng: np.random.Generator) -> dict:
    n = cfg.n
    rho = cfg.price_log_correlation
    z = rng.standard_normal((n, 2))
    z2 = rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1]
    mu_f = math.log(cfg.mean_p_f) - 0.5 * cfg.log_sd_f**2
    mu_t = math.log(cfg.mean_p_t) - 0.5 * cfg.log_sd_t**2
    log_p_f = mu_f + cfg.log_sd_f * z[:, 0]
    log_p_t = mu_t + cfg.log_sd_t * z2
    groups = rng.choice(5, size=n, p=np.asarray(cfg.income_group_probabilities, dtype=float)) + 1
    clusters = rng.integers(0, cfg.n_clusters, size=n)
    cluster_effect = rng.normal(0.0, cfg.cluster_effect_sd, size=cfg.n_clusters)
    noise = rng.normal(0.0, cfg.noise_sd, size=n)
    weights = np.exp(rng.normal(0.0, cfg.weight_log_sd, size=n))
    hhsize = 1 + np.minimum(rng.poisson(1.5, size=n), 7)
    urban = np.where(rng.random(n) < 0.8, 1, 2)

    p_f = np.exp(log_p_f)
    p_t = np.exp(log_p_t)
    if cfg.mode == "structural":
        wage = p_t / HOURS_PER_MILE
        log_vmt = np.array(
            [math.log(structural_vmt(cfg.alpha, cfg.xi, cfg.t_y, w, f + t)) for w, f, t in zip(wage, p_f, p_t)]
        )
    else:
        cols = {"log_p_f": log_p_f, "log_p_t": log_p_t, "log_pi": np.log(p_f + p_t)}
        log_vmt = np.full(n, float(cfg.betas.get("const", 0.0)))
        for name, b in cfg.betas.items():
            if name != "const":
                log_vmt += b * cols[name]
        for name, b in cfg.group_betas.items():
            price, _, g = name.partition(":g")
            if price not in cols or not g.isdigit():
                raise InvalidConfig(f"bad group beta name {name!r}; expected e.g. 'log_p_t:g5'")
            log_vmt += b * cols[price] * (groups == int(g))
    for name, b in cfg.control_effects.items():
        if cfg.mode == "structural":
            break
        if name == "hhsize":
            log_vmt += b * hhsize
        elif name.startswith("urban="):
            log_vmt += b * (urban == int(name.split("=")[1]))
        elif name.startswith("income_group="):
            log_vmt += b * (groups == int(name.split("=")[1]))
        else:
            raise InvalidConfig(f"unknown control effect {name!r}")
    log_vmt = log_vmt + cluster_effect[clusters] + noise

    return {
        "log_vmt": log_vmt,
        "p_f": p_f,
        "p_t": p_t,
        "groups": groups,
        "clusters": clusters,
        "weights": weights,
        "controls": {"hhsize": hhsize, "urban": urban, "income_group": groups},
    }


def generate_population(config: SyntheticConfig) -> list[HouseholdRecord]:
    """Deterministic for a given config (including its seed)."""
    c = _draw_columns(config, np.random.default_rng(config.seed))
    width = len(str(config.n))
    records = []
    for i in range(config.n):
        p_f = float(c["p_f"][i])
        p_t = float(c["p_t"][i])
        vmt = math.exp(c["log_vmt"][i])
        records.append(
            HouseholdRecord(
                id=f"S{i + 1:0{width}d}",
                annual_vmt=vmt,
                annual_drive_time=vmt * HOURS_PER_MILE,
                gas_price=GAS_PRICE,
                income_group=int(c["groups"][i]),
                sample_weight=float(c["weights"][i]),
                cluster_id=f"c{int(c['clusters'][i]):03d}",
                controls={"hhsize": str(int(c["controls"]["hhsize"][i])), "urban": str(int(c["controls"]["urban"][i]))},
                fuel_cost=p_f,
                # all driving valued at the full wage in the base scenario
                wage=p_t / HOURS_PER_MILE,
                work_time_share=1.0,
                hours_per_mile=HOURS_PER_MILE,
            )
        )
    return records


def design_for(columns: dict, spec: ModelSpec):
    return design_from_columns(
        spec,
        columns["log_vmt"],
        columns["p_f"],
        columns["p_t"],
        columns["groups"],
        columns["weights"],
        columns["clusters"],
        columns["controls"],
        SYNTHETIC_CONTROLS,
    )


# ----------------------------------------------------------------------------
# Monte Carlo


def _truth(cfg: SyntheticConfig, spec: ModelSpec) -> dict:
    base = cfg.true_elasticities()
    truth = {c: base[c] for c in spec.price_columns if c in base}
    for name, b in cfg.group_betas.items():
        if name.split(":")[0] in spec.price_columns and spec.interact_income:
            truth[name] = b
    if spec.interact_income:
        for c in spec.price_columns:
            for g in range(2, 6):
                truth.setdefault(f"{c}:g{g}", 0.0)
    return truth


def _one_rep(args):
    cfg, spec, seed_seq, compare_ovb = args
    rng = np.random.default_rng(seed_seq)
    cols = _draw_columns(cfg, rng)
    fit = fit_model(design_for(cols, spec), spec)
    out = {"beta": {}, "se": {}}
    for name in fit.names:
        out["beta"][name] = float(fit.coef(name))
        out["se"][name] = float(fit.stderr(name))
    if compare_ovb:
        m1 = fit_model(design_for(cols, ModelSpec("M1")), ModelSpec("M1"))
        m3 = fit if spec.model_id == "M3" and not spec.interact_income else fit_model(
            design_for(cols, ModelSpec("M3")), ModelSpec("M3")
        )
        out["ovb"] = (m1.coef("log_p_f"), m3.coef("log_p_f"))
    return out


@dataclass
class MonteCarloReport:
    reps: int
    spec: dict
    coefficients: dict  # name -> stats
    ovb: Optional[dict] = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "reps": self.reps,
            "spec": self.spec,
            "coefficients": self.coefficients,
            "omitted_variable_bias": self.ovb,
            "config": self.config,
        }


def monte_carlo_recovery(
    config: SyntheticConfig,
    reps: int,
    model_spec: ModelSpec = ModelSpec("M3"),
    n_jobs: int = 1,
    compare_ovb: Optional[bool] = None,
    z_crit: float = 1.959963984540054,
) -> MonteCarloReport:
    """Bias, spread and 95% CI coverage of the price coefficients over
    ``reps`` independent populations; optionally the M1-vs-M3 fuel
    elasticity comparison on the same draws."""
    if reps < 2:
        raise InvalidConfig("monte carlo recovery needs reps >= 2")
    if compare_ovb is None:
        compare_ovb = config.mode == "reduced" and {"log_p_f", "log_p_t"} <= set(config.betas)
    children = np.random.SeedSequence(config.seed).spawn(reps)
    tasks = [(config, model_spec, child, compare_ovb) for child in children]
    if n_jobs == 1:
        results = [_one_rep(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            results = list(pool.map(_one_rep, tasks))

    truth = _truth(config, model_spec)
    coefs = {}
    for name, true in truth.items():
        b = np.array([r["beta"][name] for r in results])
        s = np.array([r["se"][name] for r in results])
        covered = np.abs(b - true) <= z_crit * s
        coefs[name] = {
            "truth": true,
            "mean": float(b.mean()),
            "bias": float(b.mean() - true),
            "sd": float(b.std(ddof=1)),
            "mean_se": float(s.mean()),
            "coverage": float(covered.mean()),
            "estimates": [float(v) for v in b],
            "std_errors": [float(v) for v in s],
        }
    ovb = None
    if compare_ovb:
        m1 = np.array([r["ovb"][0] for r in results])
        m3 = np.array([r["ovb"][1] for r in results])
        ovb = {
            "mean_eps_f_m1": float(m1.mean()),
            "mean_eps_f_m3": float(m3.mean()),
            "share_m1_larger_in_magnitude": float(np.mean(np.abs(m1) > np.abs(m3))),
            "eps_f_m1": [float(v) for v in m1],
            "eps_f_m3": [float(v) for v in m3],
        }
    return MonteCarloReport(reps, model_spec.to_dict(), coefs, ovb, config.to_dict())
