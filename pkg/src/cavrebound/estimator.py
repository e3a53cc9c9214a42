"""Survey-weighted least squares with cluster-robust (sandwich) inference,
and extraction of price elasticities from fitted log-log models."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy import stats

from ._kernels import cluster_scores
from .design import N_INCOME_GROUPS, DesignMatrix, ModelSpec
from .errors import (
    DegenerateResponse,
    InvalidConfig,
    MissingCoefficient,
    NonPositiveWeight,
    RankDeficient,
    SingleCluster,
)

RANK_TOL = 1e-10


def _check_weights(w: np.ndarray) -> None:
    if not np.all(w > 0) or not np.all(np.isfinite(w)):
        raise NonPositiveWeight("all sampling weights must be positive and finite")


def _weighted_qr(X, w, column_names=None):
    """Economic QR of sqrt(w) * X with a rank check via column pivoting.

    Returns (Q, R) for the unpivoted, full-rank system.
    """
    X = np.asarray(X, dtype=float)
    w = np.asarray(w, dtype=float)
    _check_weights(w)
    n, k = X.shape
    if n < k:
        names = column_names or [f"x{j}" for j in range(k)]
        raise RankDeficient(names[n:])
    Xw = X * np.sqrt(w)[:, None]
    _, Rp, piv = sla.qr(Xw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(Rp))
    if k and (diag[0] == 0 or np.any(diag < RANK_TOL * diag[0])):
        rank = int(np.sum(diag >= RANK_TOL * diag[0])) if diag[0] > 0 else 0
        names = column_names or [f"x{j}" for j in range(k)]
        raise RankDeficient([names[j] for j in sorted(piv[rank:])])
    Q, R = sla.qr(Xw, mode="economic")
    return Q, R


def wls_fit(X, y, w, column_names: Optional[Sequence[str]] = None) -> np.ndarray:
    """beta minimising sum_i w_i (y_i - X_i beta)^2, by QR of the weighted system."""
    y = np.asarray(y, dtype=float)
    Q, R = _weighted_qr(X, w, column_names)
    return sla.solve_triangular(R, Q.T @ (y * np.sqrt(np.asarray(w, dtype=float))))


def _bread_from_r(R: np.ndarray) -> np.ndarray:
    Rinv = sla.solve_triangular(R, np.eye(R.shape[0]))
    return Rinv @ Rinv.T


def cluster_codes(clusters) -> tuple[np.ndarray, int]:
    _, codes = np.unique(np.asarray(clusters), return_inverse=True)
    codes = codes.astype(np.intp).ravel()
    return codes, int(codes.max()) + 1 if codes.size else 0


def cluster_robust_cov(
    X,
    residuals,
    w,
    clusters,
    correction: str = "CR1",
    allow_single_cluster: bool = False,
    _bread: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Sandwich covariance (X'WX)^-1 [sum_g s_g s_g'] (X'WX)^-1 with cluster
    scores s_g = sum_{i in g} w_i x_i e_i.

    CR1 scales by G/(G-1) * (n-1)/(n-k).
    """
    correction = correction.upper()
    if correction not in ("CR0", "CR1"):
        raise InvalidConfig(f"unknown small-sample correction {correction!r}")
    X = np.ascontiguousarray(X, dtype=float)
    e = np.asarray(residuals, dtype=float)
    w = np.asarray(w, dtype=float)
    n, k = X.shape
    codes, G = cluster_codes(clusters)
    if G < 2:
        if not allow_single_cluster:
            raise SingleCluster(f"cluster-robust inference needs at least 2 clusters, got {G}")
        correction = "CR0"
    bread = _bread if _bread is not None else _bread_from_r(_weighted_qr(X, w)[1])
    S = cluster_scores(X, np.ascontiguousarray(w * e), codes, G)
    V = bread @ (S.T @ S) @ bread
    if correction == "CR1":
        V *= G / (G - 1) * (n - 1) / (n - k)
    return 0.5 * (V + V.T)


@dataclass
class FitResult:
    names: list
    beta: np.ndarray
    vcov: np.ndarray
    se: np.ndarray
    p_values: np.ndarray
    pseudo_r2: float
    n: int
    n_clusters: int
    spec: Optional[ModelSpec] = None
    correction: str = "CR1"
    metadata: dict = field(default_factory=dict)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise MissingCoefficient(f"coefficient {name!r} not in fit") from None

    def coef(self, name: str) -> float:
        return float(self.beta[self.index(name)])

    def stderr(self, name: str) -> float:
        return float(self.se[self.index(name)])

    def cov(self, a: str, b: str) -> float:
        return float(self.vcov[self.index(a), self.index(b)])

    def to_dict(self) -> dict:
        return {
            "coefficients": {
                nm: {"estimate": float(b), "se": float(s), "p_value": _json_float(p)}
                for nm, b, s, p in zip(self.names, self.beta, self.se, self.p_values)
            },
            "names": list(self.names),
            "vcov": [[float(v) for v in row] for row in self.vcov],
            "pseudo_r2": float(self.pseudo_r2),
            "n": int(self.n),
            "n_clusters": int(self.n_clusters),
            "correction": self.correction,
            "spec": self.spec.to_dict() if self.spec is not None else None,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        if "fit" in d:  # estimate output wrapping the fit
            d = d["fit"]
        names = list(d["names"])
        coefs = d["coefficients"]
        spec = None
        if d.get("spec"):
            from .core_model import TtcScenario

            s = d["spec"]
            spec = ModelSpec(
                s["model_id"],
                bool(s["interact_income"]),
                None if s.get("control_blocks") is None else frozenset(s["control_blocks"]),
                TtcScenario(s["ttc_scenario"]["work_fraction"], s["ttc_scenario"]["nonwork_fraction"]),
            )
        return cls(
            names=names,
            beta=np.array([coefs[n]["estimate"] for n in names]),
            vcov=np.array(d["vcov"], dtype=float),
            se=np.array([coefs[n]["se"] for n in names]),
            p_values=np.array([math.nan if coefs[n]["p_value"] is None else coefs[n]["p_value"] for n in names]),
            pseudo_r2=d["pseudo_r2"],
            n=d["n"],
            n_clusters=d["n_clusters"],
            spec=spec,
            correction=d.get("correction", "CR1"),
            metadata=d.get("metadata", {}),
        )


def _json_float(x):
    x = float(x)
    return None if math.isnan(x) else x


def weighted_pseudo_r2(y, fitted, w) -> float:
    """1 - SSR_w / SST_w."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    ybar = np.sum(w * y) / np.sum(w)
    sst = np.sum(w * (y - ybar) ** 2)
    if not sst > 1e-14 * np.sum(w * y * y):
        raise DegenerateResponse("response has zero weighted variance; pseudo R2 undefined")
    return float(1.0 - np.sum(w * (y - fitted) ** 2) / sst)


def fit_model(
    design: DesignMatrix,
    spec: Optional[ModelSpec] = None,
    correction: str = "CR1",
    allow_single_cluster: bool = False,
) -> FitResult:
    y, X, w = design.y, design.X, design.w
    names = list(design.column_names)
    Q, R = _weighted_qr(X, w, names)
    sw = np.sqrt(w)
    beta = sla.solve_triangular(R, Q.T @ (y * sw))
    fitted = X @ beta
    resid = y - fitted
    r2 = weighted_pseudo_r2(y, fitted, w)
    vcov = cluster_robust_cov(
        X, resid, w, design.clusters, correction, allow_single_cluster, _bread=_bread_from_r(R)
    )
    se = np.sqrt(np.clip(np.diag(vcov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = beta / se
    p = 2.0 * stats.norm.sf(np.abs(z))
    _, G = cluster_codes(design.clusters)
    return FitResult(
        names=names,
        beta=beta,
        vcov=vcov,
        se=se,
        p_values=p,
        pseudo_r2=r2,
        n=design.n,
        n_clusters=G,
        spec=spec,
        correction=correction.upper() if G >= 2 else "CR0",
        metadata={
            "p_value_method": "normal approximation",
            "estimator": "survey-weighted least squares",
            "excluded_rows": len(design.excluded),
            "dropped_columns": list(design.dropped_columns),
        },
    )


# ----------------------------------------------------------------------------
# elasticities

_ELASTICITY_OF = {"log_p_f": "eps_f", "log_p_t": "eps_t", "log_pi": "eps_vmt"}


@dataclass
class ElasticitySet:
    eps_f: Optional[float] = None
    eps_t: Optional[float] = None
    eps_vmt: Optional[float] = None
    se: dict = field(default_factory=dict)
    per_group: dict = field(default_factory=dict)  # group -> {"eps_f": .., ...}
    per_group_se: dict = field(default_factory=dict)

    def overall(self) -> dict:
        return {k: getattr(self, k) for k in ("eps_f", "eps_t", "eps_vmt") if getattr(self, k) is not None}

    def group(self, g: int) -> dict:
        return dict(self.per_group[int(g)])

    def merged(self, other: "ElasticitySet") -> "ElasticitySet":
        """Fill missing fields from ``other``; per-group entries are combined."""
        out = ElasticitySet(
            eps_f=self.eps_f if self.eps_f is not None else other.eps_f,
            eps_t=self.eps_t if self.eps_t is not None else other.eps_t,
            eps_vmt=self.eps_vmt if self.eps_vmt is not None else other.eps_vmt,
            se={**other.se, **self.se},
        )
        for src in (other, self):
            for g, vals in src.per_group.items():
                out.per_group.setdefault(g, {}).update(vals)
            for g, vals in src.per_group_se.items():
                out.per_group_se.setdefault(g, {}).update(vals)
        return out

    def to_dict(self) -> dict:
        return {
            "eps_f": self.eps_f,
            "eps_t": self.eps_t,
            "eps_vmt": self.eps_vmt,
            "se": dict(self.se),
            "per_group": {str(g): dict(v) for g, v in sorted(self.per_group.items())},
            "per_group_se": {str(g): dict(v) for g, v in sorted(self.per_group_se.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ElasticitySet":
        if "elasticities" in d:  # a serialized fit
            d = d["elasticities"]
        return cls(
            eps_f=d.get("eps_f"),
            eps_t=d.get("eps_t"),
            eps_vmt=d.get("eps_vmt"),
            se=dict(d.get("se", {}) or {}),
            per_group={int(g): dict(v) for g, v in (d.get("per_group") or {}).items()},
            per_group_se={int(g): dict(v) for g, v in (d.get("per_group_se") or {}).items()},
        )


def extract_elasticities(fit: FitResult, spec: ModelSpec, n_groups: int = N_INCOME_GROUPS) -> ElasticitySet:
    """Elasticities from a fitted log-log model.

    Without income interactions the price coefficients are the overall
    elasticities and every group shares them. With interactions the
    uninteracted coefficient is group 1's elasticity and group g adds its
    interaction coefficient; no overall value is identified then.
    """
    out = ElasticitySet()
    for col in spec.price_columns:
        key = _ELASTICITY_OF[col]
        base = fit.coef(col)
        base_se = fit.stderr(col)
        if not spec.interact_income:
            setattr(out, key, base)
            out.se[key] = base_se
            for g in range(1, n_groups + 1):
                out.per_group.setdefault(g, {})[key] = base
                out.per_group_se.setdefault(g, {})[key] = base_se
            continue
        out.per_group.setdefault(1, {})[key] = base
        out.per_group_se.setdefault(1, {})[key] = base_se
        for g in range(2, n_groups + 1):
            inter = f"{col}:g{g}"
            var = fit.cov(col, col) + fit.cov(inter, inter) + 2.0 * fit.cov(col, inter)
            out.per_group.setdefault(g, {})[key] = base + fit.coef(inter)
            out.per_group_se.setdefault(g, {})[key] = math.sqrt(max(var, 0.0))
    return out
