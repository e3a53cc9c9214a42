"""Plain-text tables in the layout of the elasticity and forecast results."""
from __future__ import annotations

import math
from typing import Mapping, Optional, Sequence

from scipy import stats

from .estimator import ElasticitySet, FitResult

ROW_LABELS = {"log_p_f": "eps_f", "log_p_t": "eps_t", "log_pi": "eps_vmt"}


def stars(p: Optional[float]) -> str:
    """Significance marks at the 1 / 5 / 10 percent levels."""
    if p is None or math.isnan(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


def _cell(est: float, se: float, p: Optional[float] = None) -> str:
    if p is None:
        p = 2.0 * stats.norm.sf(abs(est / se)) if se > 0 else math.nan
    return f"{est:.4f}{stars(p)} ({se:.3f})"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)


def elasticity_table(fits: Mapping[str, FitResult]) -> str:
    """One column per fitted model; price coefficients with clustered SEs."""
    if not fits:
        return "(no fitted models)"
    labels = list(fits)
    rows = []
    for coef, label in ROW_LABELS.items():
        row = [label]
        present = False
        for lab in labels:
            fit = fits[lab]
            if coef in fit.names:
                i = fit.names.index(coef)
                row.append(_cell(fit.beta[i], fit.se[i], fit.p_values[i]))
                present = True
            else:
                row.append("-")
        if present:
            rows.append(row)
    rows.append(["Pseudo R2"] + [f"{fits[lab].pseudo_r2:.3f}" for lab in labels])
    rows.append(["N"] + [str(fits[lab].n) for lab in labels])
    rows.append(["Clusters"] + [str(fits[lab].n_clusters) for lab in labels])
    table = _table([""] + labels, rows)
    return table + "\nDependent variable: log(VMT). Weighted by household sample weights; " \
        "standard errors clustered, in parentheses.\n*** p<0.01, ** p<0.05, * p<0.1 (normal approximation)."


def group_table(sets: Mapping[str, ElasticitySet]) -> str:
    """Per-income-group elasticities, one panel per elasticity set."""
    if not sets:
        return "(no income-group estimates)"
    groups = sorted({g for s in sets.values() for g in s.per_group})
    header = ["Income group"] + [f"Group {g}" for g in groups]
    rows = []
    for panel, es in sets.items():
        rows.append([f"[{panel}]"] + [""] * len(groups))
        for key in ("eps_f", "eps_t", "eps_vmt"):
            if not any(key in es.per_group.get(g, {}) for g in groups):
                continue
            row = [key]
            for g in groups:
                v = es.per_group.get(g, {}).get(key)
                se = es.per_group_se.get(g, {}).get(key)
                row.append("-" if v is None else (_cell(v, se) if se else f"{v:.4f}"))
            rows.append(row)
    return _table(header, rows)


def grid_summary(grids: Sequence) -> str:
    if not grids:
        return "(no scenario grids)"
    out = []
    for g in grids:
        if g.empty:
            out.append(f"[{g.label}] empty grid")
            continue
        imax = divmod(int(g.delta.argmax()), g.delta.shape[1])
        imin = divmod(int(g.delta.argmin()), g.delta.shape[1])
        n_bf = int(g.backfire.sum())
        out.append(
            f"[{g.label}] path {g.path}: induced travel {g.delta.min():.1%} "
            f"(X={g.x_values[imin[0]]:.2f}, Y={g.y_values[imin[1]]:.2f}) to {g.delta.max():.1%} "
            f"(X={g.x_values[imax[0]]:.2f}, Y={g.y_values[imax[1]]:.2f}); "
            f"backfire in {n_bf} of {g.delta.size} scenarios"
        )
        for x, y in g.frontier:
            ytxt = "none (backfire at Y=0)" if y is None else f"{y:.4f}"
            out.append(f"    break-even time cost reduction at X={x:.2f}: {ytxt}")
    return "\n".join(out)


def emit_report(
    fits: Optional[Mapping[str, FitResult]] = None,
    group_sets: Optional[Mapping[str, ElasticitySet]] = None,
    grids: Optional[Sequence] = None,
    notes: Sequence[str] = (),
) -> str:
    parts = [
        "== Elasticity estimates ==",
        elasticity_table(fits or {}),
        "",
        "== Elasticities by income group ==",
        group_table(group_sets or {}),
        "",
        "== Induced travel and backfire ==",
        grid_summary(grids or []),
    ]
    if notes:
        parts += ["", "== Notes =="] + [f"- {n}" for n in notes]
    return "\n".join(parts) + "\n"
