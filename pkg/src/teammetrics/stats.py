"""Correlation matrices, the five-family OLS battery, and derived effects.

Model families (targets and size measures enter transformed; ``ts`` and
``ind`` denote log team size and log mean indegree, ``ts2`` the square of
log team size):

  a: target ~ 1 + ts                      (linear)
  b: target ~ 1 + ts + ts2                (quadratic)
  c: target ~ 1 + ts + ind + fmodr        (linear with controls)
  d: target ~ 1 + ts + ts2 + ind + fmodr  (quadratic with controls)
  e: target ~ 1 + ts + ind + ts*ind + fmodr  (interaction)

Coefficients are reported with standard errors, exact Student-t p-values,
and Bonferroni-adjusted p-values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import stdtr

FAMILY_TERMS: dict[str, tuple[str, ...]] = {
    "a": ("intercept", "ts"),
    "b": ("intercept", "ts", "ts2"),
    "c": ("intercept", "ts", "ind", "fmodr"),
    "d": ("intercept", "ts", "ts2", "ind", "fmodr"),
    "e": ("intercept", "ts", "ind", "ts_x_ind", "fmodr"),
}

TERM_LABELS = {
    "intercept": "(IC)",
    "ts": "TS (log)",
    "ts2": "TS^2 (log)",
    "ind": "InD (log)",
    "ts_x_ind": "TS x InD",
    "fmodr": "FModR",
}

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ModelSpec:
    """One regression: a transformed target and a family's term set."""

    target: str
    family: str
    terms: tuple[str, ...] = ()

    def __post_init__(self):
        if self.family not in FAMILY_TERMS:
            raise ValueError(f"unknown model family {self.family!r}")
        terms = self.terms or FAMILY_TERMS[self.family]
        if terms[0] != "intercept":
            raise ValueError("models always include an intercept")
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def for_family(cls, target: str, family: str) -> "ModelSpec":
        return cls(target=target, family=family)


@dataclass
class TermEstimate:
    name: str
    beta: float
    se: float
    t: float
    p: float
    p_adj: float
    stars: str


@dataclass
class RegressionResult:
    spec: ModelSpec
    terms: list[TermEstimate]
    r2: float
    adj_r2: float
    n: int
    m: int  # Bonferroni correction factor used
    term_means: dict[str, float] = field(default_factory=dict)

    def coef(self, name: str) -> TermEstimate:
        for term in self.terms:
            if term.name == name:
                return term
        raise KeyError(f"no term {name!r} in model {self.spec.family}")

    def to_json_dict(self) -> dict:
        return {
            "target": self.spec.target,
            "family": self.spec.family,
            "n": self.n,
            "bonferroni_m": self.m,
            "r2": self.r2,
            "adj_r2": self.adj_r2,
            "term_means": dict(sorted(self.term_means.items())),
            "terms": [
                {
                    "name": t.name,
                    "beta": t.beta,
                    "se": t.se,
                    "t": t.t,
                    "p": t.p,
                    "p_adj": t.p_adj,
                    "stars": t.stars,
                }
                for t in self.terms
            ],
        }


def pearson_matrix(
    table: Mapping[str, np.ndarray],
    features: Sequence[str],
    transforms=None,
) -> np.ndarray:
    """Pairwise sample Pearson correlations over (optionally transformed)
    feature columns. Zero-variance features yield NaN off-diagonal cells."""
    columns = []
    for name in features:
        values = np.asarray(table[name], dtype=float)
        if transforms is not None:
            values = transforms.apply(name, values)
        columns.append(values)
    n = len(columns[0]) if columns else 0
    if n < 3:
        raise ValueError("need at least 3 observations for correlations")
    k = len(features)
    out = np.eye(k)
    centered = [c - c.mean() for c in columns]
    norms = [float(np.sqrt((c * c).sum())) for c in centered]
    for i in range(k):
        for j in range(i + 1, k):
            if norms[i] == 0.0 or norms[j] == 0.0:
                r = np.nan
            else:
                r = float((centered[i] * centered[j]).sum() / (norms[i] * norms[j]))
            out[i, j] = out[j, i] = r
    return out


def design_matrix(spec: ModelSpec, table: Mapping[str, np.ndarray]):
    """Build the model's design columns from a transformed feature table."""
    ts = np.asarray(table["ts"], dtype=float) if "ts" in table else None
    ind = np.asarray(table["ind"], dtype=float) if "ind" in table else None
    n = len(np.asarray(table[spec.target], dtype=float))
    cols = []
    for term in spec.terms:
        if term == "intercept":
            cols.append(np.ones(n))
        elif term == "ts":
            cols.append(ts)
        elif term == "ts2":
            cols.append(ts * ts)
        elif term == "ind":
            cols.append(ind)
        elif term == "ts_x_ind":
            cols.append(ts * ind)
        elif term == "fmodr":
            cols.append(np.asarray(table["fmodr"], dtype=float))
        else:
            cols.append(np.asarray(table[term], dtype=float))
    return np.column_stack(cols)


def bonferroni(p_values: Sequence[float], m: int) -> list[float]:
    """Adjust p-values for m hypotheses: p -> min(1, m*p)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    out = []
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value out of range: {p}")
        out.append(min(1.0, m * p))
    return out


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def ols_fit(
    spec: ModelSpec, table: Mapping[str, np.ndarray], m: int | None = None
) -> RegressionResult:
    """Ordinary least squares via QR decomposition.

    Standard errors come from the unbiased residual variance and the
    inverse Gram matrix; p-values from the exact Student-t distribution
    with n - k degrees of freedom. ``m`` is the Bonferroni factor; by
    default the number of non-intercept terms in this model.

    An R^2 of 0 is reported for a constant target (zero total variance),
    where the ratio is otherwise undefined.
    """
    y = np.asarray(table[spec.target], dtype=float)
    x = design_matrix(spec, table)
    n, k = x.shape
    if n <= k:
        raise ValueError(f"need more than {k} observations, got {n}")

    q, r = np.linalg.qr(x)
    diag = np.abs(np.diag(r))
    if diag.min() < _RANK_TOL * max(diag.max(), 1.0):
        raise ValueError("design matrix is rank deficient")
    beta = np.linalg.solve(r, q.T @ y)

    resid = y - x @ beta
    dof = n - k
    sigma2 = float(resid @ resid) / dof
    r_inv = np.linalg.solve(r, np.eye(k))
    xtx_inv = r_inv @ r_inv.T
    se = np.sqrt(np.maximum(sigma2 * np.diag(xtx_inv), 0.0))

    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    pvals = [float(2.0 * stdtr(dof, -abs(t))) if np.isfinite(t) else 0.0 for t in tvals]

    if m is None:
        m = max(1, len(spec.terms) - 1)
    adjusted = bonferroni(pvals, m)

    tss = float(((y - y.mean()) ** 2).sum())
    rss = float(resid @ resid)
    if tss <= 0.0:
        r2 = 0.0
        adj_r2 = 0.0
    else:
        r2 = 1.0 - rss / tss
        adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / dof

    terms = [
        TermEstimate(
            name=name,
            beta=float(beta[i]),
            se=float(se[i]),
            t=float(tvals[i]),
            p=pvals[i],
            p_adj=adjusted[i],
            stars=significance_stars(adjusted[i]),
        )
        for i, name in enumerate(spec.terms)
    ]
    means = {
        name: float(x[:, i].mean()) for i, name in enumerate(spec.terms)
    }
    return RegressionResult(
        spec=spec, terms=terms, r2=r2, adj_r2=adj_r2, n=n, m=m, term_means=means
    )


def elasticity_per_doubling(beta: float) -> float:
    """Productivity change from doubling team size in a log-log model.

    Returns 1 - 2**beta: positive values are reductions (e.g. beta=-0.36
    gives a 22% drop per doubling).
    """
    return 1.0 - 2.0**beta


def quadratic_vertex(beta_ts: float, beta_ts2: float) -> float | None:
    """Team size at the parabola's maximum, or None without an interior max.

    For target ~ ts + ts2 in log space the vertex sits at
    log TS = -beta_ts / (2 beta_ts2); the returned value is exp of that.
    A non-negative quadratic coefficient means no interior maximum.
    """
    if beta_ts2 >= 0:
        return None
    return float(np.exp(-beta_ts / (2.0 * beta_ts2)))


def marginal_effects(
    result: RegressionResult, ind_levels: Sequence[float]
) -> list[tuple[float, float]]:
    """Marginal (intercept, slope) lines in (log TS, target) space.

    For each log-indegree level v: slope = beta_ts + beta_{ts x ind} * v
    and intercept = beta_0 + beta_ind * v, with the foreign modification
    ratio held at its sample mean (folded into the intercept).
    """
    if result.spec.family != "e":
        raise ValueError("marginal effects need an interaction-family fit")
    b0 = result.coef("intercept").beta
    b_ts = result.coef("ts").beta
    b_ind = result.coef("ind").beta
    b_txi = result.coef("ts_x_ind").beta
    b_fmodr = result.coef("fmodr").beta
    fmodr_mean = result.term_means.get("fmodr", 0.0)
    lines = []
    for v in ind_levels:
        slope = b_ts + b_txi * v
        intercept = b0 + b_ind * v + b_fmodr * fmodr_mean
        lines.append((intercept, slope))
    return lines


# -- rendering ----------------------------------------------------------------

def render_table(results: Sequence[RegressionResult], title: str = "") -> str:
    """Render one family's fits across targets as a fixed-width text table.

    Mirrors the usual regression-table layout: one column per target, one
    coefficient row with significance stars over one parenthesized
    standard-error row per term, then R^2 rows.
    """
    if not results:
        return ""
    family = results[0].spec.family
    terms = results[0].spec.terms
    for res in results:
        if res.spec.family != family:
            raise ValueError("all results in one table must share a family")

    headers = [res.spec.target for res in results]
    label_width = max(len(TERM_LABELS.get(t, t)) for t in terms) + 2
    col_width = max(12, *(len(h) + 2 for h in headers))

    def fmt_row(label, cells):
        return label.ljust(label_width) + "".join(c.rjust(col_width) for c in cells)

    lines = []
    if title:
        lines.append(title)
    lines.append(fmt_row("", headers))
    lines.append("-" * (label_width + col_width * len(headers)))
    for term in terms:
        coefs = []
        ses = []
        for res in results:
            est = res.coef(term)
            coefs.append(f"{est.beta:.2f}{est.stars}")
            ses.append(f"({est.se:.2f})")
        lines.append(fmt_row(TERM_LABELS.get(term, term), coefs))
        lines.append(fmt_row("", ses))
    lines.append("-" * (label_width + col_width * len(headers)))
    lines.append(fmt_row("R^2", [f"{res.r2:.2f}" for res in results]))
    lines.append(fmt_row("Adj. R^2", [f"{res.adj_r2:.2f}" for res in results]))
    lines.append(fmt_row("n", [str(res.n) for res in results]))
    lines.append("*** p<0.001; ** p<0.01; * p<0.05 (Bonferroni-adjusted)")
    return "\n".join(lines) + "\n"


def write_correlation_csv(path, corr: np.ndarray, features: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("," + ",".join(features) + "\n")
        for i, name in enumerate(features):
            cells = []
            for j in range(len(features)):
                value = corr[i, j]
                cells.append("" if np.isnan(value) else repr(float(value)))
            fh.write(name + "," + ",".join(cells) + "\n")


def write_plot_data(path, corr: np.ndarray, features: Sequence[str]) -> None:
    """Emit feature names plus matrix values as JSON for external plotting."""
    payload = {
        "features": list(features),
        "matrix": [
            [None if np.isnan(v) else float(v) for v in row] for row in corr
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
