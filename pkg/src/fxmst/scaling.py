"""Power-law fits to degree distributions and the exponent comparisons built on them."""

from __future__ import annotations

import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .ingest import GROUP_TAGS, PanelError, RatePanel, despike_rows, load_groups, synchronize
from .msttree import DegreeDistribution, SpanningTree, build_mst, degree_distribution, distance_matrix
from .returns import ReturnPanel, log_returns, normalize, rebase
from .spectrum import ConvergenceError, Spectrum, correlation_matrix, eigen, rmt_bound

logger = logging.getLogger(__name__)


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class PowerFit:
    alpha: float
    amplitude: float
    delta_alpha: float
    sse: float
    points_used: int

    @property
    def rel_err(self) -> float:
        return self.delta_alpha / self.alpha


@dataclass(frozen=True)
class BetaFit:
    beta: float
    prefactor: float
    lambda_rm: float
    sse: float
    points_used: int

    def curve(self, lam: np.ndarray) -> np.ndarray:
        return self.prefactor * (np.asarray(lam, dtype=float) - self.lambda_rm) ** (-self.beta)


@dataclass(frozen=True)
class _LawFit:
    exponent: float
    amplitude: float
    stderr: float
    sse: float


def _best_amplitude(x: np.ndarray, y: np.ndarray, p: float) -> float:
    basis = x ** (-p)
    return float(basis @ y / (basis @ basis))


def _fit_decaying_law(
    x: np.ndarray,
    y: np.ndarray,
    lo: float,
    hi: float,
    unit_amplitude: bool = False,
    limit: float = 50.0,
    grid_points: int = 401,
) -> _LawFit:
    """Least squares ``y ~ c * x**(-p)`` in linear scale.

    For a fixed exponent the optimal amplitude is linear, so the search is a
    dense grid over ``p`` on the profiled SSE, a bounded Brent refinement in the
    bracketing cell, then a few damped Gauss-Newton steps on ``(c, p)`` jointly.
    """

    def amplitude(p):
        return 1.0 if unit_amplitude else _best_amplitude(x, y, p)

    def sse(p, c=None):
        c = amplitude(p) if c is None else c
        r = y - c * x ** (-p)
        return float(r @ r)

    while True:
        grid = np.linspace(lo, hi, grid_points)
        values = np.array([sse(p) for p in grid])
        k = int(np.argmin(values))
        at_lo, at_hi = k == 0, k == len(grid) - 1
        if not (at_lo or at_hi):
            break
        width = hi - lo
        if at_hi and hi < limit:
            lo, hi = hi - 2 * width / grid_points, min(limit, hi + width)
        elif at_lo and lo > -limit:
            lo, hi = max(-limit, lo - width), lo + 2 * width / grid_points
        else:
            raise FitError("degenerate power fit: exponent runs to the search limit")

    res = minimize_scalar(
        sse, bounds=(grid[k - 1], grid[k + 1]), method="bounded", options={"xatol": 1e-13, "maxiter": 500}
    )
    p = float(res.x)
    c = amplitude(p)
    best = sse(p, c)

    # Gauss-Newton polish. Steps are accepted up to roundoff in the SSE so the
    # iteration can settle on the minimizer rather than stall near it.
    for _ in range(50):
        basis = x ** (-p)
        model = c * basis
        r = y - model
        d_p = -model * np.log(x)
        jac = d_p[:, None] if unit_amplitude else np.column_stack([basis, d_p])
        step, *_ = np.linalg.lstsq(jac, r, rcond=None)
        if np.max(np.abs(step)) <= 1e-15 * (1.0 + abs(p) + abs(c)):
            break
        for damp in (1.0, 0.5, 0.25, 0.125):
            if unit_amplitude:
                p_new, c_new = p + damp * step[0], c
            else:
                c_new, p_new = c + damp * step[0], p + damp * step[1]
            s_new = sse(p_new, c_new)
            if s_new <= best * (1 + 1e-12) + 1e-300:
                p, c, best = p_new, c_new, s_new
                break
        else:
            break

    n = len(x)
    n_params = 1 if unit_amplitude else 2
    basis = x ** (-p)
    d_p = -c * basis * np.log(x)
    jac = d_p[:, None] if unit_amplitude else np.column_stack([basis, d_p])
    jtj = jac.T @ jac
    if np.linalg.cond(jtj) > 1e14:
        raise FitError("degenerate power fit: singular normal matrix")
    dof = n - n_params
    s2 = best / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(jtj)
    return _LawFit(float(p), float(c), math.sqrt(max(float(cov[-1, -1]), 0.0)), float(best))


def fit_power_points(k: Sequence[float], f: Sequence[float], unit_amplitude: bool = False) -> PowerFit:
    """Fit ``F(K) = c * K**(-alpha)`` to explicit points."""
    k = np.asarray(k, dtype=float)
    f = np.asarray(f, dtype=float)
    if k.shape != f.shape or k.ndim != 1:
        raise FitError("K and F must be 1-D arrays of equal length")
    if len(k) < 3:
        raise FitError(f"need at least 3 occupied K values, have {len(k)}")
    if np.any(k <= 0):
        raise FitError("K values must be positive")
    law = _fit_decaying_law(k, f, 0.1, 5.0, unit_amplitude=unit_amplitude)
    if law.exponent <= 0 or law.amplitude <= 0:
        raise FitError(f"fit gave non-decaying law (alpha={law.exponent:.4g}, c={law.amplitude:.4g})")
    return PowerFit(law.exponent, law.amplitude, law.stderr, law.sse, len(k))


def fit_power(dist: DegreeDistribution, unit_amplitude: bool = False) -> PowerFit:
    """Least-squares power law on F(K), using only K values that some node has."""
    k, f = dist.occupied()
    return fit_power_points(k, f, unit_amplitude=unit_amplitude)


def hierarchical_exponent(n_nodes: int) -> tuple[float, float]:
    """Replication factor ``M = <K> + 1`` of an N-node tree and ``ln M / ln(M - 1)``."""
    if n_nodes < 3:
        raise ValueError("need N >= 3")
    m = 2.0 * (n_nodes - 1) / n_nodes + 1.0
    return m, math.log(m) / math.log(m - 1.0)


def fit_beta(points: Sequence[tuple[float, float]], lambda_rm: float) -> BetaFit:
    """Fit ``alpha = a * (lambda_max - lambda_rm)**(-beta)`` in linear scale."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise FitError("points must be (lambda_max, alpha) pairs")
    if len(pts) < 5:
        raise FitError(f"need at least 5 points, have {len(pts)}")
    lam, alpha = pts[:, 0], pts[:, 1]
    if np.any(lam <= lambda_rm):
        raise FitError(f"every lambda_max must exceed lambda_rm = {lambda_rm:.6g}")
    law = _fit_decaying_law(lam - lambda_rm, alpha, -3.0, 3.0)
    return BetaFit(law.exponent, law.amplitude, lambda_rm, law.sse, len(pts))


# ---------------------------------------------------------------------------
# Sweep over base currencies


@dataclass(frozen=True)
class BaseReport:
    base: str
    group: str
    fit: PowerFit | None
    lambda_max: float
    zero_modes: int
    error: str | None = None
    spectrum: Spectrum | None = field(default=None, repr=False, compare=False)
    tree: SpanningTree | None = field(default=None, repr=False, compare=False)
    distribution: DegreeDistribution | None = field(default=None, repr=False, compare=False)

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class GroupAverage:
    group: str
    alpha: float
    delta_alpha: float
    rel_err: float
    lambda_max: float
    count: int


@dataclass(frozen=True)
class SweepResult:
    reports: list[BaseReport]
    group_averages: list[GroupAverage]
    overall: GroupAverage | None
    beta: BetaFit | None
    n_obs: int
    n_series: int
    lambda_rm: float
    despiked: int

    @property
    def failures(self) -> list[BaseReport]:
        return [r for r in self.reports if not r.ok]


UNASSIGNED = "unassigned"


def analyze_base(
    raw: ReturnPanel,
    base: str,
    group: str = UNASSIGNED,
    unit_amplitude: bool = False,
    eigen_method: str = "jacobi",
) -> BaseReport:
    """Rebase, normalize, correlate, diagonalize, build the MST and fit F(K) for one base."""
    try:
        panel = normalize(rebase(raw, base))
        corr = correlation_matrix(panel)
        spec = eigen(corr, method=eigen_method)
        tree = build_mst(distance_matrix(corr))
        dist = degree_distribution(tree)
        fit = fit_power(dist, unit_amplitude=unit_amplitude)
    except (ValueError, ConvergenceError, np.linalg.LinAlgError) as exc:
        logger.warning("base %s failed: %s", base, exc)
        return BaseReport(base, group, None, math.nan, 0, error=str(exc))
    return BaseReport(
        base, group, fit, spec.lambda_max, spec.zero_mode_count, spectrum=spec, tree=tree, distribution=dist
    )


def _average(group: str, reports: Sequence[BaseReport]) -> GroupAverage | None:
    good = [r for r in reports if r.ok]
    if not good:
        return None
    return GroupAverage(
        group,
        float(np.mean([r.fit.alpha for r in good])),
        float(np.mean([r.fit.delta_alpha for r in good])),
        float(np.mean([r.fit.rel_err for r in good])),
        float(np.mean([r.lambda_max for r in good])),
        len(good),
    )


def sweep_report(
    panel: RatePanel,
    groups: Mapping[str, str] | None = None,
    despike_threshold: float | None = 5.0,
    unit_amplitude: bool = False,
    tau: int = 1,
    bases: Sequence[str] | None = None,
    workers: int = 1,
    eigen_method: str = "jacobi",
) -> SweepResult:
    """Run the per-base pipeline for every base and summarize by liquidity group.

    Returns are despiked in the panel's own quote before any rebasing. A base
    that fails is reported with its error and does not stop the sweep.
    """
    groups = load_groups() if groups is None else groups
    panel = synchronize(panel)
    raw = log_returns(panel, tau)
    despiked = 0
    if despike_threshold is not None:
        cleaned, counts = despike_rows(raw.returns, despike_threshold)
        despiked = int(counts.sum())
        if despiked:
            logger.info(
                "despiked %d of %d returns (%.4f%%)", despiked, cleaned.size, 100.0 * despiked / cleaned.size
            )
        raw = ReturnPanel(raw.base, raw.currencies, cleaned)

    available = list(raw.currencies) + ([raw.base] if raw.base is not None else [])
    if bases is None:
        bases = available
    for b in bases:
        if b not in available:
            raise PanelError(f"base currency {b} is not in the panel")

    jobs = [(raw, b, groups.get(b, UNASSIGNED), unit_amplitude, eigen_method) for b in bases]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(analyze_base, *zip(*jobs)))
    else:
        reports = [analyze_base(*job) for job in jobs]

    order = [t for t in GROUP_TAGS if any(r.group == t for r in reports)]
    if any(r.group == UNASSIGNED for r in reports):
        order.append(UNASSIGNED)
    averages = [a for a in (_average(t, [r for r in reports if r.group == t]) for t in order) if a]

    n_series = raw.n_series if raw.base is not None else raw.n_series - 1
    lambda_rm = rmt_bound(raw.n_obs, n_series)
    points = [(r.lambda_max, r.fit.alpha) for r in reports if r.ok and r.lambda_max > lambda_rm]
    beta = None
    if len(points) >= 5:
        try:
            beta = fit_beta(points, lambda_rm)
        except FitError as exc:
            logger.warning("beta fit failed: %s", exc)
    return SweepResult(reports, averages, _average("all", reports), beta, raw.n_obs, n_series, lambda_rm, despiked)


def _fmt(x: float, spec: str) -> str:
    return "" if x is None or not math.isfinite(x) else format(x, spec)


def report_to_csv(result: SweepResult) -> bytes:
    """Per-base rows in table column order, then one ``average`` row per group and one for all."""
    out = io.StringIO()
    out.write("base,group,alpha,delta_alpha,rel_err_pct,lambda_max,zero_modes\n")
    for r in result.reports:
        if r.ok:
            f = r.fit
            out.write(
                f"{r.base},{r.group},{f.alpha:.4f},{f.delta_alpha:.4f},{100 * f.rel_err:.2f},"
                f"{r.lambda_max:.3f},{r.zero_modes}\n"
            )
        else:
            out.write(f"{r.base},{r.group},,,,,\n")
    rows = list(result.group_averages) + ([result.overall] if result.overall else [])
    for a in rows:
        out.write(
            f"average,{a.group},{a.alpha:.4f},{a.delta_alpha:.4f},{100 * a.rel_err:.2f},{a.lambda_max:.3f},\n"
        )
    return out.getvalue().encode("utf-8")


def scatter_to_csv(result: SweepResult, samples: int = 50) -> bytes:
    """``base,group,lambda_max,alpha`` per base, then fitted-curve samples labelled ``fit,curve``."""
    out = io.StringIO()
    out.write("base,group,lambda_max,alpha\n")
    good = [r for r in result.reports if r.ok]
    for r in good:
        out.write(f"{r.base},{r.group},{r.lambda_max:.6f},{r.fit.alpha:.6f}\n")
    if result.beta is not None and good:
        lam = np.array([r.lambda_max for r in good if r.lambda_max > result.lambda_rm])
        grid = np.linspace(lam.min(), lam.max(), samples)
        for x, y in zip(grid, result.beta.curve(grid)):
            out.write(f"fit,curve,{x:.6f},{y:.6f}\n")
    return out.getvalue().encode("utf-8")


def beta_summary(result: SweepResult) -> dict:
    doc = {
        "n_bases": len(result.reports),
        "n_failed": len(result.failures),
        "n_obs": result.n_obs,
        "n_series": result.n_series,
        "lambda_rm": round(result.lambda_rm, 10),
        "returns_despiked": result.despiked,
        "mean_alpha": None if result.overall is None else round(result.overall.alpha, 10),
        "beta_fit": None,
    }
    if result.beta is not None:
        b = result.beta
        doc["beta_fit"] = {
            "beta": round(b.beta, 10),
            "prefactor": round(b.prefactor, 10),
            "sse": float(f"{b.sse:.10g}"),
            "points_used": b.points_used,
        }
    m, alpha_hier = hierarchical_exponent(result.n_series) if result.n_series >= 3 else (None, None)
    doc["hierarchical_model"] = {"M": m, "alpha_hier": alpha_hier}
    return doc
