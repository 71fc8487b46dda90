"""Log-returns, change of base currency, and normalization."""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .ingest import PanelError, RatePanel, check_code

NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class ReturnPanel:
    """Return series ``returns[i, t]`` of ``currencies[i]`` expressed in ``base``.

    ``base`` is None for raw returns against an abstract numeraire.
    """

    base: str | None
    currencies: tuple[str, ...]
    returns: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        currencies = tuple(self.currencies)
        if self.base is not None:
            check_code(self.base)
            if self.base in currencies:
                raise PanelError(f"base {self.base} cannot also be a series")
        returns = np.array(self.returns, dtype=float)
        if returns.ndim != 2 or returns.shape[0] != len(currencies):
            raise PanelError(f"returns shape {returns.shape} does not match {len(currencies)} currencies")
        returns.flags.writeable = False
        object.__setattr__(self, "currencies", currencies)
        object.__setattr__(self, "returns", returns)

    @property
    def n_series(self) -> int:
        return self.returns.shape[0]

    @property
    def n_obs(self) -> int:
        return self.returns.shape[1]

    def row(self, code: str) -> np.ndarray:
        return self.returns[self.currencies.index(code)]


def log_returns(panel: RatePanel, tau: int = 1) -> ReturnPanel:
    """``ln x(t + tau) - ln x(t)`` for every currency, quoted in ``panel.quote``."""
    if tau < 1:
        raise ValueError("tau must be a positive integer")
    if not panel.is_rectangular:
        raise PanelError("panel has missing cells; synchronize it first")
    if panel.n_dates < tau + 1:
        raise PanelError(f"need at least {tau + 1} dates for lag {tau}, have {panel.n_dates}")
    logp = np.log(panel.prices)
    return ReturnPanel(panel.quote, panel.currencies, logp[:, tau:] - logp[:, :-tau])


def rebase(raw: ReturnPanel, target: str) -> ReturnPanel:
    """Re-express raw returns in ``target`` via the triangle rule.

    ``G_A^X = G_A^R - G_X^R``. The target row is dropped and, when the raw
    base R is a real currency, a row for R (``-G_X^R``) is appended, so the
    number of series is unchanged.
    """
    if target == raw.base:
        return raw
    if target not in raw.currencies:
        raise PanelError(f"unknown base currency {target!r}")
    k = raw.currencies.index(target)
    g_target = raw.returns[k]
    keep = [i for i in range(raw.n_series) if i != k]
    rows = raw.returns[keep] - g_target
    codes = [raw.currencies[i] for i in keep]
    if raw.base is not None:
        rows = np.vstack([rows, -g_target])
        codes.append(raw.base)
    return ReturnPanel(target, tuple(codes), rows, normalized=False)


def normalize(panel: ReturnPanel) -> ReturnPanel:
    """Zero mean, unit variance per row, variance taken with divisor T."""
    g = panel.returns
    mean = g.mean(axis=1, keepdims=True)
    centered = g - mean
    std = np.sqrt((centered**2).mean(axis=1, keepdims=True))
    scale = np.abs(g).max(axis=1, keepdims=True)
    flat = (std[:, 0] == 0) | (std[:, 0] <= 1e-14 * np.maximum(scale[:, 0], 1e-300))
    if flat.any():
        bad = [panel.currencies[i] for i in np.flatnonzero(flat)]
        raise PanelError(f"zero-variance return series in base {panel.base}: {', '.join(bad)}")
    return replace(panel, returns=centered / std, normalized=True)


def is_normalized(returns: np.ndarray, tol: float = NORMALIZATION_TOL) -> bool:
    returns = np.asarray(returns)
    mean = returns.mean(axis=1)
    var = ((returns - mean[:, None]) ** 2).mean(axis=1)
    return bool(np.all(np.abs(mean) <= tol) and np.all(np.abs(var - 1) <= tol))


def returns_to_csv(panel: ReturnPanel) -> bytes:
    """One row per currency, columns ``t0..t(T-1)``."""
    out = io.StringIO()
    out.write("currency," + ",".join(f"t{t}" for t in range(panel.n_obs)) + "\n")
    for code, row in zip(panel.currencies, panel.returns):
        out.write(code + "," + ",".join(repr(float(v)) for v in row) + "\n")
    return out.getvalue().encode("utf-8")
