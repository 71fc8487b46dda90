"""Correlation matrices, their eigenspectra and the Wishart upper edge."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .ingest import PanelError
from .returns import ReturnPanel, is_normalized

ZERO_MODE_THRESHOLD = 1e-8
SYMMETRY_TOL = 1e-12


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorrelationMatrix:
    base: str | None
    currencies: tuple[str, ...]
    entries: np.ndarray
    n_obs: int

    @property
    def size(self) -> int:
        return len(self.currencies)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns match eigenvalues
    zero_mode_count: int
    lambda_rm: float
    Q: float

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_second(self) -> float:
        return float(self.eigenvalues[1]) if len(self.eigenvalues) > 1 else float("nan")


def correlation_matrix(panel: ReturnPanel) -> CorrelationMatrix:
    """``C = M M^T / T`` over normalized returns."""
    if not panel.normalized or not is_normalized(panel.returns):
        raise PanelError("correlation_matrix needs a normalized ReturnPanel")
    if panel.n_obs < 2:
        raise PanelError("need at least 2 observations")
    m = panel.returns
    c = m @ m.T / panel.n_obs
    c = 0.5 * (c + c.T)
    c.flags.writeable = False
    return CorrelationMatrix(panel.base, panel.currencies, c, panel.n_obs)


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings of a round-robin tournament; each index pair appears once per sweep."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < 0 or b < 0:
                continue
            ps.append(min(a, b))
            qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def jacobi_eigh(a: np.ndarray, max_sweeps: int = 60, rtol: float = 1e-15) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps use a fixed round-robin ordering in which every round rotates a set
    of disjoint index pairs at once, so the result is deterministic for a
    given input. Returns ``(values, vectors)`` in ascending order of values.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    scale = np.linalg.norm(a)
    if scale == 0:
        return np.zeros(n), v
    rounds = _round_robin(n)
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if np.sqrt(np.sum(a[off_mask] ** 2)) <= rtol * scale:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rot = np.eye(n)
            rot[p, p] = c
            rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            a[p, q] = 0.0
            a[q, p] = 0.0
            v = v @ rot
    else:
        if np.sqrt(np.sum(a[off_mask] ** 2)) > 1e3 * rtol * scale:
            raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    values = a.diagonal().copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def eigen(c: CorrelationMatrix, tol: float = 1e-10, method: str = "jacobi") -> Spectrum:
    """Full spectrum of ``c`` with a residual check ``|Cv - lv| <= tol * N``.

    ``method="lapack"`` delegates to :func:`numpy.linalg.eigh`.
    """
    a = np.asarray(c.entries, dtype=float)
    n = a.shape[0]
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL:
        raise PanelError("correlation matrix is not symmetric")
    if method == "jacobi":
        values, vectors = jacobi_eigh(a)
    elif method == "lapack":
        values, vectors = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    values, vectors = values[::-1].copy(), vectors[:, ::-1].copy()
    residual = np.linalg.norm(a @ vectors - vectors * values, axis=0)
    if np.any(residual > tol * n):
        raise ConvergenceError(f"eigen residual {residual.max():.3e} exceeds {tol * n:.3e}")
    return Spectrum(
        eigenvalues=values,
        eigenvectors=vectors,
        zero_mode_count=zero_modes(values),
        lambda_rm=rmt_bound(c.n_obs, n),
        Q=c.n_obs / n,
    )


def rmt_bound(T: int, N: int) -> float:
    """Upper edge ``1 + 1/Q + 2/sqrt(Q)`` of the Wishart spectrum, ``Q = T/N``."""
    if T <= 0 or N <= 0:
        raise ValueError("T and N must be positive")
    r = N / T
    return 1.0 + r + 2.0 * math.sqrt(r)


def zero_modes(spectrum, threshold: float = ZERO_MODE_THRESHOLD) -> int:
    values = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum)
    return int(np.sum(values < threshold))


def spectrum_to_csv(base: str | None, spectrum: Spectrum) -> bytes:
    out = io.StringIO()
    out.write("base,rank,eigenvalue\n")
    for rank, value in enumerate(spectrum.eigenvalues, start=1):
        out.write(f"{base},{rank},{value:.12g}\n")
    out.write("base,lambda_max,lambda_second,zero_mode_count,lambda_rm\n")
    out.write(
        f"{base},{spectrum.lambda_max:.12g},{spectrum.lambda_second:.12g},"
        f"{spectrum.zero_mode_count},{spectrum.lambda_rm:.12g}\n"
    )
    return out.getvalue().encode("utf-8")
