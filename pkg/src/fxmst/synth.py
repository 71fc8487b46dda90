"""Synthetic rate panels with known correlation structure.

Random numbers come from numpy's PCG64 bit generator. Uniform doubles are
``(next_uint64 >> 11) * 2**-53`` and normals are produced from them by the
Box-Muller transform, so a panel depends only on (seed, parameters) and the
documented PCG64 stream.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .ingest import RatePanel, default_codes

START_DATE = date(1998, 12, 1)
DAILY_VOL = 0.005


class SeededNormals:
    def __init__(self, seed: int):
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def uniform(self, size) -> np.ndarray:
        return self._gen.random(size)

    def normal(self, shape) -> np.ndarray:
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        count = int(np.prod(shape))
        half = (count + 1) // 2
        u1 = 1.0 - self._gen.random(half)  # (0, 1]
        u2 = self._gen.random(half)
        radius = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([radius * np.cos(2 * np.pi * u2), radius * np.sin(2 * np.pi * u2)])
        return z[:count].reshape(shape)


def business_days(n: int, start: date = START_DATE) -> tuple[date, ...]:
    days = []
    day = start
    while len(days) < n:
        if day.weekday() < 5:
            days.append(day)
        day += timedelta(days=1)
    return tuple(days)


def panel_codes(n: int) -> list[str]:
    """The bundled 60 codes when they suffice, otherwise generated three-letter codes."""
    bundled = default_codes()
    if n <= len(bundled):
        return bundled[:n]
    taken = set(bundled)
    extra = (
        "".join(p) for p in itertools.product(string.ascii_uppercase, repeat=3) if "".join(p) not in taken
    )
    return bundled + list(itertools.islice(extra, n - len(bundled)))


def panel_from_returns(returns: np.ndarray, codes=None, rng: SeededNormals | None = None) -> RatePanel:
    """Prices ``p0 * exp(cumsum(returns))``; one more date than return columns."""
    n, t = returns.shape
    codes = panel_codes(n) if codes is None else list(codes)
    start = np.zeros((n, 1)) if rng is None else rng.normal((n, 1))
    logp = np.hstack([start, start + np.cumsum(returns, axis=1)])
    return RatePanel(tuple(codes), business_days(t + 1), np.exp(logp))


def random_walk_panel(n: int, T: int, seed: int, vol: float = DAILY_VOL) -> RatePanel:
    """``n`` independent geometric random walks over ``T`` dates."""
    if n < 2 or T < 2:
        raise ValueError("need n >= 2 and T >= 2")
    rng = SeededNormals(seed)
    return panel_from_returns(vol * rng.normal((n, T - 1)), rng=rng)


@dataclass(frozen=True)
class HierarchySpec:
    """Nested-factor model: ``replication``-ary tree of depth ``levels``.

    ``intra_block_corr`` is the correlation of two leaves with the same
    parent when ``noise_scale`` is 1. Factor loadings shrink by
    ``loading_ratio`` per level going from a leaf's parent up to the root.
    """

    replication: int
    levels: int
    intra_block_corr: float = 0.6
    noise_scale: float = 1.0
    seed: int = 0
    loading_ratio: float = 0.5

    def __post_init__(self):
        if self.replication < 2 or self.levels < 1:
            raise ValueError("need replication >= 2 and levels >= 1")
        if not 0 < self.intra_block_corr < 1:
            raise ValueError("intra_block_corr must lie in (0, 1)")
        if self.noise_scale <= 0:
            raise ValueError("noise_scale must be positive")
        if not 0 < self.loading_ratio <= 1:
            raise ValueError("loading_ratio must lie in (0, 1]")

    @property
    def n_leaves(self) -> int:
        return self.replication**self.levels

    def loadings(self) -> np.ndarray:
        """Loading on the ancestor at depth d (root d=0), scaled so their squares sum to intra_block_corr."""
        w = self.loading_ratio ** np.arange(self.levels - 1, -1, -1, dtype=float)
        return w * np.sqrt(self.intra_block_corr / np.sum(w**2))

    def ancestor(self, leaf: int, depth: int) -> int:
        return leaf // self.replication ** (self.levels - depth)


def hierarchy_correlation(spec: HierarchySpec, n: int | None = None) -> np.ndarray:
    """Exact correlation matrix of the first ``n`` leaves of ``spec``."""
    n = spec.n_leaves if n is None else n
    w2 = spec.loadings() ** 2
    common = w2.sum()
    total = common + (1 - spec.intra_block_corr) * spec.noise_scale**2
    leaves = np.arange(n)
    cov = np.zeros((n, n))
    for d, weight in enumerate(w2):
        anc = spec.ancestor(leaves, d)
        cov += weight * (anc[:, None] == anc[None, :])
    corr = cov / total
    np.fill_diagonal(corr, 1.0)
    return corr


def hierarchical_returns(spec: HierarchySpec, n_obs: int, n: int | None = None) -> np.ndarray:
    n = spec.n_leaves if n is None else n
    if not 2 <= n <= spec.n_leaves:
        raise ValueError(f"n must lie in [2, {spec.n_leaves}]")
    rng = SeededNormals(spec.seed)
    leaves = np.arange(n)
    g = np.sqrt(1 - spec.intra_block_corr) * spec.noise_scale * rng.normal((n, n_obs))
    for d, weight in enumerate(spec.loadings()):
        factors = rng.normal((spec.replication**d, n_obs))
        g += weight * factors[spec.ancestor(leaves, d)]
    return g


def hierarchical_panel(spec: HierarchySpec, T: int, n: int | None = None, vol: float = DAILY_VOL) -> RatePanel:
    """Prices whose log-returns follow the nested-factor model of ``spec``.

    ``n`` keeps only the first ``n`` leaves (default: all ``M**L``).
    """
    if T < 2:
        raise ValueError("need T >= 2")
    g = hierarchical_returns(spec, T - 1, n)
    return panel_from_returns(vol * g)


def one_factor_returns(
    n: int, n_obs: int, strength: float, seed: int, loading_range: tuple[float, float] = (0.2, 1.0)
) -> np.ndarray:
    """``strength * b_i * f(t) + e_i(t)`` with loadings ``b_i`` uniform on ``loading_range``.

    Loadings, factor and noise are drawn in that order, so panels with the same
    seed differ only in ``strength``.
    """
    rng = SeededNormals(seed)
    lo, hi = loading_range
    b = lo + (hi - lo) * rng.uniform(n)
    f = rng.normal(n_obs)
    e = rng.normal((n, n_obs))
    return strength * b[:, None] * f[None, :] + e


def one_factor_panel(n: int, T: int, strength: float, seed: int, vol: float = DAILY_VOL) -> RatePanel:
    return panel_from_returns(vol * one_factor_returns(n, T - 1, strength, seed))


def deterministic_hierarchy_edges(M: int, L: int) -> list[tuple[int, int]]:
    """Edges of the deterministic hierarchical network with replication factor M.

    Level 1 is an M-clique with node 0 as hub. Each further level adds M-1
    copies of the current network and links every peripheral node of each copy
    (the bottom-level non-hub nodes) to node 0. Peripheral nodes of the result
    are those of the copies.
    """
    if M < 3 or L < 1:
        raise ValueError("need M >= 3 and L >= 1")
    edges = [(i, j) for i in range(M) for j in range(i + 1, M)]
    peripheral = list(range(1, M))
    size = M
    for _ in range(2, L + 1):
        new_edges = list(edges)
        new_peripheral = []
        for copy in range(1, M):
            offset = copy * size
            new_edges += [(a + offset, b + offset) for a, b in edges]
            new_edges += [(p + offset, 0) for p in peripheral]
            new_peripheral += [p + offset for p in peripheral]
        edges, peripheral, size = new_edges, new_peripheral, size * M
    return edges


def deterministic_hierarchy_degrees(M: int, L: int) -> list[int]:
    """Degree of every node (index order) of :func:`deterministic_hierarchy_edges`."""
    degrees = [0] * M**L
    for a, b in deterministic_hierarchy_edges(M, L):
        degrees[a] += 1
        degrees[b] += 1
    return degrees
