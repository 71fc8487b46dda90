"""Reading, synchronizing and despiking daily exchange-rate panels.

A panel CSV looks like::

    date,EUR,JPY,GBP
    1998-12-01,1.1712,0.00826,1.6490
    1998-12-02,1.1698,,1.6475

Each price is the value of one unit of the column currency expressed in a
common quote unit. The quote may be a real currency that is not a column
(``RatePanel.quote``) or an abstract numeraire (``quote=None``).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from dataclasses import dataclass, field
from datetime import date
from importlib import resources
from pathlib import Path
from typing import IO, Mapping, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

GROUP_TAGS = ("AStar", "A", "B", "C")

_CODE_RE = re.compile(r"^[A-Z]{3}$")

Source = Union[bytes, str, IO[bytes], IO[str]]


class PanelError(ValueError):
    """Raised for malformed or inconsistent rate panels."""


def check_code(code: str) -> str:
    if not isinstance(code, str) or not _CODE_RE.match(code):
        raise PanelError(f"invalid currency code {code!r}: expected three letters A-Z")
    return code


@dataclass(frozen=True)
class RatePanel:
    """Date-indexed price matrix, one row per currency.

    ``missing`` marks absent cells explicitly; the matching ``prices`` entries
    carry no meaning. After :func:`synchronize` no cell is missing.
    """

    currencies: tuple[str, ...]
    dates: tuple[date, ...]
    prices: np.ndarray
    missing: np.ndarray = field(default=None)  # type: ignore[assignment]
    quote: str | None = None

    def __post_init__(self):
        currencies = tuple(check_code(c) for c in self.currencies)
        if len(set(currencies)) != len(currencies):
            raise PanelError("duplicate currency column")
        if self.quote is not None:
            check_code(self.quote)
            if self.quote in currencies:
                raise PanelError(f"quote currency {self.quote} also appears as a column")
        dates = tuple(self.dates)
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise PanelError("dates must be strictly increasing")
        prices = np.array(self.prices, dtype=float)
        if prices.shape != (len(currencies), len(dates)):
            raise PanelError(
                f"price matrix shape {prices.shape} does not match "
                f"{len(currencies)} currencies x {len(dates)} dates"
            )
        missing = (
            np.zeros(prices.shape, dtype=bool)
            if self.missing is None
            else np.array(self.missing, dtype=bool)
        )
        if missing.shape != prices.shape:
            raise PanelError("missing mask shape does not match prices")
        present = prices[~missing]
        if not np.all(np.isfinite(present)) or np.any(present <= 0):
            raise PanelError("prices must be strictly positive and finite")
        prices[missing] = np.nan
        prices.flags.writeable = False
        missing.flags.writeable = False
        object.__setattr__(self, "currencies", currencies)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "missing", missing)

    @property
    def n_currencies(self) -> int:
        return len(self.currencies)

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def is_rectangular(self) -> bool:
        return not self.missing.any()

    def __eq__(self, other):
        if not isinstance(other, RatePanel):
            return NotImplemented
        return (
            self.currencies == other.currencies
            and self.dates == other.dates
            and self.quote == other.quote
            and np.array_equal(self.missing, other.missing)
            and np.array_equal(self.prices[~self.missing], other.prices[~other.missing])
        )

    __hash__ = None  # type: ignore[assignment]


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def parse_rates(source: Source, quote: str | None = None) -> RatePanel:
    """Parse panel CSV text (or bytes, or an open file) into a possibly ragged panel.

    Rows may come in any order; they are sorted by date.
    """
    reader = csv.reader(io.StringIO(_read_text(source)))
    try:
        header = next(reader)
    except StopIteration:
        raise PanelError("empty input: missing header row") from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[0].lower() != "date":
        raise PanelError("malformed header: expected 'date,<CODE1>,<CODE2>,...'")
    codes = header[1:]
    for code in codes:
        check_code(code)
    if len(set(codes)) != len(codes):
        dup = sorted({c for c in codes if codes.count(c) > 1})
        raise PanelError(f"duplicate currency column(s): {', '.join(dup)}")

    rows: dict[date, list[float | None]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise PanelError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            day = date.fromisoformat(row[0].strip())
        except ValueError:
            raise PanelError(f"line {lineno}: unparseable date {row[0]!r}") from None
        if day in rows:
            raise PanelError(f"line {lineno}: duplicate date {day.isoformat()}")
        values: list[float | None] = []
        for code, cell in zip(codes, row[1:]):
            cell = cell.strip()
            if not cell:
                values.append(None)
                continue
            try:
                value = float(cell)
            except ValueError:
                raise PanelError(f"line {lineno}: bad number {cell!r} for {code}") from None
            if not math.isfinite(value) or value <= 0:
                raise PanelError(f"line {lineno}: non-positive price {cell} for {code}")
            values.append(value)
        rows[day] = values

    dates = sorted(rows)
    prices = np.full((len(codes), len(dates)), np.nan)
    missing = np.ones((len(codes), len(dates)), dtype=bool)
    for j, day in enumerate(dates):
        for i, value in enumerate(rows[day]):
            if value is not None:
                prices[i, j] = value
                missing[i, j] = False
    return RatePanel(tuple(codes), tuple(dates), prices, missing, quote=quote)


def serialize_rates(panel: RatePanel) -> bytes:
    """Write a panel in the CSV format read by :func:`parse_rates`."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["date", *panel.currencies])
    for j, day in enumerate(panel.dates):
        cells = [
            "" if panel.missing[i, j] else repr(float(panel.prices[i, j]))
            for i in range(panel.n_currencies)
        ]
        writer.writerow([day.isoformat(), *cells])
    return out.getvalue().encode("utf-8")


def synchronize(panel: RatePanel) -> RatePanel:
    """Keep only dates on which every currency is quoted."""
    keep = ~panel.missing.any(axis=0)
    if keep.sum() < 2:
        raise PanelError(f"only {int(keep.sum())} common trading date(s); need at least 2")
    if keep.all():
        return panel
    dates = tuple(d for d, k in zip(panel.dates, keep) if k)
    return RatePanel(panel.currencies, dates, panel.prices[:, keep], quote=panel.quote)


@dataclass(frozen=True)
class DespikeResult:
    cleaned: np.ndarray
    removed: int
    sigma: float

    @property
    def fraction(self) -> float:
        return self.removed / len(self.cleaned) if len(self.cleaned) else 0.0


def despike(returns: Sequence[float], threshold: float = 5.0, sigma: float | None = None) -> DespikeResult:
    """Zero out returns with ``|g| > threshold * sigma``.

    ``sigma`` defaults to the sample standard deviation (ddof=1) of the input,
    computed once before any replacement. Passing the sigma of an earlier pass
    makes repeated application a no-op.
    """
    g = np.asarray(returns, dtype=float)
    if g.ndim != 1 or len(g) < 2:
        raise PanelError("despike needs a 1-D series of length >= 2")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if sigma is None:
        sigma = float(np.std(g, ddof=1))
        if sigma <= 1e-12 * float(np.max(np.abs(g))):
            sigma = 0.0
    if sigma == 0.0:
        if np.any(g != 0):
            logger.warning("zero-variance series with nonzero returns; left unchanged")
        return DespikeResult(g.copy(), 0, 0.0)
    spikes = np.abs(g) > threshold * sigma
    cleaned = np.where(spikes, 0.0, g)
    return DespikeResult(cleaned, int(spikes.sum()), sigma)


def despike_rows(matrix: np.ndarray, threshold: float = 5.0) -> tuple[np.ndarray, np.ndarray]:
    """Apply :func:`despike` to every row; returns (cleaned, per-row removal counts)."""
    matrix = np.asarray(matrix, dtype=float)
    cleaned = np.empty_like(matrix)
    counts = np.zeros(len(matrix), dtype=int)
    for i, row in enumerate(matrix):
        res = despike(row, threshold)
        cleaned[i] = res.cleaned
        counts[i] = res.removed
    return cleaned, counts


def load_groups(path: str | Path | None = None) -> dict[str, str]:
    """Map currency code to liquidity group tag.

    Without ``path`` the bundled assignment of 60 currencies
    to the A*, A, B and C groups is used.
    """
    if path is None:
        text = resources.files("fxmst").joinpath("groups.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return groups_from_mapping(json.loads(text))


def groups_from_mapping(doc: Mapping[str, Sequence[str]]) -> dict[str, str]:
    assignment: dict[str, str] = {}
    for tag, codes in doc.items():
        if tag not in GROUP_TAGS:
            raise PanelError(f"unknown liquidity group {tag!r}; expected one of {GROUP_TAGS}")
        for code in codes:
            check_code(code)
            if code in assignment:
                raise PanelError(f"{code} assigned to both {assignment[code]} and {tag}")
            assignment[code] = tag
    return assignment


def default_codes() -> list[str]:
    """The 60 bundled currency codes in group order."""
    return list(load_groups())
