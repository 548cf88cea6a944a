"""Price/return matrices from CSV, the log-difference transform and sector groups.

Input files put dates in rows and assets in columns by default; the first
column holds the row labels.  Internally every matrix is assets x periods.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DomainError, InputError

__all__ = ["ReturnsMatrix", "LAYOUTS", "ingest_prices", "ingest_matrix", "log_returns", "read_sectors", "group_sample"]

log = logging.getLogger(__name__)

LAYOUTS = ("dates-as-rows", "assets-as-rows")


@dataclass(frozen=True)
class ReturnsMatrix:
    """Assets x periods values with labels and provenance."""

    assets: tuple[str, ...]
    periods: tuple[str, ...]
    values: np.ndarray
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (len(self.assets), len(self.periods)):
            raise DomainError(f"values shape {v.shape} does not match {len(self.assets)} assets x {len(self.periods)} periods")
        if not np.all(np.isfinite(v)):
            raise DomainError("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def select(self, assets: Sequence[str]) -> ReturnsMatrix:
        index = {a: i for i, a in enumerate(self.assets)}
        missing = [a for a in assets if a not in index]
        if missing:
            raise DomainError(f"unknown assets {missing}")
        rows = [index[a] for a in assets]
        return replace(self, assets=tuple(assets), values=self.values[rows])

    def to_csv(self, path: str | Path | None = None, layout: str = "dates-as-rows") -> str:
        """Write in the ingestion format; floats use ``repr`` so re-reading is exact."""
        _check_layout(layout)
        if layout == "dates-as-rows":
            labels, header, rows = self.periods, self.assets, self.values.T
        else:
            labels, header, rows = self.assets, self.periods, self.values
        buf = io.StringIO()
        buf.write(",".join(["label", *header]) + "\n")
        for lab, row in zip(labels, rows):
            buf.write(",".join([lab, *(repr(float(x)) for x in row)]) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _check_layout(layout: str) -> None:
    if layout not in LAYOUTS:
        raise InputError(f"unknown layout {layout!r}; choose from {LAYOUTS}")


def ingest_matrix(source: str | Path, layout: str = "dates-as-rows", kind: str = "prices") -> ReturnsMatrix:
    """Read a labelled numeric table.

    Assets with a missing entry are dropped, and so are assets with a
    nonpositive entry when ``kind == "prices"``.  The number dropped is kept in
    ``provenance["dropped"]``.
    """
    _check_layout(layout)
    if kind not in ("prices", "returns"):
        raise InputError(f"unknown input kind {kind!r}")
    try:
        frame = pd.read_csv(source, index_col=0, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot parse {source}: {exc}") from None
    if frame.shape[0] == 0 or frame.shape[1] == 0:
        raise InputError(f"{source} has no data rows")
    cells = frame.to_numpy()
    values = np.empty(cells.shape)
    for (r, c), text in np.ndenumerate(cells):
        text = text.strip()
        try:
            values[r, c] = float(text) if text else np.nan
        except ValueError:
            raise InputError(f"non-numeric entry {text!r} at row {frame.index[r]!r}, column {frame.columns[c]!r}") from None
    num = pd.DataFrame(values, index=frame.index, columns=frame.columns)
    if layout == "dates-as-rows":
        num = num.T
    values = num.to_numpy(dtype=np.float64)
    keep = np.all(np.isfinite(values), axis=1)
    if kind == "prices":
        keep &= np.all(values > 0, axis=1)
    dropped = int((~keep).sum())
    if dropped:
        log.warning("dropped %d asset(s) with missing%s entries", dropped, " or nonpositive" if kind == "prices" else "")
    if not keep.any():
        raise InputError(f"no complete assets left in {source}")
    assets = tuple(str(a) for a, k in zip(num.index, keep) if k)
    periods = tuple(str(t) for t in num.columns)
    if kind == "prices" and len(periods) < 2:
        raise InputError("price input needs at least 2 periods")
    prov = {"source": str(source), "layout": layout, "kind": kind, "transform": "none", "dropped": dropped}
    return ReturnsMatrix(assets, periods, values[keep], prov)


def ingest_prices(source: str | Path, layout: str = "dates-as-rows") -> ReturnsMatrix:
    return ingest_matrix(source, layout, "prices")


def log_returns(prices: ReturnsMatrix) -> ReturnsMatrix:
    """``ln(u[i, j+1] / u[i, j])``; one period fewer than the input."""
    v = prices.values
    if v.shape[1] < 2:
        raise DomainError("log returns need at least 2 periods")
    bad = np.argwhere(~(v > 0))
    if bad.size:
        r, c = bad[0]
        raise DomainError(f"nonpositive price {v[r, c]!r} at row {r} ({prices.assets[r]}), column {c} ({prices.periods[c]})")
    rets = np.diff(np.log(v), axis=1)
    prov = {**prices.provenance, "transform": "log-difference"}
    return ReturnsMatrix(prices.assets, prices.periods[1:], rets, prov)


def read_sectors(source: str | Path) -> dict[str, list[str]]:
    """Two-column CSV ``asset,sector`` -> ``{sector: [assets]}`` in file order."""
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputError(f"cannot parse sector map {source}: {exc}") from None
    if frame.shape[1] < 2 or frame.shape[0] == 0:
        raise InputError("sector map needs rows of asset,sector")
    out: dict[str, list[str]] = {}
    for asset, sector in zip(frame.iloc[:, 0], frame.iloc[:, 1]):
        out.setdefault(sector.strip(), []).append(asset.strip())
    return out


def group_sample(sectors: Mapping[str, Sequence[str]], count: int, rng: np.random.Generator) -> list[tuple[str, ...]]:
    """``count`` groups holding one uniformly drawn asset per sector (sectors in sorted order)."""
    if count < 1:
        raise DomainError("group count must be positive")
    names = sorted(sectors)
    if not names:
        raise DomainError("no sectors")
    empty = [s for s in names if len(sectors[s]) == 0]
    if empty:
        raise DomainError(f"empty sector(s) {empty}")
    picks = np.column_stack([rng.integers(0, len(sectors[s]), size=count) for s in names])
    return [tuple(sectors[s][k] for s, k in zip(names, row)) for row in picks]
