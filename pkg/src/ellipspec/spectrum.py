"""Discrete population spectra ``H = sum_i w_i delta_{t_i}``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np

from .errors import DomainError

__all__ = ["DiscreteSpectrum"]


@dataclass(frozen=True)
class DiscreteSpectrum:
    """Atoms ``t_1 < ... < t_k`` (all positive) with weights summing to one."""

    atoms: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        atoms = tuple(float(a) for a in self.atoms)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if len(atoms) == 0 or len(atoms) != len(weights):
            raise DomainError("atoms and weights must be nonempty and of equal length")
        if not all(np.isfinite(atoms)) or min(atoms) <= 0.0:
            raise DomainError("atoms must be finite and strictly positive")
        if any(b <= a for a, b in zip(atoms, atoms[1:])):
            raise DomainError("atoms must be strictly increasing")
        if min(weights) <= 0.0:
            raise DomainError("weights must be strictly positive")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {sum(weights)!r}, expected 1")

    @classmethod
    def point(cls, t: float = 1.0) -> DiscreteSpectrum:
        return cls((t,), (1.0,))

    @classmethod
    def from_values(cls, values: Iterable[float]) -> DiscreteSpectrum:
        """Empirical spectrum of a list of eigenvalues (ties merged)."""
        vals = np.asarray(list(values), dtype=np.float64)
        if vals.size == 0:
            raise DomainError("no eigenvalues given")
        atoms, counts = np.unique(vals, return_counts=True)
        weights = counts / vals.size
        # renormalise so the sum is exact to rounding
        weights = weights / weights.sum()
        return cls(tuple(atoms), tuple(weights))

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.atoms)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights)

    @property
    def max_atom(self) -> float:
        return self.atoms[-1]

    def moment(self, j: int) -> float:
        """``gamma_j = sum_i w_i t_i**j``."""
        return float(np.dot(self.w, self.t**j))

    def diagonal(self, p: int) -> np.ndarray:
        """Length-``p`` diagonal realising this spectrum (ascending).

        Each ``w_i * p`` must be an integer.
        """
        counts = self.w * p
        rounded = np.rint(counts)
        if np.any(np.abs(counts - rounded) > 1e-8) or int(rounded.sum()) != p:
            raise DomainError(f"spectrum weights {self.weights} are not realisable at p={p}")
        return np.repeat(self.t, rounded.astype(int))

    def to_dict(self) -> dict[str, Any]:
        return {"atoms": list(self.atoms), "weights": list(self.weights)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> DiscreteSpectrum:
        try:
            return cls(tuple(d["atoms"]), tuple(d["weights"]))
        except KeyError as exc:
            raise DomainError(f"spectrum is missing field {exc}") from None
