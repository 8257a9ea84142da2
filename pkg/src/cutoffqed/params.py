"""Unitless circuit parameters and derived capacitance ratios.

Frequencies and rates are in units of v_p/L, lengths in units of L.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Mapping, Optional

__all__ = ["CircuitParams", "DerivedParams", "ParameterError", "derive"]


class ParameterError(ValueError):
    """Raised for out-of-range circuit parameters."""


@dataclass(frozen=True)
class DerivedParams:
    gamma: float
    chi_s: float


@dataclass(frozen=True)
class CircuitParams:
    """Circuit constants of a transmon capacitively coupled to a 1D resonator.

    Parameters
    ----------
    chi_R, chi_L : float
        Right and left port capacitances per unit resonator capacitance.
        Both zero gives the closed resonator.
    chi_j : float
        Junction capacitance ratio, > 0.
    chi_g : float
        Gate (coupling) capacitance ratio, >= 0.
    x0 : float
        Qubit position in [0, 1). ``x0 = 0`` means just inside the left end.
    omega_j : float
        Bare transmon frequency, > 0.
    epsilon : float
        Transmon nonlinearity sqrt(E_c/E_j), >= 0.
    chi_s_override : float or None
        If set, replaces the series capacitance ``gamma * chi_j`` entering the
        mode problem while ``gamma`` keeps its usual value. Used to study the
        mode structure at series capacitances that are not reachable from a
        given (chi_g, chi_j) pair, e.g. ``0`` for a model without the
        diamagnetic term.
    """

    chi_R: float = 1e-3
    chi_L: float = 1e-3
    chi_j: float = 0.05
    chi_g: float = 1e-3
    x0: float = 0.0
    omega_j: float = 2.0
    epsilon: float = 0.1
    chi_s_override: Optional[float] = None

    def __post_init__(self):
        for name in ("chi_R", "chi_L", "chi_j", "chi_g", "x0", "omega_j", "epsilon"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite real number, got {value!r}")
        if self.chi_R < 0 or self.chi_L < 0:
            raise ParameterError("port capacitances chi_R, chi_L must be >= 0")
        if self.chi_j <= 0:
            raise ParameterError("chi_j must be > 0")
        if self.chi_g < 0:
            raise ParameterError("chi_g must be >= 0")
        if not 0.0 <= self.x0 < 1.0:
            raise ParameterError("x0 must lie in [0, 1)")
        if self.omega_j <= 0:
            raise ParameterError("omega_j must be > 0")
        if self.epsilon < 0:
            raise ParameterError("epsilon must be >= 0")
        if self.chi_s_override is not None:
            v = self.chi_s_override
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v) or v < 0:
                raise ParameterError("chi_s_override must be a finite number >= 0")

    @property
    def gamma(self) -> float:
        return self.chi_g / (self.chi_g + self.chi_j)

    @property
    def chi_s(self) -> float:
        if self.chi_s_override is not None:
            return float(self.chi_s_override)
        return self.gamma * self.chi_j

    @property
    def closed(self) -> bool:
        return self.chi_R == 0.0 and self.chi_L == 0.0

    def replace(self, **changes) -> "CircuitParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CircuitParams":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ParameterError(f"unknown parameter field(s): {sorted(unknown)}")
        kwargs = {}
        for k, v in data.items():
            if k == "chi_s_override":
                kwargs[k] = None if v is None else float(v)
            else:
                kwargs[k] = float(v)
        return cls(**kwargs)


def derive(params: CircuitParams) -> DerivedParams:
    """Return gamma = chi_g/(chi_g+chi_j) and the series capacitance chi_s."""
    return DerivedParams(gamma=params.gamma, chi_s=params.chi_s)
