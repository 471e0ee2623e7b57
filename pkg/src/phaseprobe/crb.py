"""Fisher information and the modified Cramer-Rao bound under an energy budget.

For a pure phase family the SLD Fisher information is ``J = 4 Var(n)`` and the
bound matching the ``2 sin^2`` loss is ``2/J``.  A two-point photon
distribution with weight 1/t at ``floor(E t)`` keeps the mean below E while
its variance grows like ``E^2 t``, so the bound can be pushed to zero at fixed
energy even though the attainable error stays above a positive multiple of
1/E^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError
from .fock import FockVector, mean_photon, photon_variance, require_normalized
from .phase import TauResult, minimize_tau


@dataclass(frozen=True)
class FisherReport:
    J: float
    mcrb: float
    mean_photon: float
    E_bound: float

    @property
    def infinite(self) -> bool:
        return math.isinf(self.mcrb)

    def to_dict(self) -> dict:
        return {
            "J": self.J,
            "mcrb": None if self.infinite else self.mcrb,
            "mcrb_infinite": self.infinite,
            "mean_photon": self.mean_photon,
            "E_bound": self.E_bound,
        }


def sld_fisher(v: FockVector, E_bound: Optional[float] = None) -> FisherReport:
    """J = 4 Var(n) and mcrb = 2/J (infinite for number states)."""
    require_normalized(v)
    mu = mean_photon(v)
    J = 4.0 * photon_variance(v)
    mcrb = math.inf if J == 0.0 else 2.0 / J
    return FisherReport(J, mcrb, mu, mu if E_bound is None else float(E_bound))


@dataclass(frozen=True)
class DivergenceProbe:
    """Photon distribution P(0) = 1 - 1/t, P(m) = 1/t with m = floor(E t).

    ``floor`` is taken on the floating product E*t; when E*t lies within about
    1e-9 of an integer the support point can differ from the exact-arithmetic
    value by one.
    """

    t: float
    E: float
    m: int = field(init=False)

    def __post_init__(self):
        if not self.E > 0:
            raise PreconditionError(f"E must be positive, got {self.E}")
        if not self.t > 1:
            raise PreconditionError(f"t must exceed 1, got {self.t}")
        object.__setattr__(self, "m", int(math.floor(self.E * self.t)))

    @property
    def support(self) -> tuple:
        return (0, self.m)

    @property
    def probabilities(self) -> tuple:
        return (1.0 - 1.0 / self.t, 1.0 / self.t)

    @property
    def mean(self) -> float:
        return self.m / self.t

    @property
    def variance(self) -> float:
        return self.m**2 / self.t * (1.0 - 1.0 / self.t)

    @property
    def mcrb(self) -> float:
        var = self.variance
        return math.inf if var == 0 else 1.0 / (2.0 * var)

    def to_fock(self) -> FockVector:
        """Amplitudes sqrt(P(n)); only for cross-checks, the bound needs just the moments."""
        amps = np.zeros(self.m + 1)
        p0, p1 = self.probabilities
        amps[0] += math.sqrt(p0)
        amps[self.m] += math.sqrt(p1)
        return FockVector(amps / np.linalg.norm(amps))

    def row(self) -> dict:
        mcrb = self.mcrb
        return {
            "t": self.t,
            "mean": self.mean,
            "variance": self.variance,
            "mcrb": None if math.isinf(mcrb) else mcrb,
            "E2mcrb": None if math.isinf(mcrb) else self.E**2 * mcrb,
        }


def divergence_family(E: float, t_list: Sequence[float]) -> list[DivergenceProbe]:
    return [DivergenceProbe(float(t), float(E)) for t in t_list]


@dataclass(frozen=True)
class CrbGapReport:
    E: float
    rows: tuple
    tau: TauResult
    vacuous: bool

    @property
    def E2tau(self) -> float:
        return self.tau.E2tau

    @property
    def min_E2mcrb(self) -> float:
        vals = [p.E**2 * p.mcrb for p in self.rows]
        return min(vals) if vals else math.inf

    @property
    def gap(self) -> Optional[float]:
        """E^2 tau divided by the smallest E^2 mcrb in the family."""
        if self.vacuous or self.min_E2mcrb == 0:
            return None
        return self.E2tau / self.min_E2mcrb

    @property
    def statement(self) -> str:
        if self.vacuous:
            return "E = 0: tau = 1 and no probe has positive photon-number variance, the comparison is vacuous"
        return (
            f"E^2 mcrb reaches {self.min_E2mcrb:.6g} within the family while E^2 tau = {self.E2tau:.6g}; "
            f"the bound lies below the attainable error by a factor {self.gap:.6g}"
        )

    def to_dict(self) -> dict:
        return {
            "E": self.E,
            "vacuous": self.vacuous,
            "tau": self.tau.tau,
            "E2tau": self.E2tau,
            "min_E2mcrb": None if math.isinf(self.min_E2mcrb) else self.min_E2mcrb,
            "gap": self.gap,
            "rows": [p.row() for p in self.rows],
            "statement": self.statement,
        }


def crb_gap_report(E: float, t_list: Sequence[float], n_trunc: Optional[int] = None) -> CrbGapReport:
    if E < 0:
        raise PreconditionError("E must be non-negative")
    tau = minimize_tau(float(E), n_trunc)
    if E == 0:
        return CrbGapReport(0.0, (), tau, True)
    return CrbGapReport(float(E), tuple(divergence_family(E, t_list)), tau, False)
