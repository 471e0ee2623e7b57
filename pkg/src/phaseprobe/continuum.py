"""Continuum limit of the phase-estimation problem.

A Fock amplitude profile ``psi_n = f(n/R)/sqrt(R)`` on one parity sector has
mean energy ``~ 2 R <Q>`` and error ``~ |f(0)|^2/(2R) + <P^2>/(2R^2)``, so
for ``f(0) = 0`` the product ``E^2 D`` tends to ``2 <Q>^2 <P^2>``.  The
one-parameter family ``psi_a(x) = x^a e^{-x/2} / sqrt(Gamma(1+2a))`` has
closed-form moments and is what the library optimizes over.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.optimize import brentq
from scipy.special import gammainc, gammaincc, gammaln

from .errors import ContractError, MomentError, PreconditionError, SingularityError, TruncationError
from .fock import FockVector, mean_photon, normalize

COST_LOWER_BOUND = 1.0 / 8.0
PROFILE_NORM_TOL = 1e-9
FD_STEP = 1e-5
TAIL_TOL = 1e-8


def psi_a(x, a: float) -> np.ndarray:
    """x^a e^{-x/2} / sqrt(Gamma(1+2a)), with the Gamma function taken in log space."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    pos = x > 0
    out[pos] = np.exp(a * np.log(x[pos]) - 0.5 * x[pos] - 0.5 * gammaln(1.0 + 2.0 * a))
    if a == 0:
        out[x == 0] = 1.0
    elif a < 0:
        out[x == 0] = np.inf
    return out


def psi_a_cost(a: float) -> float:
    """Closed-form 2 <Q>^2 <P^2> for psi_a: (2a+1)^2 / (2(2a-1))."""
    if a <= 0.5:
        raise SingularityError(f"<P^2> of psi_a diverges for a <= 1/2 (a={a})")
    return (2 * a + 1) ** 2 / (2 * (2 * a - 1))


def _quad(func: Callable, lo: float, hi: float, points=None) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(func, lo, hi, points=points, limit=1000, epsabs=1e-14, epsrel=1e-12)
        except integrate.IntegrationWarning as exc:
            raise MomentError(f"integral did not converge: {exc}") from exc
    if not math.isfinite(val):
        raise MomentError("integral is not finite")
    return float(val)


@dataclass(frozen=True, eq=False)
class ContinuumProfile:
    """Square-integrable amplitude profile on x >= 0.

    ``x_max`` bounds the numerically relevant support (tail mass below 1e-12);
    ``derivative`` is optional and otherwise replaced by finite differences.
    """

    f: Callable
    x_max: float
    f0_zero: bool
    derivative: Optional[Callable] = None
    name: str = "profile"
    check_norm: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.check_norm:
            nrm = self.norm_squared()
            if abs(nrm - 1.0) > PROFILE_NORM_TOL:
                raise ContractError(f"profile {self.name} has norm^2 {nrm:.12g}, expected 1")
        if self.f0_zero and abs(complex(self(0.0))) >= 1e-12:
            raise ContractError(f"profile {self.name} flagged f(0)=0 but f(0)={self(0.0)}")

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    def norm_squared(self) -> float:
        return _quad(lambda x: abs(complex(self(x))) ** 2, 0.0, self.x_max)

    def tail_mass(self, x_cut: float) -> float:
        if x_cut >= self.x_max:
            return _quad(lambda x: abs(complex(self(x))) ** 2, x_cut, math.inf)
        return max(0.0, 1.0 - _quad(lambda x: abs(complex(self(x))) ** 2, 0.0, x_cut))


class PsiAProfile(ContinuumProfile):
    """psi_a with analytic moments <Q> = 2a+1 and <P^2> = 1/(4(2a-1))."""

    def __init__(self, a: float):
        if a <= -0.5:
            raise ValueError("psi_a is not square integrable for a <= -1/2")
        a_ = float(a)
        object.__setattr__(self, "a", a_)
        super().__init__(
            f=lambda x: psi_a(x, a_),
            x_max=8 * a_ + 60,
            f0_zero=a_ > 0,
            derivative=lambda x: (a_ / np.asarray(x, dtype=float) - 0.5) * psi_a(x, a_),
            name=f"psi_{a_:g}",
            check_norm=False,
        )

    def tail_mass(self, x_cut: float) -> float:
        return float(gammaincc(2 * self.a + 1, x_cut))

    def norm_squared(self) -> float:
        return float(gammainc(2 * self.a + 1, self.x_max))


def moment_Q(p: ContinuumProfile, method: str = "auto") -> float:
    """First moment int x |f|^2 dx."""
    if method not in ("auto", "analytic", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(p, PsiAProfile) and method in ("auto", "analytic"):
        return 2 * p.a + 1
    if method == "analytic":
        raise ValueError("no analytic moment for this profile")
    if isinstance(p, PsiAProfile):
        return _quad(lambda x: x * float(p(x)) ** 2, 0.0, p.x_max, points=[max(1e-3, 2 * p.a)])
    return _quad(lambda x: x * abs(complex(p(x))) ** 2, 0.0, math.inf)


def _fd_kinetic(p: ContinuumProfile, h: float = FD_STEP, chunk: int = 1 << 20) -> float:
    """int |f'|^2 dx from central differences of f sampled on a grid of step h."""
    n_pts = int(math.ceil(p.x_max / h)) + 1
    total = 0.0
    start = 0
    while start < n_pts - 1:
        stop = min(n_pts, start + chunk)
        idx = np.arange(max(0, start - 1), min(n_pts, stop + 1))
        fx = np.asarray(p(idx * h), dtype=complex)
        deriv = np.gradient(fx, h, edge_order=2)
        sl = slice(start - idx[0], stop - idx[0])
        seg = np.abs(deriv[sl]) ** 2
        total += float(np.trapezoid(seg, dx=h))
        # trapezoid segments share endpoints; account for the joint once
        start = stop - 1
    return total


def moment_P2(p: ContinuumProfile, method: str = "auto") -> float:
    """Kinetic moment int |f'|^2 dx.

    ``method`` is one of ``auto``, ``analytic``, ``quadrature`` (uses the
    profile's derivative when it has one) or ``finite-difference``.
    """
    if method not in ("auto", "analytic", "quadrature", "finite-difference"):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(p, PsiAProfile):
        if p.a <= 0.5:
            raise SingularityError(f"<P^2> diverges for a <= 1/2 (a={p.a})")
        if method in ("auto", "analytic"):
            return 1.0 / (4 * (2 * p.a - 1))
    elif method == "analytic":
        raise ValueError("no analytic moment for this profile")
    if method == "finite-difference" or p.derivative is None:
        return _fd_kinetic(p)
    d = p.derivative
    hi = p.x_max if isinstance(p, PsiAProfile) else math.inf
    pts = [max(1e-3, 2 * p.a)] if isinstance(p, PsiAProfile) else None
    return _quad(lambda x: abs(complex(d(x))) ** 2, 0.0, hi, points=pts)


def asymptotic_cost(p: ContinuumProfile, method: str = "auto") -> float:
    """2 <Q>^2 <P^2>, the large-energy limit of E^2 D for the profile."""
    if not p.f0_zero:
        raise PreconditionError("asymptotic cost needs f(0) = 0; the |f(0)|^2/2R term dominates otherwise")
    q = moment_Q(p, "auto" if method == "finite-difference" else method)
    return 2.0 * q * q * moment_P2(p, method)


def cost_curve(a_grid: Sequence[float]) -> list[tuple[float, float]]:
    return [(float(a), psi_a_cost(float(a))) for a in a_grid]


def _sector_size(n_trunc: int, parity: str) -> int:
    if parity == "even":
        return (n_trunc + 1) // 2
    if parity == "odd":
        return n_trunc // 2
    raise ValueError("parity must be 'even' or 'odd'")


def default_discretization_truncation(p: ContinuumProfile, R: float, parity: str = "even") -> int:
    k = int(math.ceil(R * p.x_max)) + 2
    return 2 * k + (1 if parity == "odd" else 0)


def discretize(p: ContinuumProfile, R: float, parity: str = "even", n_trunc: Optional[int] = None) -> FockVector:
    """Place f(k/R)/sqrt(R) on |2k> (even) or |2k+1> (odd) and renormalize."""
    if R <= 0:
        raise ValueError("R must be positive")
    n_trunc = default_discretization_truncation(p, R, parity) if n_trunc is None else int(n_trunc)
    size = _sector_size(n_trunc, parity)
    if size < 1:
        raise ValueError("n_trunc leaves the sector empty")
    tail = p.tail_mass(size / R)
    if tail > TAIL_TOL:
        raise TruncationError(f"n_trunc={n_trunc} cuts the profile at x={size / R:.4g}", tail)
    k = np.arange(size)
    vals = np.asarray(p(k / R), dtype=complex) / math.sqrt(R)
    if not np.all(np.isfinite(vals)):
        raise ContractError("profile is not finite on the sampling grid")
    amps = np.zeros(n_trunc, dtype=complex)
    amps[0 if parity == "even" else 1 :: 2] = vals
    return normalize(FockVector(amps))


def discretize_at_energy(p: ContinuumProfile, E: float, parity: str = "even") -> tuple[FockVector, float]:
    """Discretized state whose mean photon number equals ``E``; returns (state, R)."""
    offset = 0.0 if parity == "even" else 1.0
    target = E - offset
    if target <= 0:
        raise ValueError(f"energy {E} too small for the {parity} sector")
    # f(0) = 0 leaves |0> (or |1>) empty, so the smallest reachable mean is one step up
    floor = offset + (0.0 if abs(complex(p(0.0))) > 0 else 2.0)
    if E < floor:
        raise ValueError(f"energy {E} is below {floor:g}, the smallest mean photon number of this discretization")
    guess = target / (2 * moment_Q(p))

    def excess(R: float) -> float:
        return mean_photon(discretize(p, R, parity)) - E

    lo, hi = guess / 2, guess * 2
    while excess(lo) > 0 and lo > 1e-3:
        lo /= 2
    while excess(hi) < 0:
        hi *= 2
    R = brentq(excess, lo, hi, xtol=1e-14, rtol=1e-13)
    return discretize(p, R, parity), R
