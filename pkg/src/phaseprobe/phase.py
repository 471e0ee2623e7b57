"""Covariant phase measurement, its average error and the energy-constrained optimum.

The loss is ``2 sin^2(theta_est - theta)``; with the covariant POVM ``M0`` the
average error of a pure state reduces to

    D(v) = 1 - sum_n Re(conj(psi_n) psi_{n+2}),

which is evaluated here in the equivalent sum-of-squares form
``(|psi_0|^2 + |psi_1|^2)/2 + sum_n |psi_{n+2} - psi_n|^2 / 2`` so that tiny
errors of highly delocalized states do not cancel away.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import ConvergenceError, EmptyRequest, SupportError, TruncationError
from .fock import FockVector, require_normalized

TWO_PI = 2.0 * math.pi
SAMPLING_GRID = 2 ** 16
TAIL_TOL = 1e-8


def _sector_error(a: np.ndarray) -> float:
    """1 - sum_k Re(conj(a_k) a_{k+1}) for a unit vector, in stable form."""
    padded = np.concatenate([a, [0.0]])
    diff = padded[1:] - padded[:-1]
    return 0.5 * float(abs(a[0]) ** 2) + 0.5 * float(np.sum(np.abs(diff) ** 2))


def covariant_error(v: FockVector) -> float:
    require_normalized(v)
    psi = v.amplitudes
    padded = np.concatenate([psi, [0.0, 0.0]])
    diff = padded[2:] - padded[:-2]
    edge = abs(psi[0]) ** 2 + (abs(psi[1]) ** 2 if psi.size > 1 else 0.0)
    return 0.5 * float(edge) + 0.5 * float(np.sum(np.abs(diff) ** 2))


def covariant_error_direct(v: FockVector) -> float:
    """The textbook form 1 - sum Re(conj(psi_n) psi_{n+2}); kept for cross-checks."""
    require_normalized(v)
    psi = v.amplitudes
    return 1.0 - float(np.sum((np.conj(psi[:-2]) * psi[2:]).real))


@dataclass(frozen=True, eq=False)
class CovariantDistribution:
    """Outcome density of ``M0`` on the state ``exp(-i n theta)|source>``.

    ``density`` is probability per radian over ``theta_est`` in ``[0, 2pi)``;
    ``offset_density`` is the same function of ``delta = theta_est - theta``.
    """

    source: FockVector
    theta: float = 0.0

    def offset_density(self, delta) -> np.ndarray:
        delta = np.atleast_1d(np.asarray(delta, dtype=float))
        psi = self.source.amplitudes
        out = np.empty(delta.shape)
        flat_d, flat_o = delta.ravel(), out.reshape(-1)
        n = np.arange(psi.size)
        chunk = max(1, 2 ** 22 // max(1, psi.size))
        for start in range(0, flat_d.size, chunk):
            d = flat_d[start : start + chunk]
            amp = np.exp(1j * np.outer(d, n)) @ psi
            flat_o[start : start + chunk] = np.abs(amp) ** 2 / TWO_PI
        return out

    def density(self, theta_est) -> np.ndarray:
        return self.offset_density(np.asarray(theta_est, dtype=float) - self.theta)

    def offset_grid(self, points: int) -> tuple[np.ndarray, np.ndarray]:
        """Density on ``delta_j = 2 pi j / points`` via FFT (``points`` >= n_trunc)."""
        psi = self.source.amplitudes
        if points < psi.size:
            raise ValueError("grid must have at least n_trunc points")
        buf = np.zeros(points, dtype=complex)
        buf[: psi.size] = psi
        amp = np.fft.ifft(buf) * points
        delta = TWO_PI * np.arange(points) / points
        return delta, np.abs(amp) ** 2 / TWO_PI

    def _exact_grid(self) -> int:
        # trapezoid on a uniform periodic grid is exact for trig polynomials
        # of degree < points; |sum psi_n e^{in d}|^2 sin^2 d has degree n_trunc+1
        return 1 << max(6, int(math.ceil(math.log2(2 * self.source.n_trunc + 8))))

    def total_probability(self) -> float:
        delta, p = self.offset_grid(self._exact_grid())
        return float(np.sum(p) * TWO_PI / delta.size)

    def expected_loss(self) -> float:
        """Average of 2 sin^2(delta) under the density, by exact periodic quadrature."""
        delta, p = self.offset_grid(self._exact_grid())
        return float(np.sum(2.0 * np.sin(delta) ** 2 * p) * TWO_PI / delta.size)


def covariant_distribution(v: FockVector, theta: float = 0.0) -> CovariantDistribution:
    require_normalized(v)
    return CovariantDistribution(v, float(theta))


SeedLike = Union[int, np.random.SeedSequence]


def sample_estimates(
    v: FockVector,
    theta: float,
    count: int,
    seed: SeedLike,
    grid: int = SAMPLING_GRID,
) -> np.ndarray:
    """Draw ``count`` i.i.d. estimates from ``M0`` by inverse-CDF sampling.

    The CDF is tabulated on ``grid`` uniform offsets and inverted by linear
    interpolation. Output is in ``[0, 2pi)`` and fully determined by ``seed``.
    """
    if count == 0:
        raise EmptyRequest("count must be positive")
    if count < 0:
        raise ValueError("count must be positive")
    dist = covariant_distribution(v, theta)
    delta, p = dist.offset_grid(max(grid, v.n_trunc))
    delta = np.append(delta, TWO_PI)
    p = np.append(p, p[0])
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(delta))])
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    u = rng.random(count)
    offsets = np.interp(u, cdf, delta)
    return np.mod(theta + offsets, TWO_PI)


# --------------------------------------------------------------------------
# energy-constrained minimum error
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TauResult:
    E: float
    tau: float
    optimizer: FockVector
    multiplier: float
    n_trunc: int
    sector: str
    residual: float = 0.0
    tail_mass: float = 0.0

    @property
    def E2tau(self) -> float:
        return self.E ** 2 * self.tau

    def to_dict(self) -> dict:
        return {
            "E": self.E,
            "tau": self.tau,
            "E2tau": self.E2tau,
            "mu": None if math.isinf(self.multiplier) else self.multiplier,
            "n_trunc": self.n_trunc,
            "sector": self.sector,
            "amplitudes": self.optimizer.to_dict()["amplitudes"],
        }


@dataclass
class _SectorSolution:
    tau: float
    amplitudes: np.ndarray
    mu: float
    residual: float
    tail: float


def _ground_state(mu: float, nk: np.ndarray) -> tuple[float, np.ndarray]:
    diag = 1.0 + mu * nk
    if nk.size == 1:
        return float(diag[0]), np.ones(1)
    off = np.full(nk.size - 1, -0.5)
    w, vec = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    a = vec[:, 0]
    # Perron vector of an irreducible matrix with negative off-diagonals
    if a.sum() < 0:
        a = -a
    return float(w[0]), a


def _tridiag_residual(mu: float, nk: np.ndarray, a: np.ndarray, lam: float) -> float:
    ta = (1.0 + mu * nk) * a
    ta[:-1] -= 0.5 * a[1:]
    ta[1:] -= 0.5 * a[:-1]
    return float(np.linalg.norm(ta - lam * a))


def _solve_sector(E: float, nk: np.ndarray) -> Optional[_SectorSolution]:
    if E < nk[0]:
        return None
    if E == nk[0]:
        a = np.zeros(nk.size)
        a[0] = 1.0
        return _SectorSolution(_sector_error(a), a, math.inf, 0.0, 0.0)

    def energy(mu: float) -> float:
        return float(np.dot(nk, _ground_state(mu, nk)[1] ** 2))

    if energy(0.0) <= E:
        mu = 0.0
    else:
        lo, hi = 0.0, 1.0
        while energy(hi) > E:
            lo, hi = hi, hi * 2.0
            if hi > 1e15:
                raise ConvergenceError("multiplier bracket did not close", energy(hi) - E)
        mu = brentq(lambda m: energy(m) - E, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    lam, a = _ground_state(mu, nk)
    excess = float(np.dot(nk, a * a)) - E
    if excess > 1e-10 * max(1.0, E):
        raise ConvergenceError("energy constraint not met", excess)
    k_tail = max(2, nk.size // 8)
    tail = float(np.sum(a[-k_tail:] ** 2))
    return _SectorSolution(_sector_error(a), a, mu, _tridiag_residual(mu, nk, a, lam), tail)


def default_tau_truncation(E: float) -> int:
    """A photon-number cutoff comfortably past the optimizer's support."""
    return int(64 + 24 * math.ceil(E))


def minimize_tau(E: float, n_trunc: Optional[int] = None) -> TauResult:
    """Minimum of D over states with mean photon number at most ``E``.

    Each parity sector is a real tridiagonal problem; the energy constraint is
    handled by a scalar multiplier found by bracketing. The better sector wins
    (even on a tie). Raises :class:`TruncationError` if the optimizer has
    appreciable weight near the cutoff.
    """
    if not E >= 0 or not math.isfinite(E):
        raise ValueError("E must be a finite non-negative number")
    n_trunc = default_tau_truncation(E) if n_trunc is None else int(n_trunc)
    if n_trunc < 2:
        raise ValueError("n_trunc must be at least 2")
    n_even = (n_trunc + 1) // 2
    n_odd = n_trunc // 2
    sols = {
        "even": _solve_sector(E, 2.0 * np.arange(n_even)),
        "odd": _solve_sector(E, 2.0 * np.arange(n_odd) + 1.0) if n_odd else None,
    }
    sector = "even"
    if sols["odd"] is not None and sols["odd"].tau < sols["even"].tau:
        sector = "odd"
    best = sols[sector]
    if best.tail > TAIL_TOL:
        raise TruncationError(f"n_trunc={n_trunc} too small for E={E}", best.tail)
    amps = np.zeros(n_trunc)
    amps[0 if sector == "even" else 1 :: 2] = best.amplitudes
    return TauResult(
        E=float(E),
        tau=best.tau,
        optimizer=FockVector(amps),
        multiplier=best.mu,
        n_trunc=n_trunc,
        sector=sector,
        residual=best.residual,
        tail_mass=best.tail,
    )


# --------------------------------------------------------------------------
# pointer-based implementation of M0
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PointerProfile:
    """Ancilla wavefunction sampled at the midpoints of a uniform grid on [-1/2, 1/2).

    Values are amplitudes per sqrt(length), normalized on the grid.
    """

    values: np.ndarray
    name: str = "custom"
    x: np.ndarray = field(init=False, repr=False)
    step: float = field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).ravel()
        m = vals.size
        step = 1.0 / m
        nrm = math.sqrt(float(np.sum(np.abs(vals) ** 2)) * step)
        if nrm == 0.0:
            raise ValueError("pointer profile is identically zero")
        vals = vals / nrm
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "step", step)
        object.__setattr__(self, "x", -0.5 + (np.arange(m) + 0.5) * step)

    @property
    def samples(self) -> int:
        return self.values.size

    @property
    def support_width(self) -> float:
        return 1.0

    def l2_norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.step)

    @classmethod
    def from_function(cls, f: Callable, samples: int = 4096, name: str = "custom", probe: float = 1e-12):
        step = 1.0 / samples
        x = -0.5 + (np.arange(samples) + 0.5) * step
        outside = np.concatenate([x - 1.0, x + 1.0, [0.5, 0.5 + 0.25 * step]])
        leak = np.max(np.abs(np.asarray(f(outside), dtype=complex)))
        if leak > probe:
            raise SupportError(f"pointer is nonzero outside [-1/2, 1/2) (max |f| = {leak:.3e})")
        return cls(np.asarray(f(x), dtype=complex), name=name)

    def fourier(self, p) -> np.ndarray:
        """int e^{ixp} phi(x) dx at arbitrary momenta (midpoint rule on the grid)."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        return (np.exp(1j * np.outer(p, self.x)) @ self.values) * self.step

    def fourier_comb(self, theta_est: float, k_max: int) -> np.ndarray:
        """Same transform at p = theta_est + 2 pi k for k = -k_max..k_max, via one FFT."""
        m = self.samples
        if 2 * k_max + 1 > m:
            raise ValueError(f"k_max={k_max} needs at least {2 * k_max + 1} pointer samples")
        g = self.values * np.exp(1j * theta_est * self.x)
        spec = np.fft.ifft(g) * m * self.step
        k = np.arange(-k_max, k_max + 1)
        # e^{i 2 pi k x_i} = e^{i 2 pi k x_0} e^{2 pi i k i / m}
        return spec[k % m] * np.exp(1j * TWO_PI * k * self.x[0])


def raised_cosine_pointer(samples: int = 4096) -> PointerProfile:
    """cos^2(pi x) bump; smooth at the edges so its Fourier tail is ~p^-3."""
    return PointerProfile.from_function(
        lambda x: np.where(np.abs(x) < 0.5, np.cos(np.pi * x) ** 2, 0.0),
        samples,
        name="raised-cosine",
    )


def box_pointer(samples: int = 4096) -> PointerProfile:
    return PointerProfile.from_function(
        lambda x: np.where((x >= -0.5) & (x < 0.5), 1.0, 0.0), samples, name="box"
    )


@dataclass(frozen=True)
class ModularCheck:
    max_deviation: float
    k_max: int
    grid: int
    pointer: str
    theta_est: np.ndarray = field(repr=False)
    wrapped: np.ndarray = field(repr=False)
    ideal: np.ndarray = field(repr=False)


def modular_density(v: FockVector, pointer: PointerProfile, k_max: int, grid: int, theta: float = 0.0) -> ModularCheck:
    """Outcome density of the momentum measurement reduced modulo 2 pi.

    For every estimate on the grid the amplitude
    ``psi_hat(p) = (sum_n psi_n e^{in(p - theta)} / sqrt(2 pi)) * phi_hat(p)``
    is evaluated at ``p = theta_est + 2 pi k``, ``|k| <= k_max``, and the
    squared moduli are summed.
    """
    require_normalized(v)
    if k_max < 0 or grid < 1:
        raise ValueError("k_max must be >= 0 and grid >= 1")
    theta_est = TWO_PI * np.arange(grid) / grid
    n = np.arange(v.n_trunc)
    wrapped = np.empty(grid)
    ideal = np.empty(grid)
    for i, te in enumerate(theta_est):
        k = np.arange(-k_max, k_max + 1)
        p = te + TWO_PI * k
        dirichlet = np.exp(1j * np.outer(p - theta, n)) @ v.amplitudes / math.sqrt(TWO_PI)
        psi_hat = dirichlet * pointer.fourier_comb(te, k_max)
        wrapped[i] = float(np.sum(np.abs(psi_hat) ** 2))
        ideal[i] = abs(dirichlet[k_max]) ** 2
    dev = float(np.max(np.abs(wrapped - ideal)))
    return ModularCheck(dev, k_max, grid, pointer.name, theta_est, wrapped, ideal)


def modular_measurement_check(v: FockVector, pointer: PointerProfile, k_max: int, grid: int, theta: float = 0.0) -> float:
    """Max |wrapped density - M0 density| over the estimate grid."""
    return modular_density(v, pointer, k_max, grid, theta).max_deviation
