"""Heralded preparation of a five-level core state from a two-mode squeezed vacuum.

One arm of a TMSV with parameter ``q = tanh r2`` is split four ways, each
output is displaced by ``beta_i`` and a four-fold coincidence heralds the
other arm in

    phi_k = q^k sqrt(k!) / 2^k * e_{4-k}(beta),    k = 0..4

where ``e_j`` is the j-th elementary symmetric polynomial of the betas.
Pairing the betas as ``beta3 beta4 = beta1 beta2 = p`` and
``beta3 + beta4 = -(beta1 + beta2) = -s`` removes the odd amplitudes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, InfeasibleError, PreconditionError
from .fock import FockVector, fidelity, normalize, require_normalized
from .squeeze import PSI74_CORE

REFERENCE_Q = math.tanh(2.0)
REFERENCE_BETAS = (0.343824, 2.59058, -0.343824, -2.59058)
REFERENCE_N = 2.73989
REFERENCE_FIDELITY = 0.9994
REFERENCE_P = 0.890702
REFERENCE_S = 2.9344

# how the k = 4 amplitude scales: sqrt(4!) as in the other orders, or the full 4!
TOP_SCALINGS = ("sqrt_factorial", "factorial")


@dataclass(frozen=True)
class HeraldConfig:
    q: float
    betas: tuple

    def __post_init__(self):
        betas = tuple(float(b) + 0.0 for b in self.betas)
        if len(betas) != 4:
            raise ValueError("exactly four displacement amplitudes are needed")
        if not all(math.isfinite(b) for b in betas):
            raise ValueError("betas must be finite")
        if not 0.0 < float(self.q) < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "betas", betas)

    @property
    def pair_product(self) -> float:
        return self.betas[0] * self.betas[1]

    @property
    def pair_sum(self) -> float:
        return self.betas[0] + self.betas[1]

    def to_dict(self) -> dict:
        return {"q": self.q, "betas": list(self.betas)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "HeraldConfig":
        return cls(float(data["q"]), tuple(data["betas"]))

    @classmethod
    def from_json(cls, text: str) -> "HeraldConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class HeraldedState:
    phi: np.ndarray
    vector: FockVector
    N: float


def _signed_product(values: Sequence[float]) -> float:
    # magnitudes multiplied in sorted order so that equal multisets give equal floats
    sign = -1.0 if sum(v < 0 for v in values) % 2 else 1.0
    return sign * math.prod(sorted(abs(v) for v in values))


def elementary_symmetric(values: Sequence[float]) -> np.ndarray:
    """e_0..e_n of the given numbers.

    Every product is rounded identically regardless of input order and the
    sums are exactly rounded, so the result is permutation invariant and terms
    that cancel in exact arithmetic cancel here too.
    """
    vals = [float(v) for v in values]
    return np.array([math.fsum(_signed_product(c) for c in combinations(vals, k)) for k in range(len(vals) + 1)])


def amplitude_scales(q: float, top: str = "sqrt_factorial") -> np.ndarray:
    if top not in TOP_SCALINGS:
        raise ValueError(f"top must be one of {TOP_SCALINGS}")
    k = np.arange(5)
    scales = q**k * np.sqrt([math.factorial(i) for i in k]) / 2.0**k
    if top == "factorial":
        scales[4] = q**4 * math.factorial(4) / 2.0**4
    return scales


def herald_amplitudes(cfg: HeraldConfig, top: str = "sqrt_factorial") -> HeraldedState:
    e = elementary_symmetric(cfg.betas)
    phi = amplitude_scales(cfg.q, top) * e[4 - np.arange(5)]
    N = float(np.linalg.norm(phi))
    return HeraldedState(phi, normalize(FockVector(phi)), N)


def herald_fidelity(cfg: HeraldConfig, target: FockVector, top: str = "sqrt_factorial") -> float:
    """Fidelity of the heralded core with ``target``.

    Squeezing both states by the same S(r) leaves this number unchanged.
    """
    require_normalized(target, "target")
    return fidelity(herald_amplitudes(cfg, top).vector, target)


def _even_core_target(target: FockVector) -> np.ndarray:
    require_normalized(target, "target")
    amps = target.padded(max(5, target.n_trunc))
    if np.any(np.abs(amps[5:]) > 1e-12) or np.any(np.abs(amps[[1, 3]]) > 1e-12):
        raise PreconditionError("target must live on photon numbers 0, 2, 4")
    lead = amps[np.argmax(np.abs(amps))]
    return amps[:5] * (abs(lead) / lead)


def _config_from_pair(q: float, p: float, s: float) -> HeraldConfig:
    disc = s * s - 4 * p
    if disc < 0:
        raise InfeasibleError(f"z^2 - {s:.6g} z + {p:.6g} has no real roots")
    root = math.sqrt(disc)
    b1, b2 = sorted(((s - root) / 2, (s + root) / 2), key=abs)
    return HeraldConfig(q, (b1, b2, -b1, -b2))


def _least_squares(q: float, target: FockVector, top: str) -> HeraldConfig:
    def infidelity(x):
        cfg = HeraldConfig(q, (x[0], x[1], -x[0], -x[1]))
        return 1.0 - herald_fidelity(cfg, target, top)

    best = None
    for start in ([0.3, 2.5], [1.0, 1.0], [0.1, 0.5], [-0.3, 2.5], [2.0, 4.0]):
        res = minimize(infidelity, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not best.success:
        raise ConvergenceError("infidelity minimization did not converge", float(best.fun) if best else math.inf)
    return HeraldConfig(q, (best.x[0], best.x[1], -best.x[0], -best.x[1]))


def optimize_betas(q: float, target: FockVector, top: str = "sqrt_factorial") -> HeraldConfig:
    """Parity-pairing betas whose heralded core matches ``target``.

    With p = beta1 beta2 and s = beta1 + beta2 the even amplitudes are
    phi_0 = p^2 and phi_2 = c2 (2p - s^2) against a fixed phi_4, so matching
    the two ratios t0/t4 and t2/t4 is solved in closed form.  Targets that
    admit no real (p, s) fall back to maximizing the fidelity directly.
    """
    t = _even_core_target(target)
    scales = amplitude_scales(q, top)
    if abs(t[4]) < 1e-14 or np.any(np.abs(t.imag) > 1e-12):
        return _least_squares(q, target, top)
    t = t.real
    phi4 = scales[4]
    ratio0 = t[0] / t[4]
    if ratio0 < 0:
        return _least_squares(q, target, top)
    best = None
    infeasible = None
    for p in sorted({math.sqrt(phi4 * ratio0), -math.sqrt(phi4 * ratio0)}, reverse=True):
        s_sq = 2 * p - (t[2] / t[4]) * phi4 / scales[2]
        if s_sq < 0:
            continue
        for s in sorted({math.sqrt(s_sq), -math.sqrt(s_sq)}, reverse=True):
            try:
                cfg = _config_from_pair(q, p, s)
            except InfeasibleError as exc:
                infeasible = exc
                continue
            fid = herald_fidelity(cfg, target, top)
            if best is None or fid > best[0] + 1e-15:
                best = (fid, cfg)
    if best is not None:
        return best[1]
    if infeasible is not None:
        raise infeasible
    return _least_squares(q, target, top)


def core_target() -> FockVector:
    return FockVector(PSI74_CORE)
