"""Single-mode pure states in a truncated photon-number basis.

Amplitude index ``n`` is the photon number ``n``; the truncation dimension is
carried explicitly and never grows behind the caller's back.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError, NormalizationError

# Tolerance on |<v|v> - 1| for the "normalized" contract. Module-level so it
# can be relaxed globally, e.g. ``phaseprobe.fock.NORM_TOL = 1e-10``.
NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FockVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        if amps.size < 1:
            raise ValueError("FockVector needs at least one amplitude")
        if not np.all(np.isfinite(amps)):
            raise ValueError("FockVector amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_trunc(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def basis(cls, n: int, n_trunc: Optional[int] = None) -> "FockVector":
        """Number state |n> in a basis of ``n_trunc`` levels (default n+1)."""
        n_trunc = n + 1 if n_trunc is None else n_trunc
        if not 0 <= n < n_trunc:
            raise ValueError(f"photon number {n} outside truncation {n_trunc}")
        amps = np.zeros(n_trunc, dtype=complex)
        amps[n] = 1.0
        return cls(amps)

    @classmethod
    def from_dict(cls, data: dict) -> "FockVector":
        pairs = np.asarray(data["amplitudes"], dtype=float).reshape(-1, 2)
        amps = pairs[:, 0] + 1j * pairs[:, 1]
        n_trunc = int(data.get("n_trunc", amps.size))
        if n_trunc != amps.size:
            raise ValueError(f"n_trunc={n_trunc} but {amps.size} amplitudes given")
        return cls(amps)

    def to_dict(self) -> dict:
        return {
            "n_trunc": self.n_trunc,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FockVector":
        return cls.from_dict(json.loads(text))

    def padded(self, n_trunc: int) -> np.ndarray:
        """Amplitudes zero-padded to ``n_trunc`` (never truncates)."""
        if n_trunc < self.n_trunc:
            raise ValueError("padding cannot shrink a FockVector")
        out = np.zeros(n_trunc, dtype=complex)
        out[: self.n_trunc] = self.amplitudes
        return out

    def __len__(self) -> int:
        return self.n_trunc

    def __repr__(self) -> str:
        return f"FockVector(n_trunc={self.n_trunc}, norm={self.norm:.15g})"


def _as_vector(v) -> FockVector:
    return v if isinstance(v, FockVector) else FockVector(np.asarray(v))


def require_normalized(v: FockVector, what: str = "state") -> None:
    err = abs(float(np.sum(v.probabilities)) - 1.0)
    if err > NORM_TOL:
        raise ContractError(f"{what} is not normalized (|<v|v> - 1| = {err:.3e})")


def normalize(v) -> FockVector:
    v = _as_vector(v)
    nrm = v.norm
    if nrm == 0.0:
        raise NormalizationError("cannot normalize the zero vector")
    return FockVector(v.amplitudes / nrm)


def mean_photon(v: FockVector) -> float:
    require_normalized(v)
    n = np.arange(v.n_trunc)
    return float(np.dot(n, v.probabilities))


def second_photon_moment(v: FockVector) -> float:
    require_normalized(v)
    n = np.arange(v.n_trunc, dtype=float)
    return float(np.dot(n * n, v.probabilities))


def photon_variance(v: FockVector) -> float:
    """Var(n) computed about the mean, without the E[n^2] - E[n]^2 cancellation."""
    mu = mean_photon(v)
    n = np.arange(v.n_trunc, dtype=float)
    return float(np.dot((n - mu) ** 2, v.probabilities))


def phase_shift(v: FockVector, theta: float) -> FockVector:
    """Apply exp(-i n theta), the phase channel being estimated."""
    n = np.arange(v.n_trunc)
    return FockVector(v.amplitudes * np.exp(-1j * n * theta))


@dataclass(frozen=True, eq=False)
class ParitySplit:
    """Even/odd decomposition of a state.

    ``even`` holds amplitude ``k`` <-> photon number ``2k`` and ``odd`` holds
    ``k`` <-> ``2k+1``. A sector with zero weight is ``None`` and its weight is
    exactly 0 (or 1 for the other sector).
    """

    lam: float
    even: Optional[FockVector]
    odd: Optional[FockVector]
    n_trunc: int

    def _embed(self, sector: Optional[FockVector], offset: int) -> Optional[FockVector]:
        if sector is None:
            return None
        amps = np.zeros(self.n_trunc, dtype=complex)
        amps[offset::2] = sector.amplitudes
        return FockVector(amps)

    def even_state(self) -> Optional[FockVector]:
        """The even sector as a photon-number state in the original basis."""
        return self._embed(self.even, 0)

    def odd_state(self) -> Optional[FockVector]:
        return self._embed(self.odd, 1)

    def recombine(self) -> FockVector:
        amps = np.zeros(self.n_trunc, dtype=complex)
        if self.even is not None:
            amps[0::2] = np.sqrt(self.lam) * self.even.amplitudes
        if self.odd is not None:
            amps[1::2] = np.sqrt(1.0 - self.lam) * self.odd.amplitudes
        return FockVector(amps)


def parity_split(v: FockVector) -> ParitySplit:
    require_normalized(v)
    even = v.amplitudes[0::2]
    odd = v.amplitudes[1::2]
    w_even = float(np.sum(np.abs(even) ** 2))
    w_odd = float(np.sum(np.abs(odd) ** 2))
    if w_odd == 0.0:
        return ParitySplit(1.0, FockVector(even / np.sqrt(w_even)), None, v.n_trunc)
    if w_even == 0.0:
        return ParitySplit(0.0, None, FockVector(odd / np.sqrt(w_odd)), v.n_trunc)
    # weights from the sector sums themselves so that recombination is exact
    lam = w_even / (w_even + w_odd)
    return ParitySplit(
        lam,
        FockVector(even / np.sqrt(w_even)),
        FockVector(odd / np.sqrt(w_odd)),
        v.n_trunc,
    )


def fidelity(u: FockVector, v: FockVector) -> float:
    """|<u|v>|^2, zero-padding the shorter vector."""
    require_normalized(u, "first state")
    require_normalized(v, "second state")
    n = max(u.n_trunc, v.n_trunc)
    overlap = np.vdot(u.padded(n), v.padded(n))
    return float(min(1.0, abs(overlap) ** 2))


def from_amplitudes(values: Sequence[complex], normalized: bool = True) -> FockVector:
    v = FockVector(np.asarray(values, dtype=complex))
    return normalize(v) if normalized else v
