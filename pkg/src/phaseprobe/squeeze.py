"""Single-mode squeezing in the photon-number basis.

``S(r) = exp(r (a^2 - a^dag^2) / 2)`` with real ``r``.  Matrix elements come
from the finite alternating sum

    S_{j,m} = sqrt(m! j!) cosh(r)^{-(j+1/2)} (tanh(r)/2)^{(m-j)/2}
              * sum_k (-1)^k (sinh(r)/2)^{2k} / (k! (j-2k)! (k+(m-j)/2)!)

for ``j - m`` even, and 0 otherwise.  The sum cancels catastrophically once
``j`` and ``m`` are both large (term magnitudes reach 1e50 at r = 2 while the
entry is below 1), so every entry carries an a-priori rounding bound and
entries whose bound is too loose are re-evaluated exactly in big-integer
fixed point.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import mpmath
import numpy as np
from scipy.special import gammaln

from .continuum import psi_a
from .errors import PreconditionError, RangeError, TruncationError
from .fock import FockVector, normalize

TAIL_TOL = 1e-6
# absolute rounding bound above which an entry is recomputed exactly
CANCELLATION_TOL = 1e-14
PASCAL_MAX = 30

PSI74_CORE = np.array([math.sqrt(3 / 35), 0.0, -math.sqrt(24 / 35), 0.0, math.sqrt(8 / 35)])

_EPS = np.finfo(float).eps


def squeezed_vacuum_probabilities(r: float, n: np.ndarray) -> np.ndarray:
    """|<n|S(r)|0>|^2: (2k)!/(4^k k!^2) tanh^{2k} r / cosh r on even n, 0 on odd n."""
    n = np.asarray(n)
    out = np.zeros(n.shape)
    if r == 0:
        out[n == 0] = 1.0
        return out
    even = n % 2 == 0
    k = n[even] // 2
    logp = gammaln(2 * k + 1) - 2 * gammaln(k + 1) - 2 * k * math.log(2) + 2 * k * math.log(math.tanh(r)) - math.log(math.cosh(r))
    out[even] = np.exp(logp)
    return out


def vacuum_tail_mass(r: float, dim: int) -> float:
    """Weight of S(r)|0> on photon numbers >= dim."""
    return max(0.0, 1.0 - float(np.sum(squeezed_vacuum_probabilities(r, np.arange(dim)))))


class _FixedPoint:
    """Exact evaluation of the alternating sum in scaled integer arithmetic."""

    def __init__(self, r: float):
        self.r = r
        self._bits = 0
        self._y = 0

    def y_scaled(self, bits: int) -> int:
        # sinh(r)^2 / 4 with `bits` fractional bits, from the exact binary value of r
        if bits > self._bits:
            with mpmath.workprec(bits + 64):
                y = mpmath.sinh(mpmath.mpf(self.r)) ** 2 / 4
                self._y = int(mpmath.nint(mpmath.ldexp(y, bits + 64)))
            self._bits = bits + 64
        return self._y >> (self._bits - bits)

    def entry(self, j: int, m: int, log_lead: float, bits: int) -> float:
        """Entry (j, m) given log|prefactor * leading term| (float) and precision."""
        h = (m - j) // 2
        k0 = max(-h, 0)
        y = self.y_scaled(bits)
        one = 1 << bits
        u = one if k0 % 2 == 0 else -one
        total = u
        for k in range(k0, j // 2):
            u = (u * y) >> bits
            u = -(u * ((j - 2 * k) * (j - 2 * k - 1))) // ((k + 1) * (k + h + 1))
            if u == 0:
                break
            total += u
        if total == 0:
            return 0.0
        sign = 1.0 if total > 0 else -1.0
        total = abs(total)
        shift = max(0, total.bit_length() - 60)
        mant = total >> shift
        return sign * mant * math.exp(log_lead + (shift - bits) * math.log(2.0))


def _log_prefactor(r: float, j: np.ndarray, m: int) -> np.ndarray:
    return (
        0.5 * (gammaln(m + 1) + gammaln(j + 1))
        - (j + 0.5) * math.log(math.cosh(r))
        + 0.5 * (m - j) * math.log(math.tanh(r) / 2)
    )


def _column(r: float, m: int, dim: int, fixed: _FixedPoint, stats: dict) -> np.ndarray:
    out = np.zeros(dim)
    j = np.arange(m % 2, dim, 2)
    if j.size == 0:
        return out
    h = (m - j) // 2
    lo = np.maximum(-h, 0)
    hi = j // 2
    width = int((hi - lo).max()) + 1
    k = lo[:, None] + np.arange(width)[None, :]
    valid = k <= hi[:, None]
    kk = np.where(valid, k, lo[:, None])
    log_terms = (
        2 * kk * math.log(math.sinh(r) / 2)
        - gammaln(kk + 1)
        - gammaln(j[:, None] - 2 * kk + 1)
        - gammaln(kk + h[:, None] + 1)
    )
    log_terms = np.where(valid, log_terms, -np.inf)
    log_pref = _log_prefactor(r, j, m)
    peak = log_terms.max(axis=1)
    w = np.exp(log_terms - peak[:, None])
    signs = np.where(kk % 2, -1.0, 1.0)
    scale = peak + log_pref
    with np.errstate(over="ignore"):
        vals = (w * signs).sum(axis=1) * np.exp(scale)
        bound = _EPS * (width + 2) * w.sum(axis=1) * np.exp(scale)
    redo = ~(bound <= CANCELLATION_TOL)
    inv_y_bits = max(0.0, -math.log2(math.sinh(r) ** 2 / 4))
    for idx in np.flatnonzero(redo):
        jj = int(j[idx])
        lead = float(log_terms[idx, 0] + log_pref[idx])
        # rounding in fixed point is bounded by 2^-bits K^2 max(1, 1/y) max|term|
        bits = int(math.ceil(scale[idx] / math.log(2.0) + 2 * math.log2(width + 2) + inv_y_bits + 65))
        bits = max(64, bits)
        vals[idx] = fixed.entry(jj, m, lead, bits)
    stats["exact"] = stats.get("exact", 0) + int(redo.sum())
    out[j] = vals
    return out


def resolved_column_limit(r: float, dim: int, margin: float = 10.0) -> int:
    """Largest m whose squeezed column fits in ``dim`` rows.

    Requires (m+1) * max(margin sinh^2 r, 4) <= dim: the spread grows like
    m sinh^2 r, and at small r the column still needs headroom above m itself.
    Returns -1 when not even the vacuum column fits.
    """
    width = max(margin * math.sinh(r) ** 2, 4.0)
    return min(int(dim // width) - 1, dim - 1)


@dataclass(frozen=True, eq=False)
class SqueezeKernel:
    """Truncated squeezing matrix; ``columns`` lists which columns were filled."""

    r: float
    matrix: np.ndarray
    dim: int
    columns: tuple
    exact_entries: int = 0

    def column(self, m: int) -> np.ndarray:
        if m not in self.columns:
            raise KeyError(f"column {m} was not computed")
        return self.matrix[:, m]

    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.matrix[:, list(self.columns)], axis=0)

    def resolved_columns(self, margin: float = 10.0) -> list[int]:
        return [m for m in self.columns if m <= resolved_column_limit(self.r, self.dim, margin)]

    def apply(self, amplitudes: Sequence[complex]) -> np.ndarray:
        amps = np.asarray(amplitudes, dtype=complex)
        cols = np.flatnonzero(amps)
        missing = [int(m) for m in cols if int(m) not in self.columns]
        if missing:
            raise KeyError(f"columns {missing} were not computed")
        return self.matrix[:, cols] @ amps[cols]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["j", "m", "value"])
        for m in self.columns:
            for j in np.flatnonzero(self.matrix[:, m]):
                writer.writerow([int(j), m, format(float(self.matrix[j, m]), ".17g")])
        return buf.getvalue()


def squeeze_matrix(r: float, dim: int, columns: Optional[Iterable[int]] = None) -> SqueezeKernel:
    """Matrix elements of S(r) on photon numbers 0..dim-1.

    ``columns`` restricts the evaluation to selected input photon numbers; the
    remaining columns are left at zero.  Raises TruncationError when S(r)|0>
    leaks more than TAIL_TOL of its weight past ``dim``.
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be at least 1")
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative")
    cols = tuple(range(dim)) if columns is None else tuple(sorted({int(m) for m in columns}))
    if any(not 0 <= m < dim for m in cols):
        raise ValueError("requested column outside the truncation")
    if r == 0:
        mat = np.zeros((dim, dim))
        for m in cols:
            mat[m, m] = 1.0
        return SqueezeKernel(0.0, mat, dim, cols)
    tail = vacuum_tail_mass(r, dim)
    if tail > TAIL_TOL:
        raise TruncationError(f"dim={dim} too small for r={r}: squeezed-vacuum tail {tail:.3e}", tail)
    mat = np.zeros((dim, dim))
    fixed = _FixedPoint(float(r))
    stats: dict = {}
    for m in cols:
        mat[:, m] = _column(float(r), m, dim, fixed, stats)
    return SqueezeKernel(float(r), mat, dim, cols, stats.get("exact", 0))


def squeeze_columns(r: float, columns: Iterable[int], dim: int) -> np.ndarray:
    """Only the requested columns, as a (dim, len(columns)) array."""
    cols = [int(m) for m in columns]
    if r == 0:
        out = np.zeros((dim, len(cols)))
        for i, m in enumerate(cols):
            out[m, i] = 1.0
        return out
    tail = vacuum_tail_mass(r, dim)
    if tail > TAIL_TOL:
        raise TruncationError(f"dim={dim} too small for r={r}: squeezed-vacuum tail {tail:.3e}", tail)
    fixed = _FixedPoint(float(r))
    stats: dict = {}
    return np.stack([_column(float(r), m, dim, fixed, stats) for m in cols], axis=1)


@dataclass(frozen=True, eq=False)
class PascalPair:
    lower: np.ndarray
    inverse: np.ndarray
    m_max: int


def pascal_pair(m_max: int) -> PascalPair:
    """Binomial matrix of size m_max and its signed inverse, both int64."""
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    if m_max > PASCAL_MAX:
        raise RangeError(f"m_max={m_max} exceeds the exact range {PASCAL_MAX}")
    lower = np.zeros((m_max, m_max), dtype=np.int64)
    inverse = np.zeros((m_max, m_max), dtype=np.int64)
    for m in range(m_max):
        for l in range(m + 1):
            lower[m, l] = math.comb(m, l)
            inverse[m, l] = (-1) ** (m - l) * math.comb(m, l)
    return PascalPair(lower, inverse, m_max)


def _parity_offset(parity: str) -> int:
    if parity == "even":
        return 0
    if parity == "odd":
        return 1
    raise ValueError("parity must be 'even' or 'odd'")


def superposition_weights(l: int, parity: str, r: float) -> np.ndarray:
    """Coefficients on S(r)|2l'+p>, l' = 0..l: signed Pascal-inverse row times 2^l' l'! coth^l' r / sqrt((2l'+p)!)."""
    p = _parity_offset(parity)
    inv = pascal_pair(l + 1).inverse[l]
    lp = np.arange(l + 1)
    log_mag = lp * math.log(2.0) + gammaln(lp + 1) - lp * math.log(math.tanh(r)) - 0.5 * gammaln(2 * lp + p + 1)
    return inv * np.exp(log_mag)


def alpha_closed_form(l: int, parity: str, r: float, n: np.ndarray) -> np.ndarray:
    """Unnormalized magnitudes of the amplitude on |2n+p>, zero for n < l.

    sqrt((2n+p)!) / (2^n n!) * (R/(1+R))^{n/2} * n! / ((n-l)! R^l), R = sinh^2 r.
    """
    p = _parity_offset(parity)
    n = np.asarray(n)
    R = math.sinh(r) ** 2
    out = np.zeros(n.shape)
    ok = n >= l
    nn = n[ok]
    log_val = (
        0.5 * gammaln(2 * nn + p + 1)
        - nn * math.log(2.0)
        + 0.5 * nn * math.log(R / (1 + R))
        - gammaln(nn - l + 1)
        - l * math.log(R)
    )
    out[ok] = np.exp(log_val)
    return out


def default_alpha_dim(l: int, parity: str, r: float) -> int:
    """Photon cutoff covering x = n / sinh^2 r up to 8l + 60 in the sector."""
    R = math.sinh(r) ** 2
    return 2 * int(math.ceil(R * (8 * l + 60))) + 2 * l + 8 + _parity_offset(parity)


@dataclass(frozen=True, eq=False)
class AlphaState:
    l: int
    parity: str
    r: float
    vector: FockVector
    coefficients: np.ndarray
    normalizer: float

    @property
    def sector_amplitudes(self) -> np.ndarray:
        return self.vector.amplitudes[_parity_offset(self.parity) :: 2].real


def alpha_state(l: int, parity: str, r: float, dim: Optional[int] = None) -> AlphaState:
    """Pascal-inverse superposition of squeezed number states up to 2l (+1 for odd).

    ``coefficients`` are the sector magnitudes (the (-1)^(n+l) sign removed) and
    ``normalizer`` is the factor that brings the raw superposition to unit norm.
    """
    if l < 0:
        raise ValueError("l must be non-negative")
    if r <= 0:
        raise ValueError("alpha states need r > 0")
    p = _parity_offset(parity)
    dim = default_alpha_dim(l, parity, r) if dim is None else int(dim)
    weights = superposition_weights(l, parity, r)
    in_cols = [2 * lp + p for lp in range(l + 1)]
    if max(in_cols) >= dim:
        raise TruncationError(f"dim={dim} cannot hold photon number {max(in_cols)}", 1.0)
    # tail estimated from the closed form extended far beyond dim
    n_sector = np.arange(0, (dim - p + 1) // 2 * 4 + 64)
    mags = alpha_closed_form(l, parity, r, n_sector)
    inside = (dim - p + 1) // 2
    tail = float(np.sum(mags[inside:] ** 2) / np.sum(mags**2))
    if tail > TAIL_TOL:
        raise TruncationError(f"dim={dim} truncates the alpha state (tail {tail:.3e})", tail)
    cols = squeeze_columns(r, in_cols, dim)
    raw = cols @ weights
    nrm = float(np.linalg.norm(raw))
    vec = normalize(FockVector(raw))
    sector = vec.amplitudes[p::2].real
    return AlphaState(int(l), parity, float(r), vec, np.abs(sector), 1.0 / nrm)


def limit_profile_exponent(l: int, parity: str) -> float:
    return l - 0.25 if _parity_offset(parity) == 0 else l + 0.25


def alpha_asymptotics(l: int, parity: str, r_list: Sequence[float], dim: Optional[int] = None) -> list[tuple[float, float]]:
    """Sup-norm distance of the sector magnitudes from psi_{l -/+ 1/4}(n/R)/sqrt(R).

    The grid point n = 0 is skipped when the limit profile is singular there.
    """
    a = limit_profile_exponent(l, parity)
    rows = []
    for r in r_list:
        R = math.sinh(r) ** 2
        if R < 10:
            raise PreconditionError(f"r={r} gives sinh^2 r = {R:.3g} < 10")
        st = alpha_state(l, parity, r, dim)
        mags = st.coefficients
        n = np.arange(mags.size)
        start = 1 if a < 0 else 0
        target = psi_a(n[start:] / R, a) / math.sqrt(R)
        rows.append((float(r), float(np.max(np.abs(mags[start:] - target)))))
    return rows


def default_psi74_dim(r: float) -> int:
    return default_alpha_dim(2, "even", r)


def psi74_state(r: float, dim: Optional[int] = None, align: bool = True) -> FockVector:
    """S(r) applied to sqrt(3/35)|0> - sqrt(24/35)|2> + sqrt(8/35)|4>.

    Squeezing leaves amplitude signs alternating as (-1)^n on |2n>, which the
    covariant measurement reads as a phase offset of pi/2.  With ``align`` the
    state is rotated by exp(i pi n/2) so those signs are removed; this is a
    fixed phase shift and does not change the energy or the attainable error.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    dim = default_psi74_dim(r) if dim is None else int(dim)
    if dim < 5:
        raise ValueError("dim must hold photon number 4")
    cols = squeeze_columns(r, [0, 2, 4], dim)
    raw = cols @ PSI74_CORE[[0, 2, 4]]
    tail = max(0.0, 1.0 - float(np.dot(raw, raw)))
    if tail > TAIL_TOL:
        raise TruncationError(f"dim={dim} truncates psi74 at r={r} (tail {tail:.3e})", tail)
    if align:
        raw = raw * np.where((np.arange(dim) // 2) % 2 == 1, -1.0, 1.0)
    return normalize(FockVector(raw))
