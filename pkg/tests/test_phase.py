import math

import numpy as np
import pytest
from hypothesis import given, settings

from phaseprobe.errors import ContractError, EmptyRequest, SupportError, TruncationError
from phaseprobe.fock import FockVector, mean_photon, normalize, parity_split
from phaseprobe.phase import (
    PointerProfile,
    box_pointer,
    covariant_distribution,
    covariant_error,
    covariant_error_direct,
    minimize_tau,
    modular_density,
    raised_cosine_pointer,
    sample_estimates,
)

from conftest import fock_states, random_state
from oracles import quadrature_error, tau_by_slsqp


@pytest.mark.parametrize(
    "amps, expected",
    [
        ([1.0], 1.0),  # vacuum: flat density, mean of 2 sin^2 is 1
        ([0, 0, 1], 1.0),  # number states carry no phase information
        ([1, 0, 1], 0.5),
        ([1, 1], 1.0),  # no n, n+2 overlap at all
    ],
)
def test_error_small_states(amps, expected):
    v = normalize(FockVector(amps))
    assert covariant_error(v) == pytest.approx(expected, abs=1e-15)


@given(fock_states(max_size=40))
@settings(max_examples=50, deadline=None)
def test_stable_and_direct_forms_agree(v):
    assert covariant_error(v) == pytest.approx(covariant_error_direct(v), abs=1e-13)
    assert 0.0 <= covariant_error(v) <= 2.0


@pytest.mark.parametrize("n_trunc", [3, 17, 40])
def test_error_matches_quadrature(rng, n_trunc):
    v = random_state(rng, n_trunc)
    assert covariant_error(v) == pytest.approx(quadrature_error(v.amplitudes), abs=1e-10)


@given(fock_states())
@settings(max_examples=40, deadline=None)
def test_parity_decomposition(v):
    split = parity_split(v)
    parts = 0.0
    if split.even is not None:
        parts += split.lam * covariant_error(split.even_state())
    if split.odd is not None:
        parts += (1 - split.lam) * covariant_error(split.odd_state())
    assert covariant_error(v) == pytest.approx(parts, abs=1e-12)


def test_distribution_integrates_to_one(rng):
    dist = covariant_distribution(random_state(rng, 30), theta=1.1)
    assert dist.total_probability() == pytest.approx(1.0, abs=1e-13)
    assert dist.expected_loss() == pytest.approx(covariant_error(dist.source), abs=1e-13)


def test_density_is_covariant(rng):
    v = random_state(rng, 12)
    a = covariant_distribution(v, 0.0).density(np.array([0.3, 1.0]))
    b = covariant_distribution(v, 0.5).density(np.array([0.8, 1.5]))
    assert np.allclose(a, b, atol=1e-14)


def test_fft_grid_matches_direct_sum(rng):
    dist = covariant_distribution(random_state(rng, 20))
    delta, p = dist.offset_grid(64)
    assert np.allclose(p, dist.offset_density(delta), atol=1e-14)


def test_sampling_is_reproducible(rng):
    v = random_state(rng, 8)
    a = sample_estimates(v, 0.4, 1000, seed=5)
    b = sample_estimates(v, 0.4, 1000, seed=5)
    assert a.tobytes() == b.tobytes()
    assert np.all((a >= 0) & (a < 2 * math.pi))
    assert not np.array_equal(a, sample_estimates(v, 0.4, 1000, seed=6))


def test_sampling_rejects_empty_request():
    with pytest.raises(EmptyRequest):
        sample_estimates(FockVector.basis(0), 0.0, 0, seed=0)


def test_sampling_requires_normalized_state():
    with pytest.raises(ContractError):
        sample_estimates(FockVector([1.0, 1.0]), 0.0, 10, seed=0)


# -- energy-constrained optimum ---------------------------------------------


def test_tau_at_zero_energy_is_vacuum():
    res = minimize_tau(0.0)
    assert res.tau == 1.0
    assert math.isinf(res.multiplier)
    assert res.to_dict()["mu"] is None
    assert res.optimizer.amplitudes[0] == 1.0


@pytest.mark.parametrize("E", [0.5, 1.0, 3.0, 7.5])
def test_tau_saturates_energy(E):
    res = minimize_tau(E)
    assert mean_photon(res.optimizer) == pytest.approx(E, abs=1e-9)
    assert covariant_error(res.optimizer) == pytest.approx(res.tau, abs=1e-12)


def test_tau_is_non_increasing():
    taus = [minimize_tau(E).tau for E in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(b <= a for a, b in zip(taus, taus[1:]))


@pytest.mark.parametrize("E", [1.0, 2.0])
def test_tau_matches_generic_optimizer(E):
    assert minimize_tau(E).tau == pytest.approx(tau_by_slsqp(E, 24, restarts=4), abs=1e-6)


def test_tau_lower_bound_on_a_sweep():
    for E in (1.0, 3.0, 10.0, 30.0):
        assert E * E * minimize_tau(E).tau >= 1 / 8 - 1e-6


def test_tau_truncation_detected():
    with pytest.raises(TruncationError):
        minimize_tau(10.0, n_trunc=22)


def test_tau_result_serialization():
    d = minimize_tau(2.0).to_dict()
    assert set(d) == {"E", "tau", "E2tau", "mu", "n_trunc", "sector", "amplitudes"}
    assert d["sector"] in ("even", "odd")


# -- pointer realization of the covariant measurement ------------------------


def test_pointer_support_enforced():
    with pytest.raises(SupportError):
        PointerProfile.from_function(lambda x: np.exp(-x * x), 256)


def test_pointer_normalized():
    assert raised_cosine_pointer(1024).l2_norm() == pytest.approx(1.0, abs=1e-14)


def test_fourier_comb_matches_direct_transform():
    ptr = raised_cosine_pointer(512)
    comb = ptr.fourier_comb(0.37, 20)
    direct = ptr.fourier(0.37 + 2 * math.pi * np.arange(-20, 21))
    assert np.allclose(comb, direct, atol=1e-13)


@pytest.mark.parametrize("pointer, bound", [(raised_cosine_pointer(4096), 1e-6), (box_pointer(4096), 1e-2)])
def test_modular_density_close_to_ideal(rng, pointer, bound):
    v = random_state(rng, 10)
    res = modular_density(v, pointer, k_max=512, grid=32)
    assert res.max_deviation < bound


def test_box_pointer_converges_slower_than_raised_cosine(rng):
    v = random_state(rng, 10)
    smooth = modular_density(v, raised_cosine_pointer(4096), 64, 16).max_deviation
    box = modular_density(v, box_pointer(4096), 64, 16).max_deviation
    assert smooth < box
