import math

import numpy as np
import pytest

from papeclab.entropy import (FEASIBILITY_TOL, check_certificates, guessing_entropy_classical,
                              hmax_via_duality, hmin_interval, renyi_half,
                              sandwiched_h2_down, sandwiched_h_half_down, smooth_hmin_lower,
                              uncertainty_relation)
from papeclab.hilbert import CqState, Ket, SystemLayout
from papeclab.metrics import purified_distance
from papeclab.pa import clamp_candidate, random_cq_state, random_density


def classical(p_ae):
    return np.diag(np.asarray(p_ae, dtype=float).reshape(-1))


def test_uniform_product_has_full_entropy(rng):
    sigma = random_density(rng, 2)
    rho = np.kron(np.eye(4) / 4, sigma)
    iv = hmin_interval(rho, 4, 2)
    assert iv.lower == pytest.approx(2, abs=1e-4) and iv.upper == pytest.approx(2, abs=1e-4)


def test_perfect_copy_has_zero_entropy():
    p = np.eye(4) / 4
    iv = hmin_interval(classical(p), 4, 4)
    assert iv.lower == pytest.approx(0, abs=1e-4) and iv.gap < 1e-4


def test_trivial_eve_closed_form():
    iv = hmin_interval(np.diag([0.5, 0.25, 0.125, 0.125]), 4, 1)
    assert iv.lower == pytest.approx(1.0, abs=1e-12)
    assert iv.upper == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d_a, d_e", [(2, 2), (2, 4), (4, 2), (4, 4), (2, 8)])
def test_matches_classical_guessing_formula(rng, d_a, d_e):
    for _ in range(3):
        p = rng.dirichlet(np.ones(d_a * d_e)).reshape(d_a, d_e)
        iv = hmin_interval(classical(p), d_a, d_e)
        exact = guessing_entropy_classical(p)
        assert iv.lower - 1e-6 <= exact <= iv.upper + 1e-6
        assert iv.gap < 1e-6


def test_certificates_checked_independently(rng):
    for _ in range(5):
        cq = random_cq_state(rng, 2, 2, trace=rng.uniform(0.4, 1))
        rho = cq.to_matrix()
        iv = hmin_interval(rho, 4, 2)
        res = check_certificates(rho, 4, 2, iv.primal, iv.dual)
        assert max(res.values()) <= FEASIBILITY_TOL
        assert iv.lower <= iv.upper
        assert iv.converged


def test_subnormalized_shift(rng):
    cq = random_cq_state(rng, 2, 2)
    full = hmin_interval(cq.to_matrix(), 4, 2)
    half = hmin_interval(0.5 * cq.to_matrix(), 4, 2)
    assert half.lower == pytest.approx(full.lower + 1, abs=1e-6)


def test_min_entropy_below_collision_entropy(rng):
    for _ in range(10):
        rho = random_cq_state(rng, 2, 2).to_matrix()
        iv = hmin_interval(rho, 4, 2)
        assert iv.upper <= sandwiched_h2_down(rho, 4, 2) + 1e-4


def test_renyi_half_examples():
    assert renyi_half(np.ones(8) / 8) == pytest.approx(3)
    assert renyi_half([1, 0, 0, 0]) == 0
    assert renyi_half([0.5, 0.25, 0.25]) == pytest.approx(2 * math.log2(math.sqrt(0.5) + 1))


def test_sandwiched_examples(rng):
    rho_e = random_density(rng, 2)
    uniform = np.kron(np.eye(4) / 4, rho_e)
    assert sandwiched_h_half_down(uniform, 4, 2) == pytest.approx(2)
    assert sandwiched_h2_down(uniform, 4, 2) == pytest.approx(2)
    fixed = np.kron(np.diag([1.0, 0, 0, 0]), rho_e)
    assert sandwiched_h_half_down(fixed, 4, 2) == pytest.approx(0, abs=1e-9)
    assert sandwiched_h2_down(fixed, 4, 2) == pytest.approx(0, abs=1e-9)
    for _ in range(20):
        rho = random_cq_state(rng, 2, 2).to_matrix()
        assert sandwiched_h_half_down(rho, 4, 2) >= sandwiched_h2_down(rho, 4, 2) - 1e-9


def test_hmax_examples():
    bell = Ket(SystemLayout.of(("A", 2), ("B", 2)), np.array([1, 0, 0, 1]) / np.sqrt(2))
    lo, hi = hmax_via_duality(bell, ["A"], ["B"], [])
    assert lo == pytest.approx(-1, abs=1e-6) and hi == pytest.approx(-1, abs=1e-6)
    prod = Ket.basis(SystemLayout.of(("A", 2), ("B", 2)), 0)
    lo, hi = hmax_via_duality(prod, ["A"], ["B"], [])
    assert lo == pytest.approx(0, abs=1e-6)
    amps = np.zeros((4, 4))
    amps[np.arange(4), np.arange(4)] = 0.5
    copy = Ket(SystemLayout.of(("A", 4), ("C", 4)), amps.reshape(-1))
    lo, hi = hmax_via_duality(copy, ["A"], [], ["C"])
    assert lo == pytest.approx(2, abs=1e-6) and hi == pytest.approx(2, abs=1e-6)


def test_smoothing_examples(rng):
    cq = random_cq_state(rng, 2, 2)
    rho = cq.to_matrix()
    plain = hmin_interval(rho, 4, 2)
    res = smooth_hmin_lower(rho, 4, 2, [rho], 0.0)
    assert res.value == pytest.approx(plain.lower, abs=1e-9)
    with pytest.raises(ValueError):
        smooth_hmin_lower(rho, 4, 2, [0.5 * rho], 0.01)


def test_clamping_a_spike_raises_the_bound():
    e0 = np.diag([1.0, 0])
    blocks = np.stack([0.01 * e0] + [0.33 * np.eye(2) / 2] * 3)
    cq = CqState(2, blocks)
    cq = CqState(2, cq.blocks / cq.trace)
    cand = clamp_candidate(cq, [0])
    eps = purified_distance(cq.to_matrix(), cand.to_matrix())
    res = smooth_hmin_lower(cq.to_matrix(), 4, 2, [cq.to_matrix(), cand.to_matrix()], eps)
    assert res.index == 1
    assert res.value > hmin_interval(cq.to_matrix(), 4, 2).lower


@pytest.mark.parametrize("n", [1, 2])
def test_uncertainty_relation_on_random_pure_states(rng, n):
    d = 1 << n
    for _ in range(3):
        layout = SystemLayout.of(("A", d), ("Abar", 2), ("E", 2))
        v = rng.normal(size=layout.total) + 1j * rng.normal(size=layout.total)
        psi = Ket(layout, v / np.linalg.norm(v))
        res = uncertainty_relation(psi, "A", ["Abar"], ["E"])
        assert res["certified_sum"] >= n - 1e-4
