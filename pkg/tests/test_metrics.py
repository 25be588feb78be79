import math

import numpy as np
import pytest

from papeclab.hilbert import phase_vector
from papeclab.metrics import (D1_security, SecurityReport, correctness_failure, d1_key,
                              fidelity, fidelity_generalized, ideal_key_state,
                              ideal_two_key_state, l1_distance, phase_error_probability,
                              purified_distance)
from papeclab.pa import random_density

ZERO = np.diag([1.0, 0.0])
ONE = np.diag([0.0, 1.0])
PLUS = np.full((2, 2), 0.5)


def test_l1_examples():
    assert l1_distance(PLUS, PLUS) == pytest.approx(0, abs=1e-15)
    assert l1_distance(ZERO, ONE) == pytest.approx(2)
    assert l1_distance(ZERO, PLUS) == pytest.approx(math.sqrt(2))


def test_fidelity_examples():
    assert fidelity_generalized(PLUS, PLUS) == pytest.approx(1)
    assert fidelity_generalized(0.3 * PLUS, 0.3 * PLUS) == pytest.approx(1)
    assert fidelity_generalized(ZERO, ONE) == pytest.approx(0, abs=1e-12)


def test_purified_distance_examples(rng):
    assert purified_distance(PLUS, PLUS) == pytest.approx(0, abs=1e-7)
    assert purified_distance(ZERO, ONE) == pytest.approx(1)
    for _ in range(20):
        p = purified_distance(random_density(rng, 3) * 0.8, random_density(rng, 3))
        assert 0 <= p <= 1


def test_trace_distance_below_twice_purified_distance(rng):
    for _ in range(50):
        a, b = random_density(rng, 4), random_density(rng, 4)
        assert l1_distance(a, b) <= 2 * purified_distance(a, b) + 1e-9


def test_fidelity_symmetric_and_faithful(rng):
    for _ in range(50):
        a, b = random_density(rng, 3), random_density(rng, 3)
        assert fidelity_generalized(a, b) == pytest.approx(fidelity_generalized(b, a), abs=1e-9)
        assert fidelity_generalized(a, b) < 1 - 1e-9
        assert fidelity(a, a) == pytest.approx(1, abs=1e-9)


def test_ideal_key_state_examples(rng):
    assert np.allclose(ideal_key_state(ZERO, 1), np.kron(np.eye(2) / 2, ZERO))
    rho_e = 0.7 * random_density(rng, 2)
    ideal = ideal_key_state(rho_e, 2)
    assert np.trace(ideal).real == pytest.approx(0.7)
    e_again = ideal.reshape(4, 2, 4, 2).trace(axis1=0, axis2=2)
    assert np.allclose(ideal_key_state(e_again, 2), ideal)


def test_d1_examples(rng):
    rho_e = random_density(rng, 2)
    ideal = ideal_key_state(rho_e, 1)
    assert d1_key([(0.5, ideal), (0.5, ideal)], 1) == pytest.approx(0, abs=1e-12)
    leaky = np.kron(np.diag([0.8, 0.2]), rho_e)
    d1 = d1_key([(1.0, leaky)], 1)
    assert 0 < d1 <= 2


def test_D1_examples(rng):
    rho_e = random_density(rng, 2)
    ideal = ideal_two_key_state(rho_e, 1)
    assert D1_security([(1.0, ideal)], 1) == pytest.approx(0, abs=1e-12)
    swapped = np.zeros((4, 4))
    swapped[1, 1] = swapped[2, 2] = 0.5
    assert D1_security([(1.0, np.kron(swapped, rho_e))], 1) >= 2 - 1e-9


def test_phase_error_examples():
    assert phase_error_probability(np.outer(phase_vector([0]), phase_vector([0]))) == pytest.approx(0, abs=1e-15)
    assert phase_error_probability(np.outer(phase_vector([1]), phase_vector([1]))) == pytest.approx(1)
    assert phase_error_probability(np.eye(2) / 2) == pytest.approx(0.5)
    sub = 0.4 * np.eye(2) / 2
    assert phase_error_probability(sub) == pytest.approx(0.2)
    assert phase_error_probability(sub, include_deficit=True) == pytest.approx(0.8)


def test_phase_error_on_target_register(rng):
    rho_e = random_density(rng, 3)
    plus = np.outer(phase_vector([0, 0]), phase_vector([0, 0]).conj())
    assert phase_error_probability(np.kron(plus, rho_e), dims=[4, 3]) == pytest.approx(0, abs=1e-12)


def test_correctness_failure_examples():
    same = np.diag([0.5, 0, 0, 0.5])
    assert correctness_failure(same) == pytest.approx(0)
    assert correctness_failure(np.eye(4) / 4) == pytest.approx(0.5)
    assert correctness_failure(np.diag([0, 0.5, 0.5, 0])) == pytest.approx(1)
    with pytest.raises(ValueError):
        correctness_failure(np.full((4, 4), 0.25))


def test_security_report_range_checks():
    SecurityReport(d1=0.1, phase_error=0.2).to_json()
    with pytest.raises(ValueError):
        SecurityReport(d1=3.0, phase_error=0.0)
    with pytest.raises(ValueError):
        SecurityReport(d1=0.0, phase_error=1.5)
