import numpy as np
import pytest

from papeclab import checks
from papeclab.gf2 import BitMatrix, toeplitz_family
from papeclab.hilbert import CqState, cq_purification, permutation_matrix_gf2
from papeclab.metrics import (ideal_key_state, l1_distance, phase_error_probability,
                              purified_distance)
from papeclab.pa import (STRATEGIES, PaInstance, actual_pa, build_phase_code, check_linear_scaling,
                         check_virtuality, clamp_candidate, default_family, make_pec_channel,
                         optimal_pec_construction, random_pa_instance, verify_smoothed_bound,
                         verify_lhl_like, verify_phase_error_bound, virtual_pa, virtual_pa_all,
                         virtual_pa_twirled, zero_leakage_cq_state)


def instances(rng, count=4):
    shapes = [(2, 1), (3, 1), (3, 2), (2, 2)]
    return [random_pa_instance(rng, *shapes[i % 4], 2) for i in range(count)]


def verdicts(cs):
    return {c.name: c.verdict for c in cs}


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_virtual_scheme_reproduces_actual_key(rng, strategy):
    for inst in instances(rng):
        c = check_virtuality(inst, strategy)
        assert c.verdict == checks.PASS, c.lhs


def test_pec_channels_are_trace_preserving(rng):
    inst = random_pa_instance(rng, 3, 1, 2)
    for g, _ in list(inst.family)[:3]:
        for s in STRATEGIES:
            chan = make_pec_channel(inst.initial, g, s)
            names = ("A", "A1", "A2")[:len(chan.dims)]
            kc = chan.as_channel(names)
            assert np.linalg.norm(kc.completeness() - np.eye(kc.in_layout.total), 2) < 1e-9


def test_optimal_unitary_is_unitary(rng):
    inst = random_pa_instance(rng, 2, 1, 2)
    g = inst.family.members[0][0]
    chan, data = optimal_pec_construction(inst.initial, g)
    u = chan.unitary
    assert np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-10)
    assert np.allclose(data.t_unitary @ data.t_unitary.conj().T, np.eye(data.t_unitary.shape[0]))


def test_pec_failure_below_fidelity_bound(rng):
    for inst in instances(rng):
        res = verify_phase_error_bound(inst)
        for c in res.checks:
            if c.anchor == "Lemma 12":
                assert c.verdict == checks.PASS, (c.lhs, c.rhs)


def test_phase_error_bound_and_fidelity_average_hold(rng):
    for inst in instances(rng):
        res = verify_phase_error_bound(inst)
        assert not checks.failures(res.checks)
        assert res.hmin.gap < 1e-3


def test_zero_leakage_gives_zero_phase_error(rng):
    for n, m in [(2, 1), (3, 1), (3, 2)]:
        cq = zero_leakage_cq_state(rng, n, 2)
        out = virtual_pa_all(PaInstance(n, m, cq, default_family(n, m)))
        assert out.average_phase_error() <= 1e-9


def test_linear_scaling(rng):
    inst = random_pa_instance(rng, 2, 1, 2)
    for c in (0.25, 0.6, 1.0):
        assert check_linear_scaling(inst, c).verdict == checks.PASS


def test_frame_change_leaves_key_and_phase_error_unchanged(rng):
    inst = random_pa_instance(rng, 3, 2, 2)
    for g, _ in list(inst.family)[:4]:
        code = build_phase_code(g)
        moved = inst.initial.relabeled(code.v.table())
        head = BitMatrix(np.eye(3, dtype=np.uint8)[:2])
        assert l1_distance(actual_pa(inst, g), actual_pa(moved, head)) < 1e-12
        res = virtual_pa(inst, g)
        vmat = np.kron(permutation_matrix_gf2(code.v), np.eye(2))
        rotated = vmat @ res.rho_ae @ vmat.conj().T
        p0 = phase_error_probability(res.rho_ae, [8, 2])
        p1 = phase_error_probability(rotated, [8, 2])
        assert abs(p0 - p1) < 1e-10


def test_phase_error_bound_grows_with_key_length(rng):
    inst = random_pa_instance(rng, 3, 1, 2)
    h = verify_phase_error_bound(inst).hmin.upper
    assert 2.0 ** (2 - h) >= 2.0 ** (1 - h)


def test_lhl_chain(rng):
    for inst in instances(rng):
        cs = verify_lhl_like(inst)
        assert not checks.failures(cs), [c.name for c in checks.failures(cs)]
        ratios = [c.detail["ratio"] for c in cs if "ratio" in c.detail]
        assert all(abs(r - 2 * np.sqrt(2)) < 1e-12 for r in ratios)


def test_smoothed_bound_with_clamped_candidate(rng):
    inst = random_pa_instance(rng, 2, 1, 2)
    cq = inst.initial
    drop = int(np.argmin(cq.probabilities()))
    cand = clamp_candidate(cq, [drop])
    eps = purified_distance(cq.to_matrix(), cand.to_matrix())
    cs = verify_smoothed_bound(inst, [cq, cand], eps)
    assert not checks.failures(cs)
    assert l1_distance(cq.to_matrix(), cand.to_matrix()) <= eps + 1e-12


def test_twirled_semi_purification_gives_same_key(rng):
    inst = random_pa_instance(rng, 2, 1, 2)
    cq = inst.initial
    psi = cq_purification(cq)
    semi = psi.apply(np.diag(np.exp(1j * rng.uniform(0, 6, 4))), ["A"])
    for g, _ in inst.family:
        res = virtual_pa_twirled(semi, cq, g)
        assert l1_distance(res.rho_ke, actual_pa(inst, g)) < 1e-9


def test_ideal_input_needs_no_correction(rng):
    n, m = 2, 1
    rho_e = np.diag([0.6, 0.4])
    cq = CqState(n, np.stack([rho_e / 4] * 4))
    inst = PaInstance(n, m, cq, toeplitz_family(n, m))
    for g, _ in inst.family:
        fin = actual_pa(inst, g)
        assert l1_distance(fin, ideal_key_state(rho_e, m)) < 1e-12


def test_instance_json_round_trip(rng):
    inst = random_pa_instance(rng, 2, 1, 2)
    back = PaInstance.from_json(inst.to_json())
    assert np.allclose(back.initial.blocks, inst.initial.blocks)
    assert back.family == inst.family


def test_channel_failure_equals_unitary_failure(rng):
    inst = random_pa_instance(rng, 3, 1, 2)
    psi = cq_purification(inst.initial)
    for g, _ in list(inst.family)[:3]:
        chan = make_pec_channel(inst.initial, g, "optimal")
        res = virtual_pa(inst, g, chan)
        moved = psi.apply(chan.unitary, ["A", "A1", "A2"])
        rho_a = moved.reduced(["A"]).matrix
        assert abs(phase_error_probability(rho_a) - res.phase_error) < 1e-9
