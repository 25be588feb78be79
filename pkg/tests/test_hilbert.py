import numpy as np
import pytest

from papeclab.gf2 import BitMatrix, full_rank_family, int_to_bits
from papeclab.hilbert import (CqState, KrausChannel, Ket, SubNormalizedState, SystemLayout,
                              cnot_matrix, cnot_matrix_phase_form, cq_purification, hadamard_matrix,
                              is_purification, is_semi_purification, overlap, partial_trace,
                              pauli_x_matrix, pauli_z_matrix, permutation_matrix_gf2,
                              phase_vector, state_from_json, tensor, twirl, uhlmann_isometry,
                              uhlmann_unitary, z_dephase_matrix, z_measurement_channel)
from papeclab.metrics import fidelity_generalized, l1_distance
from papeclab.pa import build_phase_code, random_cq_state, random_density


def random_ket(rng, layout, norm=1.0):
    v = rng.normal(size=layout.total) + 1j * rng.normal(size=layout.total)
    return Ket(layout, np.sqrt(norm) * v / np.linalg.norm(v))


def single_qubit(name, bit):
    return Ket.basis(SystemLayout.of((name, 2)), bit)


def test_tensor_of_basis_kets():
    k = tensor(single_qubit("A", 0), single_qubit("B", 1))
    assert k.layout.names == ("A", "B")
    assert np.allclose(k.amplitudes, [0, 1, 0, 0])


def test_z_on_first_qubit_of_11():
    k = Ket.basis(SystemLayout.of(("A", 2), ("B", 2)), 3).apply(pauli_z_matrix([1]), ["A"])
    assert np.allclose(k.amplitudes, [0, 0, 0, -1])


def test_layout_dims():
    assert SystemLayout.of(("A", 2), ("B", 3)).dims == (2, 3)
    with pytest.raises(ValueError):
        SystemLayout.of(("A", 2), ("A", 2))


def test_pauli_strings():
    ket10 = np.eye(4)[2]
    assert np.allclose(pauli_z_matrix([1, 1]) @ ket10, -ket10)
    assert np.allclose(pauli_x_matrix([0, 1]) @ ket10, np.eye(4)[3])
    assert np.allclose(pauli_z_matrix([0, 0]), np.eye(4))


def test_phase_vectors():
    assert np.allclose(phase_vector([0]), np.array([1, 1]) / np.sqrt(2))
    assert np.allclose(phase_vector([1]), np.array([1, -1]) / np.sqrt(2))
    basis = np.array([phase_vector(int_to_bits(x, 3)) for x in range(8)])
    assert np.allclose(basis.conj() @ basis.T, np.eye(8))


def test_partial_trace_examples(rng):
    for da, db in [(2, 3), (4, 2), (3, 8)]:
        rho = random_density(rng, da)
        sigma = random_density(rng, db) * 0.6
        prod = tensor(SubNormalizedState(SystemLayout.of(("A", da)), rho * 0.9),
                      SubNormalizedState(SystemLayout.of(("B", db)), sigma))
        assert np.allclose(partial_trace(prod, ["A"]).matrix, 0.9 * rho * 0.6, atol=1e-12)
    bell = Ket(SystemLayout.of(("A", 2), ("B", 2)), np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert np.allclose(bell.reduced(["A"]).matrix, np.eye(2) / 2)
    assert np.isclose(np.trace(bell.density().matrix), 1.0)


def test_partial_trace_keeps_order(rng):
    layout = SystemLayout.of(("A", 2), ("B", 3), ("C", 2))
    k = random_ket(rng, layout)
    ab = k.reduced(["B", "A"]).matrix
    ba = k.reorder(["B", "A", "C"]).reduced(["B", "A"]).matrix
    assert np.allclose(ab, ba)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cnot_forms_agree(n):
    a, b = cnot_matrix(n), cnot_matrix_phase_form(n)
    assert np.abs(a - b).max() < 1e-12
    assert np.allclose(a @ a, np.eye(a.shape[0]))


def test_cnot_copies_z_values():
    d = 4
    for z in range(d):
        k = np.zeros(d * d)
        k[z * d] = 1
        out = cnot_matrix(2) @ k
        assert out[z * d + z] == 1


def test_dephasing_examples():
    plus = np.full((2, 2), 0.5)
    assert np.allclose(z_dephase_matrix(plus, [2], 0), np.eye(2) / 2)
    diag = np.diag([0.3, 0.7])
    assert np.allclose(z_dephase_matrix(diag, [2], 0), diag)
    chan = z_measurement_channel(("A", 4))
    rho = random_density(np.random.default_rng(1), 4)
    once = chan.apply_matrix(rho)
    assert np.allclose(chan.apply_matrix(once), once)


def test_kraus_channel_rejects_incomplete_family():
    with pytest.raises(ValueError):
        KrausChannel(SystemLayout.of(("A", 2)), [np.diag([1.0, 0.0])])
    KrausChannel(SystemLayout.of(("A", 2)), [np.diag([1.0, 0.0])], trace_preserving=False)


def test_permutation_examples():
    assert np.allclose(permutation_matrix_gf2(BitMatrix.identity(2)), np.eye(4))
    swap = permutation_matrix_gf2(BitMatrix.from_text("01;10"))
    assert np.allclose(swap @ np.eye(4)[1], np.eye(4)[2])
    with pytest.raises(ValueError):
        permutation_matrix_gf2(BitMatrix.from_text("11;11"))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_frame_change_maps_code_operators_to_single_qubits(n):
    for m in range(1, n):
        fam = full_rank_family(n, m) if m * n <= 12 else None
        members = [g for g, _ in fam][:12] if fam else []
        for g in members:
            code = build_phase_code(g)
            v = permutation_matrix_gf2(code.v)
            for i in range(m):
                target = pauli_z_matrix(np.eye(n, dtype=np.uint8)[i])
                assert np.abs(v @ code.logical_z(i) @ v.conj().T - target).max() < 1e-12
            for j in range(n - m):
                target = pauli_x_matrix(np.eye(n, dtype=np.uint8)[m + j])
                assert np.abs(v @ code.syndrome_x(j) @ v.conj().T - target).max() < 1e-12


def test_cq_purification_examples(rng):
    p = np.array([0.5, 0.25, 0.125, 0.125])
    blocks = np.zeros((4, 2, 2))
    blocks[:, 0, 0] = p
    psi = cq_purification(CqState(2, blocks))
    expected = np.zeros((4, 2, 2, 4))
    for a in range(4):
        expected[a, 0, 0, a] = np.sqrt(p[a])
    assert np.allclose(np.abs(psi.amplitudes), expected.reshape(-1))
    for _ in range(10):
        cq = random_cq_state(rng, 2, 2, trace=rng.uniform(0.3, 1))
        psi = cq_purification(cq)
        assert l1_distance(psi.reduced(["A", "E"]).matrix, cq.to_matrix()) < 1e-10
        assert np.isclose(psi.norm2, cq.trace)
        assert is_semi_purification(psi, cq)[0]


def test_semi_purification_examples():
    layout = SystemLayout.of(("A", 2), ("E", 2))
    uniform = CqState(1, np.array([np.diag([0.5, 0]), np.diag([0.5, 0])]))
    plus = Ket(layout, np.kron(phase_vector([0]), [1, 0]))
    zero = Ket(layout, np.kron([1, 0], [1, 0]))
    assert is_semi_purification(plus, uniform)[0]
    ok, res = is_semi_purification(zero, uniform)
    assert not ok and np.isclose(res, 1.0)


def test_twirl_examples(rng):
    plus = Ket(SystemLayout.of(("A", 2)), phase_vector([0]))
    bell = twirl(plus, "A", "T")
    assert np.allclose(bell.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2))
    for _ in range(10):
        cq = random_cq_state(rng, 2, 2)
        psi = cq_purification(cq)
        # scramble A by a phase-basis rotation that Z-dephasing cannot see
        semi = psi.apply(np.diag(np.exp(1j * rng.uniform(0, 6, 4))), ["A"])
        tw = twirl(semi, "A", "T")
        assert np.isclose(tw.norm2, semi.norm2)
        assert is_purification(tw, cq.to_matrix(), ["A", "E"], 1e-10)[0]


def test_uhlmann_on_random_pairs(rng):
    layout = SystemLayout.of(("S", 4), ("R", 4))
    for _ in range(100):
        psi, phi = random_ket(rng, layout), random_ket(rng, layout)
        u, ov = uhlmann_unitary(psi, phi, ["R"])
        moved = psi.apply(u, ["R"])
        f = fidelity_generalized(psi.reduced(["S"]).matrix, phi.reduced(["S"]).matrix)
        assert abs(overlap(phi, moved) - f) < 1e-9
        assert abs(ov - f) < 1e-9
        assert np.allclose(u.matrix @ u.matrix.conj().T, np.eye(4))


def test_uhlmann_identity_case(rng):
    layout = SystemLayout.of(("S", 2), ("R", 2))
    psi = random_ket(rng, layout)
    u, ov = uhlmann_unitary(psi, psi, ["R"])
    assert np.isclose(ov, 1.0)
    assert np.isclose(abs(overlap(psi, psi.apply(u, ["R"]))), 1.0)


def test_uhlmann_isometry_between_ancilla_sizes(rng):
    psi = random_ket(rng, SystemLayout.of(("S", 2), ("R", 6)), 0.7)
    rho = psi.reduced(["S"]).matrix
    w, v = np.linalg.eigh(rho)
    phi = Ket(SystemLayout.of(("S", 2), ("Q", 2)), (v * np.sqrt(np.clip(w, 0, None))).reshape(-1))
    j, ov = uhlmann_isometry(psi, phi, ["R"], ["Q"])
    mapped = (psi.amplitudes.reshape(2, 6) @ j.T).reshape(-1)
    assert np.allclose(mapped, phi.amplitudes, atol=1e-10)
    assert np.isclose(ov, np.trace(rho).real)


def test_state_json_round_trip(rng):
    layout = SystemLayout.of(("A", 2), ("E", 3))
    k = random_ket(rng, layout, 0.5)
    back = state_from_json(k.to_json())
    assert np.allclose(back.amplitudes, k.amplitudes)
    st = k.density()
    assert np.allclose(state_from_json(st.to_json()).matrix, st.matrix)
    cq = random_cq_state(rng, 2, 2)
    assert np.allclose(CqState.from_json(cq.to_json()).blocks, cq.blocks)


def test_state_validation():
    layout = SystemLayout.of(("A", 2))
    with pytest.raises(ValueError):
        SubNormalizedState(layout, np.eye(2))
    with pytest.raises(ValueError):
        SubNormalizedState(layout, np.array([[0.5, 1], [0, 0.5]]))
    with pytest.raises(ValueError):
        Ket(layout, [1, 1])


def test_hadamard_maps_computational_to_phase():
    h = hadamard_matrix(2)
    for x in range(4):
        assert np.allclose(h @ np.eye(4)[x], phase_vector(int_to_bits(x, 2)))
