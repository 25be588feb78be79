import json

import numpy as np
import pytest

from papeclab import checks, qkd
from papeclab.gf2 import BitMatrix
from papeclab.metrics import correctness_failure, l1_distance


@pytest.fixture(scope="module")
def ladder():
    rng = np.random.default_rng(7)
    inst = qkd.random_qkd_instance(rng, n=2, sample=1, de=2, m=1, l=1)
    return inst, qkd.verify_ladder(inst)


def test_instance_json_round_trip(ladder):
    inst, _ = ladder
    back = qkd.QkdInstance.from_json(json.loads(json.dumps(inst.to_json())))
    assert np.allclose(back.initial.matrix, inst.initial.matrix)
    assert back.bases == inst.bases and back.decoder == inst.decoder
    assert back.pa_family == inst.pa_family


def test_virtual_ladder_is_lossless(ladder):
    _, (cs, _) = ladder
    assert all(c.verdict == checks.PASS for c in cs), [(c.name, c.lhs) for c in cs]


def test_twirled_state_fits_dimension_cap(ladder):
    _, (_, tr) = ladder
    assert tr["vq3"].psi_tw.layout.total <= 8192


def test_security_separation(ladder):
    _, (_, tr) = ladder
    cs = qkd.verify_security_separation(tr["aq"])
    assert not checks.failures(cs)


def test_intermediate_state_identity():
    # one bit each, K != K' with weight 0.3
    rho_e = np.eye(2) / 2
    kk = np.diag([0.5, 0.3, 0.0, 0.2])
    rho = np.kron(kk, rho_e)
    inter = qkd.intermediate_state(rho, 1, 2)
    assert l1_distance(rho, inter) == pytest.approx(2 * correctness_failure(rho, 1))
    assert np.allclose(np.diag(inter).reshape(4, 2).sum(1), [0.8, 0, 0, 0.2])


def test_noiseless_instance_certifies_full_entropy():
    inst = qkd.noiseless_instance(bases="XZ")
    aq = qkd.run_actual_qkd(inst)
    vq2 = qkd.run_virtual_qkd2(inst)
    cs, info = qkd.verify_entropy_from_phase_renyi(aq, vq2.psi_pre)
    assert info["h_half"] == pytest.approx(0, abs=1e-9)
    assert info["hmin"].lower == pytest.approx(2, abs=1e-4)
    assert cs[0].verdict == checks.PASS


def test_noiseless_keys_agree():
    inst = qkd.noiseless_instance()
    aq = qkd.run_actual_qkd(inst)
    assert aq.accept_mass == pytest.approx(1)
    assert sum(p * w for p, w in aq.mismatch.values()) == pytest.approx(0, abs=1e-12)
    assert sum(p * w for p, w in aq.loop_mass.values()) == pytest.approx(0, abs=1e-12)


def test_parity_test_rejects_phase_flips():
    rng = np.random.default_rng(0)
    inst = qkd.random_qkd_instance(rng, n=1, sample=1, de=2, strength=0.0, mix=0.0,
                                   bases="Z", decoder=qkd.Decoder("none"))
    z_bs = np.kron(np.eye(16), np.diag([1, -1]))
    flipped = z_bs @ inst.initial.matrix @ z_bs
    bad = qkd.QkdInstance(inst.n, inst.sample, type(inst.initial)(inst.initial.layout, flipped),
                          inst.sample_test, inst.bases, inst.decoder, inst.verify_family,
                          inst.pa_family)
    assert qkd.run_actual_qkd(bad).accept_mass == pytest.approx(0, abs=1e-12)
    assert qkd.rejected_mass(bad) == pytest.approx(1)


def test_decoders():
    h = BitMatrix.from_text("11")
    dec = qkd.Decoder("syndrome", h_ec=h)
    assert dec.correct(0b01, 0b00, 2) in (0b01, 0b10)
    assert dec.correct(0b11, 0b11, 2) == 0b11
    assert qkd.Decoder("xor", pattern=0b10).correct(0, 0b11, 2) == 0b01
    with pytest.raises(ValueError):
        qkd.Decoder("syndrome")


def test_bit_flip_is_corrected_or_looped():
    rng = np.random.default_rng(1)
    inst = qkd.random_qkd_instance(rng, n=2, sample=0, de=2, strength=0.0, mix=0.0,
                                   bases="ZZ", bit_flip=0b01, l=2)
    aq = qkd.run_actual_qkd(inst)
    cs = qkd.verify_security_separation(aq)
    assert not checks.failures(cs)


def test_end_to_end_and_uncertainty(ladder):
    _, (_, tr) = ladder
    cs = qkd.end_to_end_bounds(tr["aq"], tr["vq3"])
    assert not checks.failures(cs)
    assert qkd.verify_uncertainty(tr["vq2"].psi_pre).verdict == checks.PASS


def test_phase_distribution_of_bell_pairs():
    inst = qkd.noiseless_instance(n=1, sample=0)
    p = qkd.phase_distribution(qkd.run_virtual_qkd2(inst).psi_pre)
    assert np.allclose(p, [1, 0])


def test_invalid_instances_rejected():
    inst = qkd.noiseless_instance(n=1, sample=0)
    with pytest.raises(ValueError):
        qkd.QkdInstance(inst.n, inst.sample, inst.initial, "parity", inst.bases,
                        inst.decoder, inst.verify_family, inst.pa_family)
    with pytest.raises(ValueError):
        qkd.QkdInstance(inst.n, inst.sample, inst.initial, inst.sample_test, "Y",
                        inst.decoder, inst.verify_family, inst.pa_family)
