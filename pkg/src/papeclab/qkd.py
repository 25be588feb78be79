"""A desk-scale entanglement-based QKD run and its virtual rewritings.

Registers of the initial state, in order: ``Ak`` (Alice's key qubits),
``As`` (Alice's sample qubit, dim 1 when absent), ``E``, ``Bk``, ``Bs``.

Classical post-processing is modeled exactly on the joint sifted blocks
``rho_E^{ab}``. Error-correction and verification messages are taken to be
one-time-pad encrypted, so Eve's state is not updated by them. A failed
verification sends the parties back for another round; the retry is
modeled as ending with Bob holding Alice's string, and its weight is
reported as ``loop_mass``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import checks
from .entropy import hmin_interval, renyi_half, smooth_hmin_lower, uncertainty_relation
from .gf2 import BitMatrix, LinearHashFamily, all_bit_strings, coset_leader, toeplitz_family
from .hilbert import (CqState, Ket, SubNormalizedState, SystemLayout, apply_local,
                      cnot_matrix, hadamard_matrix, is_purification, is_semi_purification,
                      phase_vector, ptrace_matrix, state_from_json, twirl,
                      z_dephase_matrix)
from .metrics import D1_security, correctness_failure, d1_key, l1_distance
from .pa import (actual_pa, apply_pec, default_family, make_pec_channel,
                 to_canonical)

REGISTERS = ("Ak", "As", "E", "Bk", "Bs")
SAMPLE_TESTS = ("accept_all", "parity")


# ---------------------------------------------------------------------------
# instance description


@dataclass(frozen=True)
class Decoder:
    """Bob's error correction: ``kind`` is ``none``, ``xor`` or ``syndrome``."""

    kind: str = "none"
    pattern: int = 0
    h_ec: BitMatrix | None = None

    def __post_init__(self):
        if self.kind not in ("none", "xor", "syndrome"):
            raise ValueError(f"unknown decoder {self.kind!r}")
        if self.kind == "syndrome" and self.h_ec is None:
            raise ValueError("syndrome decoder needs h_ec")

    def correct(self, a: int, b: int, n: int) -> int:
        if self.kind == "none":
            return b
        if self.kind == "xor":
            return b ^ self.pattern
        diff = self.h_ec.apply_int(a) ^ self.h_ec.apply_int(b)
        syn = np.array([(diff >> (self.h_ec.nrows - 1 - i)) & 1
                        for i in range(self.h_ec.nrows)], dtype=np.uint8)
        lead = coset_leader(self.h_ec, syn)
        return b ^ int("".join(map(str, lead)), 2)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "xor":
            out["pattern"] = self.pattern
        if self.kind == "syndrome":
            out["h_ec"] = self.h_ec.to_text()
        return out

    @classmethod
    def from_json(cls, obj: dict, n: int) -> "Decoder":
        kind = obj.get("kind", "none")
        h = BitMatrix.from_text(obj["h_ec"], ncols=n) if kind == "syndrome" else None
        return cls(kind, int(obj.get("pattern", 0)), h)


@dataclass(frozen=True)
class QkdInstance:
    n: int
    sample: int
    initial: SubNormalizedState
    sample_test: str
    bases: str
    decoder: Decoder
    verify_family: LinearHashFamily
    pa_family: LinearHashFamily

    def __post_init__(self):
        if not 1 <= self.n <= 3 or self.sample not in (0, 1):
            raise ValueError("need 1 <= n <= 3 and at most one sample qubit")
        dims = (1 << self.n, 1 << self.sample, self.initial.layout.dim("E"),
                1 << self.n, 1 << self.sample)
        if self.initial.layout.names != REGISTERS or self.initial.layout.dims != dims:
            raise ValueError("initial state layout does not match n and sample")
        if self.sample_test not in SAMPLE_TESTS:
            raise ValueError(f"unknown sample test {self.sample_test!r}")
        if self.sample_test == "parity" and self.sample != 1:
            raise ValueError("parity test needs a sample qubit")
        if len(self.bases) != self.n or set(self.bases) - {"Z", "X"}:
            raise ValueError("bases must be a Z/X string of length n")
        if self.verify_family.n != self.n or self.pa_family.n != self.n:
            raise ValueError("family input lengths must equal n")

    @property
    def e_dim(self) -> int:
        return self.initial.layout.dim("E")

    @property
    def m(self) -> int:
        return self.pa_family.m

    @property
    def l(self) -> int:
        return self.verify_family.m

    def to_json(self) -> dict:
        return {"n": self.n, "sample": self.sample, "initial": self.initial.to_json(),
                "sample_test": self.sample_test, "bases": self.bases,
                "decoder": self.decoder.to_json(),
                "verify_family": self.verify_family.to_json(),
                "pa_family": self.pa_family.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "QkdInstance":
        n = int(obj["n"])
        return cls(n, int(obj["sample"]), state_from_json(obj["initial"]), obj["sample_test"],
                   obj["bases"], Decoder.from_json(obj["decoder"], n),
                   LinearHashFamily.from_json(obj["verify_family"]),
                   LinearHashFamily.from_json(obj["pa_family"]))


def basis_unitary(bases: str) -> np.ndarray:
    h = hadamard_matrix(1)
    out = np.ones((1, 1), dtype=np.complex128)
    for b in bases:
        out = np.kron(out, h if b == "X" else np.eye(2))
    return out


def _dims(inst: QkdInstance) -> list[int]:
    return list(inst.initial.layout.dims)


def _embed(inst: QkdInstance, op: np.ndarray, names: Sequence[str]) -> np.ndarray:
    from .hilbert import embed_operator
    return embed_operator(op, _dims(inst), [REGISTERS.index(n) for n in names])


# ---------------------------------------------------------------------------
# actual scheme


@dataclass
class QkdTrace:
    """Every intermediate the checks compare. Key states are ensembles over
    ``(u, g)`` keyed by the text form of the matrices."""

    inst: QkdInstance
    accept_mass: float
    sif_blocks: np.ndarray | None = None
    sif: CqState | None = None
    fin_kke: dict = field(default_factory=dict)
    fin_ke: dict = field(default_factory=dict)
    mismatch: dict = field(default_factory=dict)
    loop_mass: dict = field(default_factory=dict)
    psi_pre: Ket | None = None
    psi_tw: Ket | None = None
    pec: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    def checkpoints(self) -> dict:
        out = {}
        if self.sif is not None:
            out["rho_sif"] = self.sif.to_matrix()
        if self.fin_ke:
            out["rho_fin_ke"] = dict(self.fin_ke)
        if self.fin_kke:
            out["rho_fin_kke"] = dict(self.fin_kke)
        if self.psi_pre is not None:
            out["psi_pre"] = self.psi_pre
        if self.psi_tw is not None:
            out["psi_tw"] = self.psi_tw
        if self.pec:
            out["rho_pec"] = {g: r.rho_ae for g, r in self.pec.items()}
        return out


def sampled_state(inst: QkdInstance) -> np.ndarray:
    """Post-selected state after the sample measurement (sub-normalized)."""
    rho = inst.initial.matrix
    if inst.sample_test == "accept_all":
        return rho
    out = np.zeros_like(rho)
    for xa in range(2):
        for xb in range(2):
            if xa != xb:
                continue
            va, vb = phase_vector([xa]), phase_vector([xb])
            proj = _embed(inst, np.kron(np.outer(va, va.conj()), np.outer(vb, vb.conj())),
                          ["As", "Bs"])
            out += proj @ rho @ proj
    return out


def rejected_mass(inst: QkdInstance) -> float:
    """Trace of the abort branch of the sample test."""
    return float(inst.initial.trace - np.trace(sampled_state(inst)).real)


def sift_blocks(inst: QkdInstance) -> np.ndarray:
    """``rho_E^{ab}`` indexed ``[a, b]`` after basis choice and Z readout."""
    rho = sampled_state(inst)
    u = basis_unitary(inst.bases)
    rot = _embed(inst, u, ["Ak"]) @ _embed(inst, u, ["Bk"])
    rho = rot @ rho @ rot.conj().T
    d, ds, de = 1 << inst.n, 1 << inst.sample, inst.e_dim
    t = rho.reshape(d, ds, de, d, ds, d, ds, de, d, ds)
    return np.einsum("asebtasfbt->abef", t)


def run_actual_qkd(inst: QkdInstance) -> QkdTrace:
    n, m, de = inst.n, inst.m, inst.e_dim
    d = 1 << n
    blocks = sift_blocks(inst)
    tr = QkdTrace(inst, float(np.einsum("abee->", blocks).real))
    tr.sif_blocks = blocks
    tr.sif = CqState(n, blocks.sum(axis=1))
    dk = 1 << m
    for u, pu in inst.verify_family:
        ut = u.table()
        final = np.empty((d, d), dtype=np.int64)
        mism = loop = 0.0
        for a in range(d):
            for b in range(d):
                w = float(np.trace(blocks[a, b]).real)
                bc = inst.decoder.correct(a, b, n)
                if ut[a] == ut[bc]:
                    final[a, b] = bc
                    mism += w if a != bc else 0.0
                else:
                    final[a, b] = a
                    loop += w
        tr.mismatch[u.to_text()] = (float(pu), mism)
        tr.loop_mass[u.to_text()] = (float(pu), loop)
        for g, pg in inst.pa_family:
            gt = g.table()
            out = np.zeros((dk, dk, de, de), dtype=np.complex128)
            for a in range(d):
                for b in range(d):
                    out[gt[a], gt[final[a, b]]] += blocks[a, b]
            mat = np.zeros((dk * dk * de, dk * dk * de), dtype=np.complex128)
            for k in range(dk):
                for k2 in range(dk):
                    i = (k * dk + k2) * de
                    mat[i:i + de, i:i + de] = out[k, k2]
            tr.fin_kke[(u.to_text(), g.to_text())] = (float(pu) * float(pg), mat)
    for g, pg in inst.pa_family:
        acc = None
        for u, pu in inst.verify_family:
            _, mat = tr.fin_kke[(u.to_text(), g.to_text())]
            red = ptrace_matrix(mat, [dk, dk, de], [0, 2]) * float(pu)
            acc = red if acc is None else acc + red
        tr.fin_ke[g.to_text()] = (float(pg), acc)
    return tr


def fin_ke_ensemble(tr: QkdTrace) -> list:
    return list(tr.fin_ke.values())


def fin_kke_ensemble(tr: QkdTrace) -> list:
    return list(tr.fin_kke.values())


# ---------------------------------------------------------------------------
# virtual schemes


def run_virtual_qkd1(inst: QkdInstance) -> QkdTrace:
    """Bob's operations after the sample test are dropped; Alice hashes alone."""
    rho = sampled_state(inst)
    rot = _embed(inst, basis_unitary(inst.bases), ["Ak"])
    rho = rot @ rho @ rot.conj().T
    d, ds, de = 1 << inst.n, 1 << inst.sample, inst.e_dim
    t = rho.reshape(d, ds, de, d, ds, d, ds, de, d, ds)
    blocks = np.einsum("asebtasfbt->aef", t)
    tr = QkdTrace(inst, float(np.trace(rho).real))
    tr.sif = CqState(inst.n, blocks)
    for g, pg in inst.pa_family:
        tr.fin_ke[g.to_text()] = (float(pg), actual_pa(tr.sif, g))
    return tr


def purify_initial(inst: QkdInstance, cutoff: float = 1e-12) -> Ket:
    """Eigen-purification with ancilla ``R`` of dimension equal to the rank."""
    w, v = np.linalg.eigh(inst.initial.matrix)
    keep = w > cutoff * max(1.0, w.max())
    w, v = w[keep], v[:, keep]
    amps = (v * np.sqrt(w)).reshape(-1)
    layout = inst.initial.layout.concat(SystemLayout.of(("R", int(keep.sum()))))
    return Ket(layout, amps)


def run_virtual_qkd2(inst: QkdInstance) -> QkdTrace:
    """Purified run: unitary sample test with a flag, deferred sifting."""
    psi = purify_initial(inst)
    flag_dim = 2 if inst.sample_test == "parity" else 1
    psi = _append(psi, "F", flag_dim)
    if inst.sample_test == "parity":
        h = hadamard_matrix(1)
        psi = psi.apply(h, ["As"]).apply(h, ["Bs"])
        psi = psi.apply(cnot_matrix(1), ["As", "F"]).apply(cnot_matrix(1), ["Bs", "F"])
        psi = psi.apply(h, ["As"]).apply(h, ["Bs"])
        proj = np.diag([1.0, 0.0]).astype(np.complex128)
        psi = psi.apply(proj, ["F"])
    accept = psi.norm2
    u = basis_unitary(inst.bases)
    psi = psi.apply(u, ["Ak"]).apply(u, ["Bk"])
    psi = psi.apply(cnot_matrix(inst.n), ["Ak", "Bk"])
    psi = _append(psi, "A", 1 << inst.n)
    swap = _swap_matrix(1 << inst.n)
    psi = psi.apply(swap, ["Ak", "A"])
    order = ["A", "E"] + [x for x in psi.layout.names if x not in ("A", "E")]
    psi = psi.reorder(order)
    tr = QkdTrace(inst, accept)
    tr.psi_pre = psi
    red = psi.reduced(["A", "E"])
    tr.sif = CqState.from_matrix(inst.n, z_dephase_matrix(red.matrix, red.layout.dims, 0))
    ok, res = is_semi_purification(psi, tr.sif, "A", ["E"])
    tr.residuals["semi_purification"] = res
    for g, pg in inst.pa_family:
        tr.fin_ke[g.to_text()] = (float(pg), actual_pa(tr.sif, g))
    return tr


def _append(psi: Ket, name: str, dim: int) -> Ket:
    amps = np.zeros(dim, dtype=np.complex128)
    amps[0] = 1
    return Ket(psi.layout.concat(SystemLayout.of((name, dim))), np.kron(psi.amplitudes, amps))


def _swap_matrix(d: int) -> np.ndarray:
    out = np.zeros((d * d, d * d), dtype=np.complex128)
    for x in range(d):
        for y in range(d):
            out[y * d + x, x * d + y] = 1
    return out


def run_virtual_qkd3(inst: QkdInstance, strategy: str = "optimal",
                     vq2: QkdTrace | None = None) -> QkdTrace:
    """Twirl, phase error correction per ``g``, then key readout."""
    vq2 = vq2 or run_virtual_qkd2(inst)
    tw = twirl(vq2.psi_pre, "A", "T")
    tr = QkdTrace(inst, vq2.accept_mass)
    tr.psi_pre = vq2.psi_pre
    tr.psi_tw = tw
    tr.sif = vq2.sif
    ok, res = is_purification(tw, vq2.sif.to_matrix(), ["A", "E"])
    tr.residuals["purification"] = res
    canon = None
    for g, pg in inst.pa_family:
        chan = make_pec_channel(vq2.sif, g, strategy)
        if chan.anc_dims:
            if canon is None:
                canon, tr.residuals["canonical_map"] = to_canonical(tw, vq2.sif, "A", ["E"])
            result = apply_pec(chan, canon, "A", ["E"], ["A1", "A2"])
        else:
            result = apply_pec(chan, tw, "A", ["E"])
        tr.pec[g.to_text()] = result
        tr.fin_ke[g.to_text()] = (float(pg), result.rho_ke)
    return tr


def phase_distribution(psi: Ket, a: str = "A") -> np.ndarray:
    """``Pr(X = x) = <x~|rho_A|x~>`` of a pure state."""
    rho_a = psi.reduced([a]).matrix
    n = int(math.log2(rho_a.shape[0]))
    p = np.array([np.vdot(phase_vector(x), rho_a @ phase_vector(x)).real
                  for x in all_bit_strings(n)])
    # rounding noise on empty outcomes would inflate sqrt-based entropies
    return np.where(p > 1e-14 * p.sum(), p, 0.0)


# ---------------------------------------------------------------------------
# checks


def _ensemble_distance(a: dict, b: dict) -> float:
    return sum(p * l1_distance(rho, b[key][1]) for key, (p, rho) in a.items())


def verify_ladder(inst: QkdInstance, tol: float = 1e-9) -> tuple[list, dict]:
    """All equalities that say each virtual rewriting is lossless."""
    aq = run_actual_qkd(inst)
    v1 = run_virtual_qkd1(inst)
    v2 = run_virtual_qkd2(inst)
    v3 = run_virtual_qkd3(inst, vq2=v2)
    sif = aq.sif.to_matrix()
    total = aq.accept_mass + rejected_mass(inst)
    out = [
        checks.leq("accept_plus_abort_mass", "Lemma 7", abs(total - inst.initial.trace), 0.0, tol),
        checks.leq("sifted_state_alice_only", "Lemma 7", l1_distance(v1.sif.to_matrix(), sif), 0.0, tol),
        checks.leq("final_state_alice_only", "Lemma 7", _ensemble_distance(v1.fin_ke, aq.fin_ke), 0.0, tol),
        checks.leq("accept_mass_purified", "Lemma 8", abs(v2.accept_mass - aq.accept_mass), 0.0, tol),
        checks.leq("sifted_state_purified", "Lemma 8", l1_distance(v2.sif.to_matrix(), sif), 0.0, tol),
        checks.leq("semi_purification", "Lemma 8", v2.residuals["semi_purification"], 0.0, tol),
        checks.leq("final_state_purified", "Lemma 8", _ensemble_distance(v2.fin_ke, aq.fin_ke), 0.0, tol),
        checks.leq("twirled_is_purification", "Lemma 9", v3.residuals["purification"], 0.0, tol),
        checks.leq("final_state_virtual_pa", "Lemma 9", _ensemble_distance(v3.fin_ke, aq.fin_ke), 0.0, tol),
    ]
    for strategy in ("trivial", "syndrome-only"):
        vb = run_virtual_qkd3(inst, strategy, vq2=v2)
        out.append(checks.leq(f"final_state_virtual_pa[{strategy}]", "Lemma 9",
                              _ensemble_distance(vb.fin_ke, aq.fin_ke), 0.0, tol))
    return out, {"aq": aq, "vq1": v1, "vq2": v2, "vq3": v3}


def intermediate_state(rho_kke: np.ndarray, m: int, de: int) -> np.ndarray:
    """Bob's key overwritten by Alice's: ``sum |kk><kk| (x) rho_E^{k,k'}``."""
    dk = 1 << m
    t = rho_kke.reshape(dk, dk, de, dk, dk, de)
    out = np.zeros_like(t)
    for k in range(dk):
        out[k, k, :, k, k, :] = t[k, :, :, k, :, :].trace(axis1=0, axis2=2)
    return out.reshape(rho_kke.shape)


def verify_security_separation(tr: QkdTrace, tol: float = 1e-9) -> list:
    inst = tr.inst
    m, l, de = inst.m, inst.l, inst.e_dim
    ens = fin_kke_ensemble(tr)
    big_d1 = D1_security(ens, m)
    d1 = d1_key(fin_ke_ensemble(tr), m)
    pr = sum(p * correctness_failure(rho, m) for p, rho in ens)
    out = [
        checks.leq("D1_vs_secrecy_and_correctness", "Lemma 5", big_d1, d1 + 2 * pr, tol),
        checks.leq("D1_vs_secrecy", "Corollary 3", big_d1, d1 + 2.0 ** (-l + 1), tol),
    ]
    mism = sum(p * w for p, w in tr.mismatch.values())
    out.append(checks.leq("key_mismatch_vs_mismatch_mass", "Lemma 6", pr, mism, tol))
    out.append(checks.leq("key_mismatch_vs_hash_collision", "Lemma 6", pr,
                          2.0 ** -l * tr.accept_mass, tol))
    gap_fin = 0.0
    gap_int = 0.0
    dk = 1 << m
    rho_e = sum(p * ptrace_matrix(rho, [dk * dk, de], [1]) for p, rho in ens)
    from .metrics import ideal_two_key_state
    ideal = ideal_two_key_state(rho_e, m)
    d1_int = 0.0
    for p, rho in ens:
        inter = intermediate_state(rho, m, de)
        gap_fin += p * abs(l1_distance(rho, inter) - 2 * correctness_failure(rho, m))
        d1_int += p * l1_distance(inter, ideal)
    gap_int = abs(d1_int - d1)
    out.append(checks.leq("final_vs_intermediate_is_twice_mismatch", "Lemma 5", gap_fin, 0.0, tol))
    out.append(checks.leq("intermediate_vs_ideal_is_secrecy", "Lemma 5", gap_int, 0.0, tol))
    return out


def verify_entropy_from_phase_renyi(tr: QkdTrace, psi_pre: Ket, tol: float = 1e-2,
                   entropy_tol: float = 1e-4, hmin=None) -> tuple[list, dict]:
    inst = tr.inst
    p = phase_distribution(psi_pre)
    h_half = renyi_half(p)
    hmin = hmin or hmin_interval(tr.sif.to_matrix(), 1 << inst.n, inst.e_dim, entropy_tol)
    target = inst.n - h_half
    c = checks.geq_entropy("min_entropy_vs_phase_renyi", "Lemma 10", hmin.lower, hmin.upper,
                           target, tol, h_half=h_half, gap=hmin.gap)
    return [c], {"h_half": h_half, "hmin": hmin, "phase_distribution": p}


def verify_uncertainty(psi_pre: Ket, tol: float = 1e-4) -> checks.Check:
    abar = [x for x in psi_pre.layout.names if x not in ("A", "E")]
    res = uncertainty_relation(psi_pre, "A", abar, ["E"])
    n = res["n"]
    if res["certified_sum"] >= n - tol:
        verdict = checks.PASS
    elif res["best_sum"] < n - tol:
        verdict = checks.FAIL
    else:
        verdict = checks.INCONCLUSIVE
    return checks.Check("min_plus_max_entropy", "Lemma 10", float(n), res["certified_sum"],
                        verdict, res["best_sum"])


def end_to_end_bounds(tr: QkdTrace, vq3: QkdTrace, eps: float = 0.0,
                      candidates: Sequence | None = None, tol: float = 1e-9,
                      entropy_tol: float = 1e-4, hmin=None) -> list:
    """Measured ``D1`` against the hashing and the phase-error pipelines."""
    inst = tr.inst
    m, l, de = inst.m, inst.l, inst.e_dim
    big_d1 = D1_security(fin_kke_ensemble(tr), m)
    rho = tr.sif.to_matrix()
    if candidates:
        sm = smooth_hmin_lower(rho, 1 << inst.n, de, candidates, eps, entropy_tol)
        lo, hi = sm.interval.lower, sm.interval.upper
    else:
        if eps != 0:
            raise ValueError("smoothing needs candidates")
        iv = hmin or hmin_interval(rho, 1 << inst.n, de, entropy_tol)
        lo, hi = iv.lower, iv.upper
    base = 2.0 ** (-l + 1) + 2 * eps
    lhl = lambda h: base + 2.0 ** ((m - h) / 2)
    pec = lambda h: base + 2.0 ** ((m - h + 3) / 2)
    out = [checks.leq_entropy("D1_vs_hash_pipeline", "Corollary 3", big_d1, lhl, lo, hi, tol),
           checks.leq_entropy("D1_vs_coding_pipeline", "Corollary 3", big_d1, pec, lo, hi, tol)]
    for h in (lo, hi):
        ratio = (pec(h) - base) / (lhl(h) - base)
        out.append(checks.leq("pipeline_pa_term_ratio", "Corollary 2",
                              abs(ratio - 2.0 ** 1.5), 0.0, 1e-12, ratio=ratio))
    if eps == 0:
        avg = sum(p * vq3.pec[key].phase_error for key, (p, _) in vq3.fin_ke.items())
        out.append(checks.leq("D1_vs_phase_error_pipeline", "Corollary 1", big_d1,
                              2.0 ** (-l + 1) + 2 * math.sqrt(2) * math.sqrt(avg), tol))
        out.append(checks.leq_entropy("phase_error_vs_min_entropy", "Theorem 1", avg,
                                      lambda h: 2.0 ** (m - h), lo, hi, tol))
    return out


# ---------------------------------------------------------------------------
# instance generation


def _hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (a + a.conj().T) / 2
    return h / np.linalg.norm(h, 2)


def bell_state(n: int, sample: int, de: int) -> np.ndarray:
    """``|Phi+>`` pairs on (Ak,Bk) and (As,Bs) with Eve in ``|0>``."""
    d, ds = 1 << n, 1 << sample
    amps = np.zeros((d, ds, de, d, ds), dtype=np.complex128)
    for k in range(d):
        for s in range(ds):
            amps[k, s, 0, k, s] = 1
    return (amps / np.sqrt(d * ds)).reshape(-1)


def eve_attack(vec: np.ndarray, n: int, sample: int, de: int, unitary: np.ndarray) -> np.ndarray:
    dims = [1 << n, 1 << sample, de, 1 << n, 1 << sample]
    # unitary acts on Bk, Bs, E in that order
    out, _ = apply_local(vec, dims, unitary, [3, 4, 2])
    return out


def random_qkd_instance(rng: np.random.Generator, n: int = 2, sample: int = 1, de: int = 2,
                        strength: float | None = None, mix: float | None = None,
                        sample_test: str | None = None, m: int = 1, l: int = 1,
                        decoder: Decoder | None = None, bases: str | None = None,
                        bit_flip: int = 0) -> QkdInstance:
    """Bell pairs attacked by a random Eve unitary, mixed at rank two.

    ``strength`` scales the generator of Eve's unitary; ``mix`` is the
    weight of a second, independently attacked copy. ``bit_flip`` applies a
    fixed X pattern to Bob's key qubits.
    """
    strength = rng.uniform(0, 1.5) if strength is None else strength
    mix = rng.uniform(0, 0.5) if mix is None else mix
    sample_test = sample_test or ("parity" if sample else "accept_all")
    bases = bases or "".join(rng.choice(["Z", "X"], size=n))
    d_att = (1 << n) * (1 << sample) * de
    base = bell_state(n, sample, de)
    vecs = []
    for _ in range(2):
        u = expm(-1j * strength * np.pi * _hermitian(rng, d_att))
        vecs.append(eve_attack(base, n, sample, de, u))
    rho = (1 - mix) * np.outer(vecs[0], vecs[0].conj()) + mix * np.outer(vecs[1], vecs[1].conj())
    layout = SystemLayout.of(("Ak", 1 << n), ("As", 1 << sample), ("E", de),
                             ("Bk", 1 << n), ("Bs", 1 << sample))
    if bit_flip:
        from .hilbert import pauli_x_matrix, embed_operator
        x = embed_operator(pauli_x_matrix([(bit_flip >> (n - 1 - i)) & 1 for i in range(n)]),
                           layout.dims, [3])
        rho = x @ rho @ x.conj().T
    if decoder is None:
        h_ec = BitMatrix.from_text(";".join(["1" * n]) if n > 1 else "1")
        decoder = Decoder("syndrome", h_ec=h_ec)
    return QkdInstance(n, sample, SubNormalizedState(layout, rho), sample_test, bases, decoder,
                       toeplitz_family(n, l, full_rank_only=False), default_family(n, m))


def noiseless_instance(n: int = 2, sample: int = 1, m: int = 1, l: int = 1,
                       bases: str | None = None) -> QkdInstance:
    rng = np.random.default_rng(0)
    return random_qkd_instance(rng, n, sample, 2, strength=0.0, mix=0.0, m=m, l=l,
                               bases=bases or "Z" * n, decoder=Decoder("none"))
