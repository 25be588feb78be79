"""Privacy amplification by linear hashing and its phase-error-correction twin.

The actual scheme hashes the classical string ``a`` to ``k = g a``. The
virtual scheme keeps ``A`` quantum, measures the syndromes ``X^{h_j}``,
applies a Z-type correction chosen from an ancilla measurement, and only
then reads out ``Z^{g_i}``. Both give the same ``K E`` state for every
correction strategy; the optimal strategy also makes the phase error small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import checks
from .entropy import hmin_interval, sandwiched_h2_down
from .gf2 import (BitMatrix, LinearHashFamily, all_bit_strings, bits_to_int,
                  collision_probability, complete_check_matrix, coset_leader,
                  extend_basis, full_rank_family, int_to_bits, is_universal2,
                  toeplitz_family)
from .hilbert import (CqState, KrausChannel, Ket, SystemLayout, apply_local,
                      cq_purification, embed_operator, is_semi_purification,
                      pauli_x_matrix, pauli_z_matrix, permutation_matrix_gf2,
                      phase_vector, ptrace_vector, purify_vector, twirl, uhlmann_isometry,
                      uhlmann_unitary)
from .metrics import d1_key, fidelity, ideal_key_state, l1_distance, purified_distance

STRATEGIES = ("optimal", "trivial", "syndrome-only")


@dataclass(frozen=True)
class PaInstance:
    n: int
    m: int
    initial: CqState
    family: LinearHashFamily

    def __post_init__(self):
        if self.initial.n != self.n:
            raise ValueError("initial state has the wrong key length")
        if (self.family.n, self.family.m) != (self.n, self.m):
            raise ValueError("hash family shape mismatch")

    def scaled(self, c: float) -> "PaInstance":
        return PaInstance(self.n, self.m, self.initial.scaled(c), self.family)

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m, "initial": self.initial.to_json(),
                "family": self.family.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "PaInstance":
        return cls(int(obj["n"]), int(obj["m"]), CqState.from_json(obj["initial"]),
                   LinearHashFamily.from_json(obj["family"]))


# ---------------------------------------------------------------------------
# actual scheme


def hash_blocks(cq: CqState, g: BitMatrix) -> np.ndarray:
    """E-blocks of the hashed key: ``out[k] = sum_{g a = k} rho^a``."""
    return _hash_raw(cq.blocks, g)


def blocks_to_matrix(blocks: np.ndarray) -> np.ndarray:
    d, de, _ = blocks.shape
    out = np.zeros((d * de, d * de), dtype=np.complex128)
    for k in range(d):
        out[k * de:(k + 1) * de, k * de:(k + 1) * de] = blocks[k]
    return out


def actual_pa(source, g: BitMatrix) -> np.ndarray:
    """``rho_KE`` after hashing with ``g``."""
    cq = source.initial if isinstance(source, PaInstance) else source
    return blocks_to_matrix(hash_blocks(cq, g))


def actual_pa_ensemble(inst: PaInstance) -> list[tuple[float, np.ndarray]]:
    return [(float(p), actual_pa(inst, g)) for g, p in inst.family]


# ---------------------------------------------------------------------------
# phase code


@dataclass(frozen=True)
class PhaseCode:
    g: BitMatrix
    h: BitMatrix
    v: BitMatrix

    @property
    def n(self) -> int:
        return self.g.ncols

    @property
    def m(self) -> int:
        return self.g.nrows

    def logical_z(self, i: int) -> np.ndarray:
        return pauli_z_matrix(self.g.row(i))

    def syndrome_x(self, j: int) -> np.ndarray:
        return pauli_x_matrix(self.h.row(j))

    def syndrome_projector(self, s) -> np.ndarray:
        """Projector onto phase states ``|x~>`` with ``h x = s``."""
        s = np.asarray(s, dtype=np.uint8)
        d = 1 << self.n
        proj = np.eye(d, dtype=np.complex128)
        for j in range(self.h.nrows):
            sign = -1 if s[j] else 1
            proj = proj @ (np.eye(d) + sign * self.syndrome_x(j)) / 2
        return proj


def build_phase_code(g: BitMatrix, check: bool = True) -> PhaseCode:
    h = complete_check_matrix(g)
    v = extend_basis(g, h)
    code = PhaseCode(g, h, v)
    if check and g.ncols <= 6:
        for i in range(g.nrows):
            zi = code.logical_z(i)
            for j in range(h.nrows):
                xj = code.syndrome_x(j)
                if np.abs(zi @ xj - xj @ zi).max() > 1e-12:
                    raise AssertionError("logical Z and syndrome X do not commute")
    return code


# ---------------------------------------------------------------------------
# phase error correction channels


@dataclass
class PecChannel:
    """Kraus family ``{Z^e P_s (x) E^{s,e}}`` on ``A (x) A'``.

    ``anc_dims`` is empty when the correction ignores the ancilla; the
    operators then act on ``A`` alone.
    """

    g: BitMatrix
    strategy: str
    n: int
    kraus: list[np.ndarray]
    labels: list[tuple[int, int]]
    anc_dims: tuple[int, ...] = ()
    overlap: float | None = None
    unitary: np.ndarray | None = None

    @property
    def dims(self) -> tuple[int, ...]:
        return (1 << self.n,) + self.anc_dims

    def as_channel(self, names=("A", "A1", "A2")) -> KrausChannel:
        layout = SystemLayout(tuple(zip(names[:len(self.dims)], self.dims)))
        return KrausChannel(layout, self.kraus)

    def branches(self, psi: np.ndarray, dims: Sequence[int], targets: Sequence[int]):
        for k in self.kraus:
            vec, _ = apply_local(psi, dims, k, targets)
            yield vec


def _cnot_pair(d: int, mask: int, control_second: bool) -> np.ndarray:
    """Permutation on ``X (x) Y`` (both of dim ``d``).

    ``control_second``: ``|x, y> -> |x ^ (y & mask), y>``;
    otherwise ``|x, y> -> |x, y ^ (x & mask)>``.
    """
    x, y = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    if control_second:
        nx, ny = x ^ (y & mask), y
    else:
        nx, ny = x, y ^ (x & mask)
    src = (x * d + y).reshape(-1)
    dst = (nx * d + ny).reshape(-1)
    out = np.zeros((d * d, d * d), dtype=np.complex128)
    out[dst, src] = 1
    return out


def trivial_pec_channel(g: BitMatrix, code: PhaseCode | None = None) -> PecChannel:
    """Measure the syndrome and do nothing else."""
    code = code or build_phase_code(g)
    n, m = g.ncols, g.nrows
    kraus, labels = [], []
    for s in all_bit_strings(n - m):
        kraus.append(code.syndrome_projector(s))
        labels.append((bits_to_int(s), 0))
    return PecChannel(g, "trivial", n, kraus, labels)


def syndrome_only_pec_channel(g: BitMatrix, code: PhaseCode | None = None) -> PecChannel:
    """Measure the syndrome and flip by the minimum-weight coset leader."""
    code = code or build_phase_code(g)
    n, m = g.ncols, g.nrows
    kraus, labels = [], []
    for s in all_bit_strings(n - m):
        e = coset_leader(code.h, s) if n > m else np.zeros(n, dtype=np.uint8)
        kraus.append(pauli_z_matrix(e) @ code.syndrome_projector(s))
        labels.append((bits_to_int(s), bits_to_int(e)))
    return PecChannel(g, "syndrome-only", n, kraus, labels)


@dataclass
class OptimalPecData:
    """Intermediate objects of the optimal construction, in the V frame."""

    code: PhaseCode
    psi_ini: Ket
    psi_ideal: Ket
    t_unitary: np.ndarray
    w_unitary: np.ndarray
    overlap: float


def optimal_pec_construction(cq: CqState, g: BitMatrix,
                             code: PhaseCode | None = None) -> tuple[PecChannel, OptimalPecData]:
    """Uhlmann-based correction that reaches ``1 - F^2`` failure.

    Layout of the ancilla is ``A1`` (dim of E) then ``A2`` (n qubits). All
    operators are built where ``V`` turns logical Z into ``Z`` on the first
    ``m`` qubits and syndromes into ``X`` on the rest, then conjugated back.
    """
    code = code or build_phase_code(g)
    n, m = g.ncols, g.nrows
    d, de = 1 << n, cq.e_dim
    if d * d * de * de > 2 ** 14:
        raise ValueError("instance exceeds the dimension cap")
    v_frame = cq.relabeled(code.v.table())
    psi_ini = cq_purification(v_frame)
    phi = purify_vector(cq.rho_e())
    amps = np.zeros((d, de * de, d), dtype=np.complex128)
    for a in range(d):
        amps[a, :, a] = phi / np.sqrt(d)
    psi_ideal = Ket(psi_ini.layout, amps.reshape(-1))

    s_mask = (1 << (n - m)) - 1
    n_ss = _cnot_pair(d, s_mask, control_second=True)
    n_aa2 = _cnot_pair(d, d - 1, control_second=False)
    ini_c = psi_ini.apply(n_ss, ["A", "A2"])
    ideal_c = psi_ideal.apply(n_ss, ["A", "A2"])
    t_op, ov = uhlmann_unitary(ini_c, ideal_c, ["A1", "A2"])
    t_mat = t_op.matrix

    dims = [d, de, d]
    w = (embed_operator(n_aa2, dims, [0, 2]) @ embed_operator(n_ss, dims, [0, 2])
         @ embed_operator(t_mat, dims, [1, 2]) @ embed_operator(n_ss, dims, [0, 2]))

    vmat = permutation_matrix_gf2(code.v)
    u_v = np.kron(np.kron(vmat, np.eye(de)), vmat)
    k_dim = 1 << m
    kraus, labels = [], []
    for s in range(1 << (n - m)):
        for e in range(d):
            s_vec = phase_vector(int_to_bits(s ^ (e & s_mask), n - m))
            proj_s = np.kron(np.eye(k_dim), np.outer(s_vec, s_vec.conj()))
            e_vec = phase_vector(int_to_bits(e, n))
            proj = np.kron(np.kron(proj_s, np.eye(de)), np.outer(e_vec, e_vec.conj()))
            kraus.append(u_v.conj().T @ proj @ w @ u_v)
            labels.append((s, e))
    chan = PecChannel(g, "optimal", n, kraus, labels, (de, d), ov, u_v.conj().T @ w @ u_v)
    data = OptimalPecData(code, psi_ini, psi_ideal, t_mat, w, ov)
    return chan, data


def optimal_pec_channel(source, g: BitMatrix) -> PecChannel:
    cq = source.initial if isinstance(source, PaInstance) else source
    return optimal_pec_construction(cq, g)[0]


def make_pec_channel(cq: CqState, g: BitMatrix, strategy: str) -> PecChannel:
    if strategy == "optimal":
        return optimal_pec_construction(cq, g)[0]
    if strategy == "trivial":
        return trivial_pec_channel(g)
    if strategy == "syndrome-only":
        return syndrome_only_pec_channel(g)
    raise ValueError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# virtual scheme


@dataclass
class PecResult:
    """Output of phase error correction for one ``g``.

    ``rho_ae`` is the corrected state on ``A E`` with the ancilla traced out.
    """

    g: BitMatrix
    rho_ae: np.ndarray
    rho_ke: np.ndarray
    phase_error: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho_ae).real)


@dataclass
class PecOutcome:
    per_g: dict[BitMatrix, PecResult]
    weights: dict[BitMatrix, float]

    def average_phase_error(self) -> float:
        return sum(self.weights[g] * r.phase_error for g, r in self.per_g.items())

    def total_trace(self) -> float:
        return sum(self.weights[g] * r.trace for g, r in self.per_g.items())


def readout_key(rho_ae: np.ndarray, g: BitMatrix, de: int) -> np.ndarray:
    """Measure ``Z^{g_i}`` on A and trace A, leaving ``rho_KE``."""
    d = 1 << g.ncols
    t = rho_ae.reshape(d, de, d, de)
    diag = np.stack([t[a, :, a, :] for a in range(d)])
    return blocks_to_matrix(_hash_raw(diag, g))


def _hash_raw(blocks: np.ndarray, g: BitMatrix) -> np.ndarray:
    out = np.zeros((1 << g.nrows,) + blocks.shape[1:], dtype=np.complex128)
    np.add.at(out, g.table(), blocks)
    return out


def phase_error_of(rho_a: np.ndarray) -> float:
    n = int(np.log2(rho_a.shape[0]))
    v = phase_vector(np.zeros(n, dtype=np.uint8))
    return max(0.0, float(np.trace(rho_a).real - np.vdot(v, rho_a @ v).real))


def apply_pec(chan: PecChannel, psi: Ket, a: str, e_names: Sequence[str],
              anc: Sequence[str] = ()) -> PecResult:
    """Run ``chan`` on a pure state and keep ``A E``."""
    targets = [psi.layout.index(a)] + psi.layout.indices(anc)
    keep = [psi.layout.index(a)] + psi.layout.indices(e_names)
    if chan.anc_dims and tuple(psi.layout.dims[t] for t in targets[1:]) != chan.anc_dims:
        raise ValueError("ancilla layout does not match the channel")
    dims = psi.layout.dims
    rho = None
    for vec in chan.branches(psi.amplitudes, dims, targets):
        part = ptrace_vector(vec, dims, keep)
        rho = part if rho is None else rho + part
    de = rho.shape[0] >> chan.n
    rho_a = rho.reshape(1 << chan.n, de, 1 << chan.n, de).trace(axis1=1, axis2=3)
    return PecResult(chan.g, rho, readout_key(rho, chan.g, de), phase_error_of(rho_a))


def virtual_pa(source, g: BitMatrix, chan: PecChannel | None = None) -> PecResult:
    """Virtual scheme on the canonical purification of the input."""
    cq = source.initial if isinstance(source, PaInstance) else source
    chan = chan or optimal_pec_channel(cq, g)
    psi = cq_purification(cq)
    anc = ["A1", "A2"] if chan.anc_dims else []
    return apply_pec(chan, psi, "A", ["E"], anc)


def virtual_pa_all(inst: PaInstance, strategy: str = "optimal") -> PecOutcome:
    per_g, weights = {}, {}
    for g, p in inst.family:
        per_g[g] = virtual_pa(inst, g, make_pec_channel(inst.initial, g, strategy))
        weights[g] = float(p)
    return PecOutcome(per_g, weights)


def to_canonical(phi: Ket, cq: CqState, a: str, e_names: Sequence[str],
                 tol: float = 1e-9) -> tuple[Ket, float]:
    """Map a purification of ``cq`` onto the canonical one by an isometry on
    its ancilla. Returns the mapped ket and the residual norm."""
    anc = [x for x in phi.layout.names if x != a and x not in e_names]
    phi = phi.reorder([a] + list(e_names) + anc)
    canon = cq_purification(cq)
    if len(e_names) != 1:
        raise ValueError("exactly one E register is supported")
    canon = Ket(SystemLayout.of((a, canon.layout.dims[0]), (e_names[0], canon.layout.dims[1]),
                                ("A1", canon.layout.dims[2]), ("A2", canon.layout.dims[3])),
                canon.amplitudes)
    j, _ = uhlmann_isometry(phi, canon, anc, ["A1", "A2"])
    d_sys = phi.layout.dims[0] * phi.layout.dims[1]
    mapped = (phi.amplitudes.reshape(d_sys, -1) @ j.T).reshape(-1)
    residual = float(np.linalg.norm(mapped - canon.amplitudes))
    if residual > tol:
        raise ValueError(f"ket is not a purification of the cq state (residual {residual:.2e})")
    return Ket(canon.layout, mapped), residual


def virtual_pa_twirled(phi: Ket, cq: CqState, g: BitMatrix, a: str = "A",
                       e_names: Sequence[str] = ("E",), strategy: str = "optimal",
                       tol: float = 1e-9) -> PecResult:
    """Twirl a semi-purification, then run the virtual scheme on it."""
    ok, residual = is_semi_purification(phi, cq, a, e_names, tol)
    if not ok:
        raise ValueError(f"input is not a semi-purification (residual {residual:.2e})")
    tw = twirl(phi, a, a + "_tw")
    chan = make_pec_channel(cq, g, strategy)
    if chan.anc_dims:
        canon, _ = to_canonical(tw, cq, a, e_names)
        return apply_pec(chan, canon, a, e_names, ["A1", "A2"])
    return apply_pec(chan, tw, a, e_names)


# ---------------------------------------------------------------------------
# verification suites


def _norm_fidelity_sq(rho: np.ndarray, sigma: np.ndarray) -> float:
    tr, ts = np.trace(rho).real, np.trace(sigma).real
    if tr <= 0 or ts <= 0:
        return 0.0
    return fidelity(rho / tr, sigma / ts) ** 2


def check_universal2(family: LinearHashFamily) -> checks.Check:
    coll = collision_probability(family)
    return checks.leq("collision_probability", "universal2", float(coll), 2.0 ** -family.m, 0.0,
                      exact=str(coll))


def check_virtuality(inst: PaInstance, strategy: str, tol: float = 1e-9) -> checks.Check:
    worst = 0.0
    total = 0.0
    for g, p in inst.family:
        res = virtual_pa(inst, g, make_pec_channel(inst.initial, g, strategy))
        dist = l1_distance(res.rho_ke, actual_pa(inst, g))
        worst = max(worst, dist)
        total += float(p) * dist
    return checks.leq(f"virtuality[{strategy}]", "Lemma 2", total, 0.0, tol, worst_g=worst)


@dataclass
class PhaseErrorBoundResult:
    checks: list
    hmin: object
    avg_phase_error: float
    outcome: PecOutcome


def verify_phase_error_bound(inst: PaInstance, tol: float = 1e-9, entropy_tol: float = 1e-4,
                    hmin=None) -> PhaseErrorBoundResult:
    """Per-``g`` failure against fidelity, the averaged fidelity chain and
    the coding bound on the average phase error."""
    cq = inst.initial
    n, m, de = inst.n, inst.m, cq.e_dim
    rho = cq.to_matrix()
    t = cq.trace
    hmin = hmin or hmin_interval(rho, 1 << n, de, entropy_tol)
    outcome = virtual_pa_all(inst, "optimal")
    out = [check_universal2(inst.family)]
    rho_e = cq.rho_e()
    ideal = ideal_key_state(rho_e, m)
    fidelity_avg = 0.0
    for g, p in inst.family:
        res = outcome.per_g[g]
        fin = actual_pa(inst, g)
        f2 = _norm_fidelity_sq(ideal, fin)
        out.append(checks.leq(f"pec_failure_vs_fidelity[{g.to_text()}]", "Lemma 12",
                              res.phase_error, t * (1 - f2), tol))
        fidelity_avg += float(p) * (1 - f2)
    rho_hat = rho / t
    h2 = sandwiched_h2_down(rho_hat, 1 << n, de)
    h_lo, h_hi = hmin.lower + math.log2(t), hmin.upper + math.log2(t)
    out.append(checks.leq("fidelity_average_vs_collision_entropy", "Lemma 13",
                          fidelity_avg, 2.0 ** (m - h2), tol, h2=h2))
    # pass needs the whole bracket below h2; a violation needs all of it above
    verdict = (checks.PASS if h_hi <= h2 + entropy_tol else
               checks.FAIL if h_lo > h2 + entropy_tol else checks.INCONCLUSIVE)
    out.append(checks.Check("min_entropy_below_collision_entropy", "Lemma 13", h_hi, h2,
                            verdict, None, {"h_lower": h_lo, "h_upper": h_hi}))
    avg = outcome.average_phase_error()
    out.append(checks.leq_entropy("average_phase_error", "Theorem 1", avg,
                                  lambda h: 2.0 ** (m - h), hmin.lower, hmin.upper, tol))
    return PhaseErrorBoundResult(out, hmin, avg, outcome)


def check_zero_leakage(outcome: PecOutcome, tol: float = 1e-9) -> checks.Check:
    worst = max(r.phase_error for r in outcome.per_g.values())
    return checks.leq("phase_error_without_leakage", "Lemma 12", worst, 0.0, tol)


def verify_lhl_like(inst: PaInstance, tol: float = 1e-9, entropy_tol: float = 1e-4,
                    hmin=None, outcome: PecOutcome | None = None) -> list:
    """Compare measured ``d1`` with both the PEC and the hashing bounds."""
    n, m, de = inst.n, inst.m, inst.initial.e_dim
    hmin = hmin or hmin_interval(inst.initial.to_matrix(), 1 << n, de, entropy_tol)
    outcome = outcome or virtual_pa_all(inst, "optimal")
    ens = actual_pa_ensemble(inst)
    d1 = d1_key(ens, m)
    avg = outcome.average_phase_error()
    out = [checks.leq("d1_vs_phase_error", "Corollary 1", d1, 2 * math.sqrt(2) * math.sqrt(avg), tol)]
    rho_e = inst.initial.rho_e()
    ideal = ideal_key_state(rho_e, m)
    for g, p in inst.family:
        d1_g = l1_distance(actual_pa(inst, g), ideal)
        out.append(checks.leq(f"d1_vs_phase_error[{g.to_text()}]", "Lemma 14", d1_g,
                              2 * math.sqrt(2) * math.sqrt(outcome.per_g[g].phase_error), tol))
    lhl = lambda h: 2.0 ** ((m - h) / 2)
    pec = lambda h: 2.0 ** ((m - h + 3) / 2)
    out.append(checks.leq_entropy("d1_vs_leftover_hash", "Lemma 1", d1, lhl,
                                  hmin.lower, hmin.upper, 1e-6))
    out.append(checks.leq_entropy("d1_vs_coding_bound", "Corollary 1", d1, pec,
                                  hmin.lower, hmin.upper, tol))
    for h in (hmin.lower, hmin.upper):
        ratio = pec(h) / lhl(h)
        out.append(checks.leq("coding_bound_over_hash_bound", "Corollary 1",
                              abs(ratio - 2 * math.sqrt(2)), 0.0, 1e-12, ratio=ratio))
    return out


def clamp_candidate(cq: CqState, drop: Sequence[int]) -> CqState:
    """Copy of ``cq`` with the listed blocks set to zero."""
    blocks = cq.blocks.copy()
    blocks[list(drop)] = 0
    return CqState(cq.n, blocks)


def verify_smoothed_bound(inst: PaInstance, candidates: Sequence[CqState], eps: float,
                      tol: float = 1e-9, entropy_tol: float = 1e-4) -> list:
    """Smoothed hashing bound with candidate states inside the eps ball."""
    n, m, de = inst.n, inst.m, inst.initial.e_dim
    rho = inst.initial.to_matrix()
    best = None
    for i, cand in enumerate(candidates):
        c = cand.to_matrix()
        pd = purified_distance(rho, c)
        if pd > eps + 1e-12:
            raise ValueError(f"candidate {i} outside the smoothing ball")
        iv = hmin_interval(c, 1 << n, de, entropy_tol)
        if best is None or iv.lower > best[1].lower:
            best = (i, iv, l1_distance(rho, c), pd)
    idx, iv, l1, pd = best
    d1 = d1_key(actual_pa_ensemble(inst), m)
    stated = lambda h: 2 * eps + 2.0 ** ((m - h + 3) / 2)
    sound = lambda h: 2 * l1 + 2.0 ** ((m - h + 3) / 2)
    return [
        checks.leq_entropy("d1_vs_smoothed_coding_bound", "Corollary 2", d1, stated,
                           iv.lower, iv.upper, tol, candidate=idx, purified_distance=pd, l1=l1),
        checks.leq_entropy("d1_vs_smoothed_coding_bound_l1", "Corollary 2", d1, sound,
                           iv.lower, iv.upper, tol, candidate=idx),
    ]


def check_linear_scaling(inst: PaInstance, c: float, tol: float = 1e-9) -> checks.Check:
    """Average phase error and trace both scale by ``c``."""
    base = virtual_pa_all(inst, "optimal").average_phase_error()
    scaled = virtual_pa_all(inst.scaled(c), "optimal").average_phase_error()
    return checks.leq("phase_error_linear_scaling", "Theorem 1", abs(scaled - c * base), 0.0, tol)


# ---------------------------------------------------------------------------
# instance generation


def random_density(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    r = g @ g.conj().T
    return r / np.trace(r).real


def random_cq_state(rng: np.random.Generator, n: int, de: int, leakage: float | None = None,
                    trace: float = 1.0) -> CqState:
    """Random cq state; ``leakage`` in [0, 1] interpolates from a shared
    E state to independent random E states."""
    d = 1 << n
    p = rng.dirichlet(np.full(d, 1.5))
    lam = rng.uniform() if leakage is None else leakage
    base = random_density(rng, de)
    blocks = np.stack([p[a] * ((1 - lam) * base + lam * random_density(rng, de))
                       for a in range(d)])
    return CqState(n, trace * blocks)


def zero_leakage_cq_state(rng: np.random.Generator, n: int, de: int,
                          trace: float = 1.0) -> CqState:
    """Uniform ``a`` independent of E: every block is the same."""
    d = 1 << n
    base = random_density(rng, de)
    return CqState(n, np.stack([trace * base / d] * d))


def default_family(n: int, m: int) -> LinearHashFamily:
    """Rank-filtered Toeplitz when it stays universal2, else all full-rank."""
    fam = toeplitz_family(n, m, full_rank_only=True)
    return fam if is_universal2(fam) else full_rank_family(n, m)


def random_pa_instance(rng: np.random.Generator, n: int, m: int, de: int,
                       leakage: float | None = None, family: LinearHashFamily | None = None
                       ) -> PaInstance:
    return PaInstance(n, m, random_cq_state(rng, n, de, leakage), family or default_family(n, m))
