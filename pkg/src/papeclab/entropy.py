"""Certified conditional min-entropy brackets and related Renyi quantities.

``hmin_interval`` solves the guessing-probability SDP and its dual with an
off-the-shelf conic solver, then repairs both certificates so that they are
exactly feasible (up to float rounding) and rechecks them. The returned
bracket is valid whatever the solver did.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import cvxpy as cp
import numpy as np

from .hilbert import (Ket, SubNormalizedState, apply_local, hadamard_matrix,
                      num_qubits, ptrace_matrix, ptrace_vector)
from .metrics import fidelity, purified_distance

FEASIBILITY_TOL = 1e-9


@dataclass
class EntropyInterval:
    """``lower <= H_min(A|E) <= upper`` backed by explicit certificates.

    ``primal`` is X on E with ``I (x) X >= rho``; ``dual`` is Y on A E with
    ``Y >= 0`` and ``Tr_A Y = I``.
    """

    lower: float
    upper: float
    primal: np.ndarray
    dual: np.ndarray
    converged: bool
    residuals: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def to_json(self) -> dict:
        def enc(m):
            return [[float(z.real), float(z.imag)] for z in m.reshape(-1)]
        return {"lower": self.lower, "upper": self.upper, "gap": self.gap,
                "converged": self.converged, "residuals": dict(self.residuals),
                "primal": enc(self.primal), "dual": enc(self.dual)}


def _herm(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, SubNormalizedState) else np.asarray(rho, dtype=np.complex128)


def check_certificates(rho: np.ndarray, d_a: int, d_e: int, x: np.ndarray,
                       y: np.ndarray) -> dict:
    """Feasibility residuals of a certificate pair, solver-independent."""
    primal_gap = np.linalg.eigvalsh(_herm(np.kron(np.eye(d_a), x) - rho)).min()
    dual_min = np.linalg.eigvalsh(_herm(y)).min()
    marg = ptrace_matrix(y, [d_a, d_e], [1])
    return {"primal": float(max(0.0, -primal_gap)),
            "dual_psd": float(max(0.0, -dual_min)),
            "dual_marginal": float(np.linalg.norm(marg - np.eye(d_e), 2))}


def _repair_primal(rho: np.ndarray, d_a: int, x: np.ndarray) -> np.ndarray:
    x = _herm(x)
    lam = np.linalg.eigvalsh(_herm(np.kron(np.eye(d_a), x) - rho)).min()
    shift = max(0.0, -lam) + 1e-13 * max(1.0, np.abs(rho).max())
    return x + shift * np.eye(x.shape[0])


def _repair_dual(y: np.ndarray, d_a: int, d_e: int) -> np.ndarray:
    w, v = np.linalg.eigh(_herm(y))
    y = (v * np.clip(w, 0.0, None)) @ v.conj().T
    z = ptrace_matrix(y, [d_a, d_e], [1])
    zw, zv = np.linalg.eigh(_herm(z))
    if zw.min() <= 1e-12:
        y = y + np.kron(np.eye(d_a), np.eye(d_e)) * 1e-9
        z = ptrace_matrix(y, [d_a, d_e], [1])
        zw, zv = np.linalg.eigh(_herm(z))
    inv_sqrt = (zv / np.sqrt(zw)) @ zv.conj().T
    s = np.kron(np.eye(d_a), inv_sqrt)
    return _herm(s @ y @ s)


def _solve_primal(rho: np.ndarray, d_a: int, d_e: int) -> np.ndarray | None:
    x = cp.Variable((d_e, d_e), hermitian=True)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(x))),
                      [cp.kron(np.eye(d_a), x) - rho >> 0])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prob.solve(solver=cp.CLARABEL)
    except cp.SolverError:
        return None
    return None if x.value is None else np.asarray(x.value)


def _solve_dual(rho: np.ndarray, d_a: int, d_e: int) -> np.ndarray | None:
    y = cp.Variable((d_a * d_e, d_a * d_e), hermitian=True)
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(rho @ y))),
                      [y >> 0, cp.partial_trace(y, [d_a, d_e], axis=0) == np.eye(d_e)])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prob.solve(solver=cp.CLARABEL)
    except cp.SolverError:
        return None
    return None if y.value is None else np.asarray(y.value)


def hmin_interval(rho, d_a: int, d_e: int, tol: float = 1e-4) -> EntropyInterval:
    """Certified bracket on ``H_min(A|E)`` of a sub-normalized ``rho_AE``.

    Args:
        rho: matrix on ``A (x) E`` (A first).
        d_a, d_e: register dimensions.
        tol: target bracket width in bits; exceeding it only clears
            ``converged``.
    """
    rho = _herm(_as_matrix(rho))
    if rho.shape != (d_a * d_e, d_a * d_e):
        raise ValueError("dimensions do not match rho")
    if d_a * d_e > 2 ** 10:
        raise ValueError("state too large for the SDP")
    t = float(np.trace(rho).real)
    if t <= 0:
        raise ValueError("state has zero trace")
    scaled = rho / t

    if d_e == 1:
        w, v = np.linalg.eigh(scaled)
        x = np.array([[w[-1]]], dtype=np.complex128)
        y = np.outer(v[:, -1], v[:, -1].conj())
    else:
        x = _solve_primal(scaled, d_a, d_e)
        y = _solve_dual(scaled, d_a, d_e)
        if x is None:
            x = np.linalg.eigvalsh(scaled).max() * np.eye(d_e)
        if y is None:
            y = np.eye(d_a * d_e) / d_a
    x = _repair_primal(scaled, d_a, x)
    y = _repair_dual(y, d_a, d_e)

    x_full = t * x
    lower = -math.log2(float(np.trace(x_full).real))
    guess = float(np.trace(rho @ y).real)
    upper = -math.log2(guess) if guess > 0 else math.inf
    residuals = check_certificates(rho, d_a, d_e, x_full, y)
    if max(residuals.values()) > FEASIBILITY_TOL:
        raise RuntimeError(f"certificate repair failed: {residuals}")
    upper = max(upper, lower)
    return EntropyInterval(lower, upper, x_full, y, upper - lower <= tol, residuals)


def guessing_entropy_classical(p_ae: np.ndarray) -> float:
    """``-log2 sum_e max_a p(a, e)`` for a joint table indexed ``[a, e]``."""
    return -math.log2(float(np.asarray(p_ae).max(axis=0).sum()))


def renyi_half(p) -> float:
    """``2 log2 sum sqrt(p)``; no renormalization for sub-normalized input."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    s = float(np.sqrt(p).sum())
    if s == 0:
        raise ValueError("distribution is zero")
    return 2 * math.log2(s)


def _marginal_e(rho: np.ndarray, d_k: int, d_e: int) -> np.ndarray:
    return ptrace_matrix(rho, [d_k, d_e], [1])


def sandwiched_h_half_down(rho, d_k: int, d_e: int) -> float:
    """``2 log2 || sqrt(I (x) rho_E) sqrt(rho) ||_1``."""
    rho = _as_matrix(rho)
    ref = np.kron(np.eye(d_k), _marginal_e(rho, d_k, d_e))
    return 2 * math.log2(fidelity(ref, rho))


def _pinv_power(mat: np.ndarray, power: float, cutoff: float = 1e-12) -> np.ndarray:
    w, v = np.linalg.eigh(_herm(mat))
    keep = w > cutoff * max(1.0, w.max(initial=0.0))
    wp = np.zeros_like(w)
    wp[keep] = w[keep] ** power
    return (v * wp) @ v.conj().T


def sandwiched_h2_down(rho, d_k: int, d_e: int) -> float:
    """``-log2 Tr[(rho (I (x) rho_E^{-1/2}))^2]`` with a pseudo-inverse."""
    rho = _as_matrix(rho)
    s = np.kron(np.eye(d_k), _pinv_power(_marginal_e(rho, d_k, d_e), -0.5))
    m = rho @ s
    return -math.log2(float(np.trace(m @ m).real))


def hmax_via_duality(psi: Ket, a: Sequence[str], b: Sequence[str], c: Sequence[str],
                     tol: float = 1e-4) -> tuple[float, float]:
    """Bracket on ``H_max(A|B)`` of a pure state via ``-H_min(A|C)``."""
    if set(a) | set(b) | set(c) != set(psi.layout.names):
        raise ValueError("A, B, C must cover the layout")
    keep = list(a) + list(c)
    red = psi.reduced(keep)
    d_a = int(np.prod([psi.layout.dim(n) for n in a]))
    d_c = int(np.prod([psi.layout.dim(n) for n in c])) if c else 1
    iv = hmin_interval(red.matrix, d_a, d_c, tol)
    return -iv.upper, -iv.lower


@dataclass
class SmoothResult:
    value: float
    index: int
    interval: EntropyInterval
    distances: list[float]


def smooth_hmin_lower(rho, d_a: int, d_e: int, candidates: Sequence, eps: float,
                      tol: float = 1e-4) -> SmoothResult:
    """Largest certified lower bound over candidates within ``eps``.

    Distance is the purified distance. Candidates outside the ball raise.
    """
    rho = _as_matrix(rho)
    best = None
    dists = []
    for i, cand in enumerate(candidates):
        c = _as_matrix(cand)
        dist = purified_distance(rho, c)
        dists.append(dist)
        if dist > eps + 1e-12:
            raise ValueError(f"candidate {i} at purified distance {dist:.3e} > {eps}")
        iv = hmin_interval(c, d_a, d_e, tol)
        if best is None or iv.lower > best[1].lower:
            best = (i, iv)
    if best is None:
        raise ValueError("no candidates given")
    return SmoothResult(best[1].lower, best[0], best[1], dists)


def uncertainty_relation(psi: Ket, a: str, abar: Sequence[str], e: Sequence[str],
                         tol: float = 1e-4) -> dict:
    """Certified sides of ``H_min(Z_A|E) + H_max(X_A|Abar) >= n``.

    The X-measured side uses a copy register so the measured state stays
    pure, then applies min/max duality.
    """
    n = num_qubits(psi.layout.dim(a))
    d = 1 << n
    order = [a] + list(abar) + list(e)
    psi = psi.reorder(order)
    dims = list(psi.layout.dims)
    d_abar = int(np.prod([psi.layout.dim(x) for x in abar])) if abar else 1
    d_e = int(np.prod([psi.layout.dim(x) for x in e])) if e else 1

    # Z side: dephased rho_AE
    red = ptrace_vector(psi.amplitudes, [d, d_abar, d_e], [0, 2])
    t = red.reshape(d, d_e, d, d_e)
    cq = np.zeros_like(red).reshape(d, d_e, d, d_e)
    for k in range(d):
        cq[k, :, k, :] = t[k, :, k, :]
    z_iv = hmin_interval(cq.reshape(d * d_e, d * d_e), d, d_e, tol)

    # X side: rotate to the phase basis, then copy the outcome into M
    rotated, _ = apply_local(psi.amplitudes, dims, hadamard_matrix(n), [0])
    branches = rotated.reshape(d, d_abar * d_e)
    pure = np.zeros((d, d_abar, d_e, d), dtype=np.complex128)
    for x in range(d):
        pure[x, :, :, x] = branches[x].reshape(d_abar, d_e)
    # H_max(X|Abar) = -H_min(X | E M)
    m = pure.reshape(d, d_abar, d_e * d)
    rho_x_em = np.einsum("abc,dbe->acde", m, m.conj()).reshape(d * d_e * d, d * d_e * d)
    x_iv = hmin_interval(rho_x_em, d, d_e * d, tol)
    hmax_lo, hmax_hi = -x_iv.upper, -x_iv.lower
    return {"n": n, "hmin_z": (z_iv.lower, z_iv.upper), "hmax_x": (hmax_lo, hmax_hi),
            "certified_sum": z_iv.lower + hmax_lo, "best_sum": z_iv.upper + hmax_hi}
