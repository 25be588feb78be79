"""Distances, fidelities and key-quality functionals.

Functions accept raw numpy matrices or :class:`SubNormalizedState` values.
Key states are ordered as ``K (x) E`` or ``K (x) K' (x) E`` with the key
registers first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gf2 import BitMatrix
from .hilbert import SubNormalizedState, phase_vector, psd_sqrt, ptrace_matrix


def _mat(x) -> np.ndarray:
    return x.matrix if isinstance(x, SubNormalizedState) else np.asarray(x, dtype=np.complex128)


def l1_distance(rho, sigma) -> float:
    """Trace norm of ``rho - sigma`` (no factor one half)."""
    diff = _mat(rho) - _mat(sigma)
    diff = (diff + diff.conj().T) / 2
    return float(np.abs(np.linalg.eigvalsh(diff)).sum())


def fidelity(rho, sigma) -> float:
    """``|| sqrt(rho) sqrt(sigma) ||_1`` without the trace-deficit term."""
    s = np.linalg.svd(psd_sqrt(_mat(rho)) @ psd_sqrt(_mat(sigma)), compute_uv=False)
    return float(s.sum())


def fidelity_generalized(rho, sigma) -> float:
    """Fidelity extended to sub-normalized states by the trace deficits."""
    r, s = _mat(rho), _mat(sigma)
    deficit = max(0.0, 1 - np.trace(r).real) * max(0.0, 1 - np.trace(s).real)
    return min(1.0, fidelity(r, s) + float(np.sqrt(deficit)))


def purified_distance(rho, sigma) -> float:
    f = fidelity_generalized(rho, sigma)
    return float(np.sqrt(max(0.0, 1 - f * f)))


def ideal_key_state(rho_e, m: int) -> np.ndarray:
    """``2^-m I_K (x) rho_E``."""
    d = 1 << m
    return np.kron(np.eye(d) / d, _mat(rho_e))


def ideal_two_key_state(rho_e, m: int) -> np.ndarray:
    """``2^-m sum_k |kk><kk| (x) rho_E``."""
    d = 1 << m
    corr = np.zeros((d * d, d * d))
    for k in range(d):
        corr[k * d + k, k * d + k] = 1.0 / d
    return np.kron(corr, _mat(rho_e))


def _e_marginal(ensemble, key_dim: int) -> np.ndarray:
    e_dim = _mat(ensemble[0][1]).shape[0] // key_dim
    out = np.zeros((e_dim, e_dim), dtype=np.complex128)
    for p, rho in ensemble:
        out += p * ptrace_matrix(_mat(rho), [key_dim, e_dim], [1])
    return out


def d1_key(ensemble: Sequence[tuple[float, object]], m: int) -> float:
    """Average L1 distance of ``rho_KE^g`` from the ideal key state.

    ``ensemble`` lists ``(Pr(G=g), rho_KE^g)``. The ideal state uses the
    E-marginal of the whole ensemble.
    """
    rho_e = _e_marginal(ensemble, 1 << m)
    ideal = ideal_key_state(rho_e, m)
    return float(sum(p * l1_distance(rho, ideal) for p, rho in ensemble))


def D1_security(ensemble: Sequence[tuple[float, object]], m: int) -> float:
    """Same as :func:`d1_key` for ``rho_KK'E`` against the correlated ideal."""
    rho_e = _e_marginal(ensemble, 1 << (2 * m))
    ideal = ideal_two_key_state(rho_e, m)
    return float(sum(p * l1_distance(rho, ideal) for p, rho in ensemble))


def phase_error_probability(rho, dims: Sequence[int] | None = None, target: int = 0,
                            include_deficit: bool = False) -> float:
    """Weight of ``rho`` on the target register outside ``|0~>``.

    The default is ``Tr rho - <0~|rho_A|0~>``, which is linear in ``rho``.
    With ``include_deficit`` the missing trace counts as failure too, which
    gives ``1 - <0~|rho_A|0~>``.
    """
    r = _mat(rho)
    if dims is not None and len(dims) > 1:
        r_a = ptrace_matrix(r, dims, [target])
    else:
        r_a = r
    n = int(np.log2(r_a.shape[0]))
    v = phase_vector(np.zeros(n, dtype=np.uint8))
    good = float(np.vdot(v, r_a @ v).real)
    total = 1.0 if include_deficit else float(np.trace(r).real)
    return max(0.0, total - good)


def correctness_failure(rho_kk, m: int | None = None, tol: float = 1e-9) -> float:
    """``Pr(K != K')`` from a classical ``K (x) K'`` state.

    Passing a state with extra trailing registers is fine if ``m`` is given;
    they are traced out first.
    """
    r = _mat(rho_kk)
    if m is not None:
        d = 1 << m
        rest = r.shape[0] // (d * d)
        if rest > 1:
            r = ptrace_matrix(r, [d, d, rest], [0, 1])
    diag = np.diag(r).real
    off = r - np.diag(np.diag(r))
    if np.abs(off).max(initial=0.0) > tol:
        raise ValueError("key registers are not classical")
    d = int(round(np.sqrt(r.shape[0])))
    k = np.arange(d)
    return float(diag.sum() - diag[k * d + k].sum())


@dataclass
class SecurityReport:
    d1: float
    phase_error: float
    correctness_failure: float = 0.0
    D1: float | None = None
    per_g: dict[BitMatrix, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("d1", "correctness_failure"):
            if not -1e-12 <= getattr(self, name) <= 2 + 1e-9:
                raise ValueError(f"{name} out of range")
        if self.D1 is not None and not -1e-12 <= self.D1 <= 2 + 1e-9:
            raise ValueError("D1 out of range")
        if not -1e-12 <= self.phase_error <= 1 + 1e-9:
            raise ValueError("phase error out of range")

    def to_json(self) -> dict:
        out = {"d1": self.d1, "phase_error": self.phase_error,
               "correctness_failure": self.correctness_failure,
               "per_g": {g.to_text(): dict(v) for g, v in self.per_g.items()}}
        if self.D1 is not None:
            out["D1"] = self.D1
        return out
