"""Dense state vectors, density matrices and channels on named registers.

Every object carries a :class:`SystemLayout`, an ordered list of
``(name, dim)`` pairs. The first register is the most significant factor of
the flattened index. Qubit registers of ``n`` qubits have dimension
``2**n`` and their basis index is the big-endian packing of the bit string.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .gf2 import BitMatrix, all_bit_strings, bits_to_int

MAX_DIM = 2 ** 14
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-9


@dataclass(frozen=True)
class SystemLayout:
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(n), int(d)) for n, d in self.registers)
        object.__setattr__(self, "registers", regs)
        names = [n for n, _ in regs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names in {names}")
        if any(d < 1 for _, d in regs):
            raise ValueError("register dimensions must be >= 1")
        if self.total > MAX_DIM:
            raise ValueError(f"total dimension {self.total} exceeds {MAX_DIM}")

    @classmethod
    def of(cls, *pairs) -> "SystemLayout":
        return cls(tuple(pairs))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.registers)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.registers else 1

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no register {name!r} in {self.names}") from None

    def indices(self, names: Iterable[str]) -> list[int]:
        return [self.index(n) for n in names]

    def dim(self, name: str) -> int:
        return self.registers[self.index(name)][1]

    def sub(self, names: Iterable[str]) -> "SystemLayout":
        return SystemLayout(tuple((n, self.dim(n)) for n in names))

    def without(self, names: Iterable[str]) -> "SystemLayout":
        drop = set(names)
        return SystemLayout(tuple(r for r in self.registers if r[0] not in drop))

    def concat(self, other: "SystemLayout") -> "SystemLayout":
        return SystemLayout(self.registers + other.registers)

    def to_json(self) -> list:
        return [[n, d] for n, d in self.registers]

    @classmethod
    def from_json(cls, obj) -> "SystemLayout":
        return cls(tuple((n, d) for n, d in obj))


# ---------------------------------------------------------------------------
# raw array kernels


def apply_local(vec: np.ndarray, dims: Sequence[int], op: np.ndarray,
                targets: Sequence[int]) -> tuple[np.ndarray, list[int]]:
    """Apply ``op`` to the ``targets`` factors of a flattened vector.

    ``op`` may be rectangular; its row count must factor as the product of
    ``out_dims`` where the target dims are replaced proportionally, so the
    caller receives the new dims list. A single target may change dimension.
    """
    dims = list(dims)
    targets = list(targets)
    t_dim = int(np.prod([dims[t] for t in targets]))
    if op.shape[1] != t_dim:
        raise ValueError("operator does not match target dimensions")
    psi = vec.reshape(dims)
    rest = [i for i in range(len(dims)) if i not in targets]
    psi = np.transpose(psi, targets + rest).reshape(t_dim, -1)
    out = op @ psi
    new_dims = list(dims)
    if op.shape[0] != t_dim:
        if len(targets) != 1:
            raise ValueError("dimension change needs a single target")
        new_dims[targets[0]] = op.shape[0]
    out = out.reshape([new_dims[t] for t in targets] + [new_dims[r] for r in rest])
    inv = np.argsort(targets + rest)
    return np.transpose(out, inv).reshape(-1), new_dims


def permute_vector(vec: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    return np.transpose(vec.reshape(dims), list(order)).reshape(-1)


def permute_matrix(mat: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    k = len(dims)
    t = mat.reshape(list(dims) * 2)
    perm = list(order) + [k + o for o in order]
    total = int(np.prod(dims))
    return np.transpose(t, perm).reshape(total, total)


def ptrace_matrix(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace keeping ``keep`` in the given order."""
    k = len(dims)
    keep = list(keep)
    t = mat.reshape(list(dims) * 2)
    row = list(range(k))
    col = [i + k if i in keep else i for i in range(k)]
    out = keep + [i + k for i in keep]
    res = np.einsum(t, row + col, out)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(d, d)


def ptrace_vector(vec: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure vector on ``keep``."""
    keep = list(keep)
    rest = [i for i in range(len(dims)) if i not in keep]
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    m = np.transpose(vec.reshape(dims), keep + rest).reshape(d, -1)
    return m @ m.conj().T


def embed_operator(op: np.ndarray, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Full matrix of ``op`` acting on ``targets`` and identity elsewhere."""
    dims = list(dims)
    targets = list(targets)
    rest = [i for i in range(len(dims)) if i not in targets]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    full = np.kron(op, np.eye(d_rest))
    order = targets + rest
    inv = list(np.argsort(order))
    return permute_matrix(full, [dims[i] for i in order], inv)


def pure_matrix(vec: np.ndarray, dims: Sequence[int], anc: Sequence[int]) -> np.ndarray:
    """Reshape a vector as (system x ancilla), system factors first."""
    sys = [i for i in range(len(dims)) if i not in anc]
    ds = int(np.prod([dims[i] for i in sys])) if sys else 1
    return np.transpose(vec.reshape(dims), sys + list(anc)).reshape(ds, -1)


def psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def psd_repair(mat: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Clamp eigenvalues in ``[-tol, 0)`` to zero; fail on larger negativity."""
    herm = (mat + mat.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    if w.size and w.min() < -tol * max(1.0, np.abs(w).max()):
        raise ValueError(f"matrix has eigenvalue {w.min():.3e} below tolerance")
    if w.size and w.min() < 0:
        w = np.clip(w, 0.0, None)
        return (v * w) @ v.conj().T
    return herm


# ---------------------------------------------------------------------------
# typed wrappers


class Ket:
    """Possibly sub-normalized pure state on a layout."""

    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: SystemLayout, amplitudes):
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != layout.total:
            raise ValueError("amplitude count does not match layout")
        if np.vdot(amps, amps).real > 1 + TRACE_TOL:
            raise ValueError("ket norm exceeds 1")
        self.layout = layout
        self.amplitudes = amps

    @classmethod
    def basis(cls, layout: SystemLayout, index: int) -> "Ket":
        amps = np.zeros(layout.total, dtype=np.complex128)
        amps[index] = 1
        return cls(layout, amps)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def apply(self, op, names: Sequence[str]) -> "Ket":
        mat = op.matrix if isinstance(op, Operator) else np.asarray(op)
        idx = self.layout.indices(names)
        vec, dims = apply_local(self.amplitudes, self.layout.dims, mat, idx)
        layout = SystemLayout(tuple((n, d) for n, d in zip(self.layout.names, dims)))
        return Ket(layout, vec)

    def reorder(self, names: Sequence[str]) -> "Ket":
        names = list(names)
        if sorted(names) != sorted(self.layout.names):
            raise ValueError("reorder must list every register once")
        order = self.layout.indices(names)
        return Ket(self.layout.sub(names), permute_vector(self.amplitudes, self.layout.dims, order))

    def reduced(self, keep: Sequence[str]) -> "SubNormalizedState":
        mat = ptrace_vector(self.amplitudes, self.layout.dims, self.layout.indices(keep))
        return SubNormalizedState(self.layout.sub(keep), mat)

    def density(self) -> "SubNormalizedState":
        return SubNormalizedState(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def to_json(self) -> dict:
        return {"kind": "ket", "layout": self.layout.to_json(),
                "data": [[float(z.real), float(z.imag)] for z in self.amplitudes]}


class Operator:
    """Matrix on a layout; ``out_layout`` differs for non-square maps."""

    __slots__ = ("layout", "matrix", "out_layout")

    def __init__(self, layout: SystemLayout, matrix, out_layout: SystemLayout | None = None):
        mat = np.asarray(matrix, dtype=np.complex128)
        out_layout = out_layout or layout
        if mat.shape != (out_layout.total, layout.total):
            raise ValueError("matrix shape does not match layouts")
        self.layout = layout
        self.matrix = mat
        self.out_layout = out_layout

    def __matmul__(self, other: "Operator") -> "Operator":
        return Operator(other.layout, self.matrix @ other.matrix, self.out_layout)

    def dagger(self) -> "Operator":
        return Operator(self.out_layout, self.matrix.conj().T, self.layout)


class SubNormalizedState:
    """Positive semidefinite matrix with trace at most one."""

    __slots__ = ("layout", "matrix")

    def __init__(self, layout: SystemLayout, matrix, check: bool = True):
        mat = np.asarray(matrix, dtype=np.complex128)
        if mat.shape != (layout.total, layout.total):
            raise ValueError("matrix shape does not match layout")
        if check:
            scale = max(1.0, float(np.abs(mat).max(initial=0.0)))
            if np.abs(mat - mat.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
                raise ValueError("state is not Hermitian")
            mat = psd_repair(mat)
            if np.trace(mat).real > 1 + TRACE_TOL:
                raise ValueError("state trace exceeds 1")
        self.layout = layout
        self.matrix = mat

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def reduced(self, keep: Sequence[str]) -> "SubNormalizedState":
        mat = ptrace_matrix(self.matrix, self.layout.dims, self.layout.indices(keep))
        return SubNormalizedState(self.layout.sub(keep), mat, check=False)

    def reorder(self, names: Sequence[str]) -> "SubNormalizedState":
        order = self.layout.indices(names)
        return SubNormalizedState(self.layout.sub(names),
                                  permute_matrix(self.matrix, self.layout.dims, order), check=False)

    def scaled(self, c: float) -> "SubNormalizedState":
        return SubNormalizedState(self.layout, c * self.matrix)

    def to_json(self) -> dict:
        return {"kind": "density", "layout": self.layout.to_json(),
                "data": [[float(z.real), float(z.imag)] for z in self.matrix.reshape(-1)]}


def state_from_json(obj: dict):
    layout = SystemLayout.from_json(obj["layout"])
    data = np.array([complex(re, im) for re, im in obj["data"]], dtype=np.complex128)
    if obj["kind"] == "ket":
        return Ket(layout, data)
    if obj["kind"] == "density":
        return SubNormalizedState(layout, data.reshape(layout.total, layout.total))
    raise ValueError(f"unknown state kind {obj['kind']!r}")


def tensor(a, b):
    """Tensor product of two kets, operators or states."""
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(a.layout.concat(b.layout), np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, SubNormalizedState) and isinstance(b, SubNormalizedState):
        return SubNormalizedState(a.layout.concat(b.layout), np.kron(a.matrix, b.matrix))
    if isinstance(a, Operator) and isinstance(b, Operator):
        return Operator(a.layout.concat(b.layout), np.kron(a.matrix, b.matrix),
                        a.out_layout.concat(b.out_layout))
    raise TypeError("tensor needs two objects of the same kind")


def partial_trace(state, keep: Sequence[str]) -> SubNormalizedState:
    return state.reduced(keep)


# ---------------------------------------------------------------------------
# qubit operators


def num_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def pauli_z_matrix(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.int64)
    signs = 1 - 2 * ((all_bit_strings(z.size).astype(np.int64) @ z) % 2)
    return np.diag(signs.astype(np.complex128))


def pauli_x_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8)
    d = 1 << x.size
    shift = bits_to_int(x)
    mat = np.zeros((d, d), dtype=np.complex128)
    idx = np.arange(d)
    mat[idx ^ shift, idx] = 1
    return mat


def _qubit_layout(reg) -> SystemLayout:
    if isinstance(reg, SystemLayout):
        return reg
    name, dim = reg
    return SystemLayout.of((name, dim))


def pauli_string_z(z, reg) -> Operator:
    layout = _qubit_layout(reg)
    if 1 << len(z) != layout.total:
        raise ValueError("bit string length does not match register")
    return Operator(layout, pauli_z_matrix(z))


def pauli_string_x(x, reg) -> Operator:
    layout = _qubit_layout(reg)
    if 1 << len(x) != layout.total:
        raise ValueError("bit string length does not match register")
    return Operator(layout, pauli_x_matrix(x))


def hadamard_matrix(n: int) -> np.ndarray:
    h = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
    out = np.ones((1, 1), dtype=np.complex128)
    for _ in range(n):
        out = np.kron(out, h)
    return out


def phase_vector(x) -> np.ndarray:
    """Amplitudes of the phase basis state ``|x~> = H^n |x>``."""
    x = np.asarray(x, dtype=np.int64)
    signs = 1 - 2 * ((all_bit_strings(x.size).astype(np.int64) @ x) % 2)
    return signs.astype(np.complex128) / np.sqrt(2.0 ** x.size)


def phase_basis_ket(x, name: str = "A") -> Ket:
    return Ket(SystemLayout.of((name, 1 << len(x))), phase_vector(x))


def cnot_matrix(n: int) -> np.ndarray:
    """Bitwise CNOT on ``n`` control and ``n`` target qubits, control first."""
    d = 1 << n
    idx = np.arange(d)
    c, t = np.meshgrid(idx, idx, indexing="ij")
    src = (c * d + t).reshape(-1)
    dst = (c * d + (t ^ c)).reshape(-1)
    mat = np.zeros((d * d, d * d), dtype=np.complex128)
    mat[dst, src] = 1
    return mat


def cnot_matrix_phase_form(n: int) -> np.ndarray:
    """Same CNOT written as ``sum_x Z^x (x) |x~><x~|``."""
    d = 1 << n
    out = np.zeros((d * d, d * d), dtype=np.complex128)
    for x in all_bit_strings(n):
        v = phase_vector(x)
        out += np.kron(pauli_z_matrix(x), np.outer(v, v.conj()))
    return out


def cnot(control: tuple[str, int], target: tuple[str, int]) -> Operator:
    if control[1] != target[1]:
        raise ValueError("control and target must have equal size")
    layout = SystemLayout.of(control, target)
    return Operator(layout, cnot_matrix(num_qubits(control[1])))


def permutation_matrix_gf2(v: BitMatrix) -> np.ndarray:
    """Unitary with ``V |a> = |v a>``."""
    n = v.ncols
    if v.shape != (n, n):
        raise ValueError("v must be square")
    table = v.table()
    d = 1 << n
    mat = np.zeros((d, d), dtype=np.complex128)
    mat[table, np.arange(d)] = 1
    if not np.array_equal(np.sort(table), np.arange(d)):
        raise ValueError("v is not invertible")
    return mat


def permutation_unitary_from_gf2(v: BitMatrix, reg) -> Operator:
    return Operator(_qubit_layout(reg), permutation_matrix_gf2(v))


# ---------------------------------------------------------------------------
# channels


class KrausChannel:
    """Channel given by Kraus matrices from ``in_layout`` to ``out_layout``."""

    def __init__(self, in_layout: SystemLayout, operators: Sequence[np.ndarray],
                 out_layout: SystemLayout | None = None, trace_preserving: bool = True,
                 tol: float = 1e-9):
        self.in_layout = in_layout
        self.out_layout = out_layout or in_layout
        self.operators = [np.asarray(k, dtype=np.complex128) for k in operators]
        self.trace_preserving = trace_preserving
        for k in self.operators:
            if k.shape != (self.out_layout.total, in_layout.total):
                raise ValueError("Kraus operator shape mismatch")
        gram = self.completeness()
        eye = np.eye(in_layout.total)
        if trace_preserving:
            if np.linalg.norm(gram - eye, 2) > tol:
                raise ValueError("Kraus operators are not complete")
        elif np.linalg.eigvalsh(eye - gram).min() < -tol:
            raise ValueError("Kraus operators increase trace")

    def completeness(self) -> np.ndarray:
        return sum(k.conj().T @ k for k in self.operators)

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.operators)

    def apply(self, state: SubNormalizedState, names: Sequence[str] | None = None) -> SubNormalizedState:
        """Apply to ``names`` of ``state`` (default: the whole state)."""
        if names is None:
            if state.layout.dims != self.in_layout.dims:
                raise ValueError("layout mismatch")
            return SubNormalizedState(self.out_layout, self.apply_matrix(state.matrix))
        if self.out_layout.dims != self.in_layout.dims:
            raise ValueError("embedded application needs a square channel")
        idx = state.layout.indices(names)
        out = sum(embed_operator(k, state.layout.dims, idx) @ state.matrix
                  @ embed_operator(k, state.layout.dims, idx).conj().T
                  for k in self.operators)
        return SubNormalizedState(state.layout, out)


def z_measurement_channel(reg) -> KrausChannel:
    layout = _qubit_layout(reg)
    d = layout.total
    ops = [np.diag(np.eye(d)[a]).astype(np.complex128) for a in range(d)]
    return KrausChannel(layout, ops)


def x_measurement_channel(reg) -> KrausChannel:
    layout = _qubit_layout(reg)
    n = num_qubits(layout.total)
    ops = []
    for x in all_bit_strings(n):
        v = phase_vector(x)
        ops.append(np.outer(v, v.conj()))
    return KrausChannel(layout, ops)


def z_dephase_matrix(rho: np.ndarray, dims: Sequence[int], target: int) -> np.ndarray:
    """Dephase one factor in its computational basis."""
    k = len(dims)
    t = rho.reshape(list(dims) * 2).copy()
    d = dims[target]
    mask = np.eye(d, dtype=bool)
    shape = [1] * (2 * k)
    shape[target] = d
    shape[k + target] = d
    return (t * mask.reshape(shape)).reshape(rho.shape)


# ---------------------------------------------------------------------------
# classical-quantum states and purifications


class CqState:
    """``sum_a |a><a|_A (x) rho_E^a`` for n-bit strings ``a``.

    ``blocks[a]`` is the E-block for the packed string ``a``.
    """

    __slots__ = ("n", "blocks")

    def __init__(self, n: int, blocks):
        blocks = np.asarray(blocks, dtype=np.complex128)
        if blocks.ndim != 3 or blocks.shape[0] != 1 << n or blocks.shape[1] != blocks.shape[2]:
            raise ValueError("blocks must have shape (2**n, dE, dE)")
        fixed = np.empty_like(blocks)
        for a in range(blocks.shape[0]):
            fixed[a] = psd_repair(blocks[a])
        if np.trace(fixed, axis1=1, axis2=2).real.sum() > 1 + TRACE_TOL:
            raise ValueError("cq state trace exceeds 1")
        self.n = n
        self.blocks = fixed

    @property
    def e_dim(self) -> int:
        return self.blocks.shape[1]

    @property
    def trace(self) -> float:
        return float(np.trace(self.blocks, axis1=1, axis2=2).real.sum())

    def block(self, a) -> np.ndarray:
        return self.blocks[a if isinstance(a, (int, np.integer)) else bits_to_int(a)]

    def rho_e(self) -> np.ndarray:
        return self.blocks.sum(axis=0)

    def probabilities(self) -> np.ndarray:
        return np.trace(self.blocks, axis1=1, axis2=2).real

    def layout(self, a_name: str = "A", e_name: str = "E") -> SystemLayout:
        return SystemLayout.of((a_name, 1 << self.n), (e_name, self.e_dim))

    def to_matrix(self) -> np.ndarray:
        d = 1 << self.n
        de = self.e_dim
        out = np.zeros((d * de, d * de), dtype=np.complex128)
        for a in range(d):
            out[a * de:(a + 1) * de, a * de:(a + 1) * de] = self.blocks[a]
        return out

    def to_state(self) -> SubNormalizedState:
        return SubNormalizedState(self.layout(), self.to_matrix())

    def scaled(self, c: float) -> "CqState":
        return CqState(self.n, c * self.blocks)

    def relabeled(self, table: np.ndarray) -> "CqState":
        """Move block ``a`` to ``table[a]`` for a bijective table."""
        out = np.empty_like(self.blocks)
        out[table] = self.blocks
        return CqState(self.n, out)

    @classmethod
    def from_matrix(cls, n: int, mat: np.ndarray, tol: float = 1e-9) -> "CqState":
        d = 1 << n
        de = mat.shape[0] // d
        t = mat.reshape(d, de, d, de)
        off = t.copy()
        off[np.arange(d), :, np.arange(d), :] = 0
        if np.abs(off).max(initial=0.0) > tol:
            raise ValueError("matrix is not classical on A")
        return cls(n, np.stack([t[a, :, a, :] for a in range(d)]))

    def to_json(self) -> dict:
        return {"n": self.n, "e_dim": self.e_dim,
                "blocks": [[[float(z.real), float(z.imag)] for z in b.reshape(-1)]
                           for b in self.blocks]}

    @classmethod
    def from_json(cls, obj: dict) -> "CqState":
        de = int(obj["e_dim"])
        blocks = np.array([[complex(r, i) for r, i in b] for b in obj["blocks"]],
                          dtype=np.complex128).reshape(-1, de, de)
        return cls(int(obj["n"]), blocks)


def purify_vector(rho: np.ndarray) -> np.ndarray:
    """Eigen-purification of ``rho`` on ``E (x) A1`` with ``dim A1 = dim E``."""
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    w, v = w[::-1], v[:, ::-1]  # largest weight on the first ancilla level
    # rounding noise in zero eigenvalues would otherwise grow to ~1e-8 under sqrt
    w = np.where(w > 1e-14 * max(w.max(initial=0.0), 1e-300), w, 0.0)
    return (v * np.sqrt(w)).reshape(-1)


def cq_purification(cq: CqState, names=("A", "E", "A1", "A2")) -> Ket:
    """``sum_a |a>_A |psi^a>_{E A1} |a>_{A2}`` with eigen-purified blocks."""
    d = 1 << cq.n
    de = cq.e_dim
    layout = SystemLayout.of((names[0], d), (names[1], de), (names[2], de), (names[3], d))
    amps = np.zeros((d, de * de, d), dtype=np.complex128)
    for a in range(d):
        amps[a, :, a] = purify_vector(cq.blocks[a])
    return Ket(layout, amps.reshape(-1))


def is_semi_purification(phi: Ket, cq: CqState, a_name: str = "A",
                         e_names: Sequence[str] = ("E",), tol: float = 1e-9) -> tuple[bool, float]:
    """Whether Z-dephasing ``A`` of ``phi`` reproduces ``cq`` on ``A E``.

    Returns the verdict and the L1 residual.
    """
    keep = [a_name] + list(e_names)
    red = phi.reduced(keep)
    deph = z_dephase_matrix(red.matrix, red.layout.dims, 0)
    diff = deph - cq.to_matrix()
    residual = float(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())
    return residual <= tol, residual


def is_purification(phi: Ket, rho: np.ndarray, keep: Sequence[str],
                    tol: float = 1e-9) -> tuple[bool, float]:
    red = phi.reduced(keep).matrix - rho
    residual = float(np.abs(np.linalg.eigvalsh((red + red.conj().T) / 2)).sum())
    return residual <= tol, residual


def twirl(phi: Ket, a_name: str, new_name: str) -> Ket:
    """Append ``new_name`` in ``|0>`` and copy the Z-value of ``a_name`` into it."""
    d = phi.layout.dim(a_name)
    grown = tensor(phi, Ket.basis(SystemLayout.of((new_name, d)), 0))
    return grown.apply(cnot_matrix(num_qubits(d)), [a_name, new_name])


def uhlmann_isometry(psi: Ket, phi: Ket, anc_psi: Sequence[str],
                     anc_phi: Sequence[str]) -> tuple[np.ndarray, float]:
    """Partial isometry ``J`` from ``anc_psi`` to ``anc_phi`` maximizing
    ``|<phi| (I (x) J) |psi>|``.

    Both kets must agree on the remaining registers, in the same order.
    Returns ``J`` and the attained overlap, which equals the fidelity of the
    reductions.
    """
    sys_psi = [n for n in psi.layout.names if n not in anc_psi]
    sys_phi = [n for n in phi.layout.names if n not in anc_phi]
    if psi.layout.sub(sys_psi) != phi.layout.sub(sys_phi):
        raise ValueError("system registers differ")
    m_psi = pure_matrix(psi.amplitudes, psi.layout.dims, psi.layout.indices(anc_psi))
    m_phi = pure_matrix(phi.amplitudes, phi.layout.dims, phi.layout.indices(anc_phi))
    c = m_psi.T @ m_phi.conj()
    p, s, qh = np.linalg.svd(c, full_matrices=False)
    j = qh.conj().T @ p.conj().T
    return j, float(s.sum())


def uhlmann_unitary(psi: Ket, phi: Ket, anc: Sequence[str]) -> tuple[Operator, float]:
    """Unitary on ``anc`` with ``<phi|(I (x) U)|psi>`` equal to the fidelity."""
    if psi.layout != phi.layout:
        raise ValueError("kets must share a layout")
    m_psi = pure_matrix(psi.amplitudes, psi.layout.dims, psi.layout.indices(anc))
    m_phi = pure_matrix(phi.amplitudes, phi.layout.dims, phi.layout.indices(anc))
    c = m_psi.T @ m_phi.conj()
    p, s, qh = np.linalg.svd(c)
    u = qh.conj().T @ p.conj().T
    return Operator(psi.layout.sub(anc), u), float(s.sum())


def overlap(phi: Ket, psi: Ket) -> complex:
    if phi.layout != psi.layout:
        raise ValueError("kets must share a layout")
    return complex(np.vdot(phi.amplitudes, psi.amplitudes))
