"""Dense complex linear algebra on multipartite tensor-product spaces.

Parties are numbered from 1 (Alice) to n; party 1 is the leftmost,
most significant tensor factor, so the global basis index of
``|k_1 k_2 ... k_n>`` is ``sum_i k_i * prod_{j>i} d_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, LayoutError, TransformError
from .tolerances import TOL_HERM, TOL_PROB, TOL_PSD

__all__ = [
    "PartyLayout",
    "GlobalState",
    "LocalOperator",
    "DensityReport",
    "as_matrix",
    "kron",
    "partial_trace",
    "lift_local",
    "conjugate",
    "hermitian_eig",
    "hermitize",
    "psd_sqrt",
    "validate_density",
    "require_density",
    "projector",
]


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a 2-D complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise LayoutError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PartyLayout:
    """Ordered per-party dimensions ``d_1..d_n``."""

    dims: tuple[int, ...]

    def __init__(self, dims: Iterable[int]):
        dims = tuple(int(d) for d in dims)
        if not dims:
            raise LayoutError("a layout needs at least one party")
        if any(d < 1 for d in dims):
            raise LayoutError(f"party dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return prod(self.dims)

    def dim(self, party: int) -> int:
        self.check_party(party)
        return self.dims[party - 1]

    def check_party(self, party: int) -> None:
        if not 1 <= party <= self.n:
            raise LayoutError(f"party {party} out of range 1..{self.n}")

    def parties(self) -> range:
        return range(1, self.n + 1)

    def __iter__(self):
        return iter(self.dims)

    def __len__(self):
        return self.n


def _layout(layout) -> PartyLayout:
    return layout if isinstance(layout, PartyLayout) else PartyLayout(layout)


@dataclass(frozen=True, eq=False)
class GlobalState:
    """Density matrix over a :class:`PartyLayout`.

    Only shapes are checked on construction; use :func:`validate_density` or
    :func:`require_density` for the physical invariants.
    """

    layout: PartyLayout
    rho: np.ndarray

    def __post_init__(self):
        layout = _layout(self.layout)
        rho = as_matrix(self.rho)
        side = layout.total
        if rho.shape != (side, side):
            raise LayoutError(
                f"density matrix shape {rho.shape} does not match layout {layout.dims}"
            )
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "rho", _frozen(rho))

    @classmethod
    def from_vector(cls, layout, psi) -> "GlobalState":
        """Projector onto ``psi``; the vector must already be normalized."""
        return cls(layout, projector(psi))

    def local(self, party: int) -> np.ndarray:
        """Local state of ``party`` (trace over every other factor)."""
        return partial_trace(self.rho, self.layout, party)

    def allclose(self, other: "GlobalState", atol: float = 1e-10) -> bool:
        return self.layout == other.layout and np.allclose(self.rho, other.rho, atol=atol, rtol=0)


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """An operator acting on a single party's factor."""

    party: int
    op: np.ndarray

    def __post_init__(self):
        op = as_matrix(self.op)
        if op.shape[0] != op.shape[1]:
            raise LayoutError(f"local operator must be square, got {op.shape}")
        object.__setattr__(self, "op", _frozen(op))


def projector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return np.outer(v, v.conj())


def kron(a, b) -> np.ndarray:
    """Kronecker product ``a ⊗ b``."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, layout, keep: int | Sequence[int]) -> np.ndarray:
    """Trace out every party not listed in ``keep``.

    Args:
        m: square operator on the full space.
        layout: party dimensions.
        keep: a party index, or several (returned in increasing party order).

    Returns:
        The reduced operator on the kept factors.
    """
    layout = _layout(layout)
    m = as_matrix(m)
    side = layout.total
    if m.shape != (side, side):
        raise LayoutError(f"operator shape {m.shape} does not match layout {layout.dims}")
    kept = sorted({keep} if isinstance(keep, (int, np.integer)) else set(keep))
    for p in kept:
        layout.check_party(p)
    n = layout.n
    t = m.reshape(layout.dims + layout.dims)
    # einsum letters: row index a_i, column index b_i; traced factors share a letter
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise LayoutError("too many parties for partial_trace")
    rows = list(letters[:n])
    cols = [letters[n + i] if (i + 1) in kept else rows[i] for i in range(n)]
    out = [rows[p - 1] for p in kept] + [cols[p - 1] for p in kept]
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), t)
    d = prod(layout.dims[p - 1] for p in kept)
    return reduced.reshape(d, d)


def lift_local(f: LocalOperator, layout) -> np.ndarray:
    """Embed ``f.op`` as ``id ⊗ ... ⊗ f.op ⊗ ... ⊗ id`` at ``f.party``."""
    layout = _layout(layout)
    d = layout.dim(f.party)
    if f.op.shape != (d, d):
        raise LayoutError(
            f"operator of shape {f.op.shape} cannot act on party {f.party} of dimension {d}"
        )
    left = prod(layout.dims[: f.party - 1])
    right = prod(layout.dims[f.party:])
    return np.kron(np.kron(np.eye(left), f.op), np.eye(right))


def conjugate(state: GlobalState, u, tol_prob: float = TOL_PROB) -> GlobalState:
    """Return ``u rho u^† / Tr(u rho u^†)``.

    Raises:
        TransformError: if the trace is not above ``tol_prob``.
    """
    u = as_matrix(u)
    side = state.layout.total
    if u.shape != (side, side):
        raise LayoutError(f"operator shape {u.shape} does not match layout {state.layout.dims}")
    out = u @ state.rho @ u.conj().T
    tr = np.trace(out).real
    if tr <= tol_prob:
        raise TransformError(f"state cannot be transformed: Tr(f rho f^*) = {tr:.3e}")
    return GlobalState(state.layout, out / tr)


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def hermitize(m, tol_herm: float = TOL_HERM) -> np.ndarray:
    """Symmetrize ``m`` to ``(m + m^†)/2``, rejecting matrices far from Hermitian."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {m.shape}")
    defect = hermiticity_defect(m)
    if defect > tol_herm:
        raise ContractError(f"matrix is not Hermitian (defect {defect:.3e} > {tol_herm:.1e})")
    return (m + m.conj().T) / 2


def hermitian_eig(m, tol_herm: float = TOL_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns:
        ``(w, v)`` with real eigenvalues ``w`` and orthonormal eigenvectors as
        the columns of ``v``; no ordering is promised.
    """
    w, v = np.linalg.eigh(hermitize(m, tol_herm))
    return w, v


def psd_sqrt(m, tol_psd: float = TOL_PSD, tol_herm: float = TOL_HERM) -> np.ndarray:
    """Hermitian PSD square root; eigenvalues in ``[-tol_psd, 0]`` are clamped."""
    w, v = hermitian_eig(m, tol_herm)
    if w.min() < -tol_psd:
        raise ContractError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


@dataclass(frozen=True)
class DensityReport:
    hermiticity_defect: float
    min_eigenvalue: float
    trace_defect: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.hermiticity_defect <= self.tol
            and self.min_eigenvalue >= -self.tol
            and self.trace_defect <= self.tol
        )

    def __bool__(self):
        return self.passed


def validate_density(state, tol: float = 1e-9) -> DensityReport:
    """Report how far ``state`` is from being a density matrix."""
    rho = state.rho if isinstance(state, GlobalState) else as_matrix(state)
    herm = hermiticity_defect(rho)
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    tr = np.trace(rho)
    trace_defect = float(abs(tr - 1.0))
    return DensityReport(herm, float(w.min()), trace_defect, tol)


def require_density(state: GlobalState, tol: float = 1e-9) -> GlobalState:
    report = validate_density(state, tol)
    if not report.passed:
        raise ContractError(f"not a valid density matrix: {report}")
    return state


def reconstruction_error(m, w, v) -> float:
    """Max-entry error of ``v diag(w) v^†`` against ``m``."""
    return float(np.max(np.abs((v * w) @ v.conj().T - as_matrix(m))))
