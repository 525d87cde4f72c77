"""Spectra, majorization preorders, and Fan's extremal principle.

Spectra are stored sorted in decreasing order. Comparisons pad the shorter
operand with zeros on the right; the stored values are never padded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, LayoutError
from .tensor_core import as_matrix, hermitian_eig
from .tolerances import TOL_HERM, TOL_MAJOR, TOL_PSD, TOL_TRACE

__all__ = [
    "Spectrum",
    "WeightedSpectra",
    "spectrum_of",
    "majorizes",
    "c_majorizes",
    "prefix_margins",
    "mix_spectra",
    "add_spectra",
    "fan_weight",
    "check_subadditivity",
    "check_conjugate_spectra",
]


@dataclass(frozen=True)
class Spectrum:
    """Decreasing eigenvalue list.

    State spectra (``state=True``) have tiny negatives clamped to zero and must
    sum to one; spectra of general Hermitian operators are kept verbatim.
    """

    values: tuple[float, ...]
    state: bool = True

    def __init__(
        self,
        values: Iterable[float],
        state: bool = True,
        tol_psd: float = TOL_PSD,
        tol_trace: float = TOL_TRACE,
    ):
        vals = np.asarray(list(values), dtype=float).reshape(-1)
        if state:
            if vals.size and vals.min() < -tol_psd:
                raise ContractError(f"state spectrum has negative value {vals.min():.3e}")
            vals = np.clip(vals, 0.0, None)
            if abs(vals.sum() - 1.0) > tol_trace:
                raise ContractError(f"state spectrum sums to {vals.sum():.12g}, not 1")
        # stable sort on the negated values keeps ties in input order
        vals = vals[np.argsort(-vals, kind="stable")]
        object.__setattr__(self, "values", tuple(float(v) for v in vals))
        object.__setattr__(self, "state", bool(state))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def padded(self, n: int) -> np.ndarray:
        out = np.zeros(max(n, len(self.values)))
        out[: len(self.values)] = self.values
        return out

    def prefix_sums(self, n: int | None = None) -> np.ndarray:
        return np.cumsum(self.padded(n or len(self.values)))

    def to_list(self) -> list[float]:
        return list(self.values)


@dataclass(frozen=True)
class WeightedSpectra:
    """Probability-weighted family of spectra."""

    pairs: tuple[tuple[float, Spectrum], ...]

    def __init__(self, pairs: Iterable[tuple[float, Spectrum]], tol_trace: float = TOL_TRACE):
        pairs = tuple((float(p), s) for p, s in pairs)
        if not pairs:
            raise ContractError("empty mixture")
        probs = np.array([p for p, _ in pairs])
        if probs.min() < 0:
            raise ContractError(f"negative weight {probs.min():.3e}")
        if abs(probs.sum() - 1.0) > tol_trace:
            raise ContractError(f"weights sum to {probs.sum():.12g}, not 1")
        object.__setattr__(self, "pairs", pairs)


def _values(s) -> tuple[float, ...]:
    if isinstance(s, Spectrum):
        return s.values
    return tuple(sorted((float(v) for v in s), reverse=True))


def _common_prefix_sums(a, b) -> tuple[np.ndarray, np.ndarray]:
    av, bv = _values(a), _values(b)
    n = max(len(av), len(bv))
    pa = np.zeros(n)
    pb = np.zeros(n)
    pa[: len(av)] = av
    pb[: len(bv)] = bv
    return np.cumsum(pa), np.cumsum(pb)


def spectrum_of(m, state: bool = True, tol_herm: float = TOL_HERM, tol_psd: float = TOL_PSD) -> Spectrum:
    """Eigenvalues of a Hermitian matrix with multiplicity, decreasing."""
    w, _ = hermitian_eig(m, tol_herm)
    return Spectrum(w, state=state, tol_psd=tol_psd)


def prefix_margins(a, b) -> np.ndarray:
    """Prefix sums of ``a`` minus prefix sums of ``b`` after zero padding."""
    pa, pb = _common_prefix_sums(a, b)
    return pa - pb


def majorizes(a, b, tol: float = TOL_MAJOR) -> bool:
    """``a ⪰ b``: every prefix sum of ``a`` dominates that of ``b``."""
    return bool(np.all(prefix_margins(a, b) >= -tol))


def c_majorizes(a, b, c: float, tol: float = TOL_MAJOR) -> bool:
    """``a ⪰_c b``: every prefix sum of ``a`` is at least that of ``b`` minus ``1 - c``."""
    return bool(np.all(prefix_margins(a, b) >= c - 1.0 - tol))


def add_spectra(a, b) -> Spectrum:
    """Componentwise sum of two sorted, zero-padded spectra (not a state)."""
    av, bv = _values(a), _values(b)
    n = max(len(av), len(bv))
    out = np.zeros(n)
    out[: len(av)] += av
    out[: len(bv)] += bv
    return Spectrum(out, state=False)


def mix_spectra(w: WeightedSpectra | Sequence[tuple[float, Spectrum]]) -> Spectrum:
    """Convex combination ``sum_j p_j Sp_j`` of sorted, zero-padded spectra."""
    if not isinstance(w, WeightedSpectra):
        w = WeightedSpectra(w)
    n = max(len(s) for _, s in w.pairs)
    acc = np.zeros(n)
    for p, s in w.pairs:
        acc += p * s.padded(n)
    state = all(s.state for _, s in w.pairs)
    return Spectrum(acc, state=state)


def fan_weight(a, basis, tol: float = 1e-9) -> float:
    """``sum_i <x_i|A|x_i>`` over a q-basis (orthonormal set of ``q`` vectors).

    Args:
        a: Hermitian matrix.
        basis: sequence of vectors, or a matrix whose columns are the vectors.
    """
    a = as_matrix(a)
    if np.max(np.abs(a - a.conj().T)) > TOL_HERM:
        raise ContractError("fan_weight needs a Hermitian matrix")
    x = np.asarray(basis, dtype=np.complex128)
    if isinstance(basis, np.ndarray) and x.ndim == 2:
        cols = x
    else:
        cols = np.column_stack([np.asarray(v, dtype=np.complex128).reshape(-1) for v in basis])
    if cols.shape[0] != a.shape[0]:
        raise LayoutError(f"basis vectors of length {cols.shape[0]} do not fit a {a.shape} matrix")
    gram = cols.conj().T @ cols
    if np.max(np.abs(gram - np.eye(gram.shape[0]))) > tol:
        raise ContractError("basis vectors are not orthonormal")
    return float(np.real(np.einsum("iq,ij,jq->", cols.conj(), a, cols)))


def check_subadditivity(a, b, tol: float = TOL_MAJOR) -> bool:
    """Whether ``Sp(A) + Sp(B) ⪰ Sp(A + B)`` for Hermitian ``A``, ``B``."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise LayoutError(f"shape mismatch {a.shape} vs {b.shape}")
    sa = spectrum_of(a, state=False)
    sb = spectrum_of(b, state=False)
    sab = spectrum_of(a + b, state=False)
    return majorizes(add_spectra(sa, sb), sab, tol)


def check_conjugate_spectra(f, tol: float = 1e-9) -> bool:
    """Whether ``f^† f`` and ``f f^†`` have elementwise-equal sorted spectra."""
    f = as_matrix(f)
    if f.shape[0] != f.shape[1]:
        raise ContractError(f"expected a square matrix, got {f.shape}")
    s1 = spectrum_of(f.conj().T @ f, state=False)
    s2 = spectrum_of(f @ f.conj().T, state=False)
    return bool(np.max(np.abs(np.subtract(s1.values, s2.values))) <= tol)
