"""Three-qubit pure states with prescribed local spectra.

A three-qubit vector ``x = sum x_klm |klm>`` stores ``x_klm`` at global index
``4k + 2l + m``. Given target eigenvalues ``l1 >= l2 >= l3 >= 1/2`` (the larger
eigenvalue of each qubit's local state), this module evaluates the defining
equations, builds the two explicit solution families (``y`` on even-parity
indices, ``z`` on odd-parity indices), solves the product case ``l1 = 1``, and
provides the local-unitary inequivalence witness for two-qubit mixed states.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping

import numpy as np
from scipy.optimize import least_squares

from .engine import MeasurementSet
from .errors import ContractError, InfeasibleError
from .spectra import Spectrum, spectrum_of
from .tensor_core import GlobalState, PartyLayout, partial_trace, projector
from .tolerances import TOL_DEGEN, TOL_RESIDUAL

INDICES = tuple("".join(bits) for bits in product("01", repeat=3))
QUBITS = PartyLayout([2, 2, 2])
# slack on the closed-form domain inequalities
_SLACK = 1e-12


def index_of(klm: str) -> int:
    k, l, m = (int(c) for c in klm)
    return 4 * k + 2 * l + m


def is_odd(klm: str) -> bool:
    return klm.count("1") % 2 == 1


def tilde(i: int, klm):
    """Cyclic relabelling putting qubit ``i``'s bit first.

    ``tilde(1, klm) = klm``, ``tilde(2, klm) = mkl``, ``tilde(3, klm) = lmk``.
    Accepts a 3-character string or a 3-tuple and returns the same kind.
    """
    if i not in (1, 2, 3):
        raise ContractError(f"qubit index must be 1, 2 or 3, got {i}")
    k, l, m = klm
    out = {1: (k, l, m), 2: (m, k, l), 3: (l, m, k)}[i]
    return "".join(out) if isinstance(klm, str) else tuple(out)


@dataclass(frozen=True)
class ThreeQubitSpec:
    lambdas: tuple[float, float, float]
    phases: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        if len(lam) != 3:
            raise ContractError("need exactly three eigenvalues")
        l1, l2, l3 = lam
        if not (1 + _SLACK >= l1 >= l2 - _SLACK and l2 >= l3 - _SLACK and l3 >= 0.5 - _SLACK):
            raise ContractError(f"eigenvalues must satisfy 1 >= l1 >= l2 >= l3 >= 1/2, got {lam}")
        phases = dict(self.phases)
        for key in phases:
            if key not in INDICES:
                raise ContractError(f"unknown phase index {key!r}")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "phases", phases)

    def phase(self, klm: str) -> complex:
        return cmath.exp(1j * self.phases.get(klm, 0.0))


class PureState8:
    """Eight amplitudes of a three-qubit vector, indexed by ``klm``."""

    def __init__(self, amplitudes, check: bool = True):
        a = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if a.shape != (8,):
            raise ContractError(f"expected 8 amplitudes, got {a.shape}")
        if check and abs(np.vdot(a, a).real - 1.0) > TOL_RESIDUAL:
            raise ContractError(f"state is not normalized (norm^2 = {np.vdot(a, a).real:.15g})")
        a.setflags(write=False)
        self.amplitudes = a

    def __getitem__(self, klm: str) -> complex:
        return complex(self.amplitudes[index_of(klm)])

    def as_dict(self) -> dict[str, complex]:
        return {klm: self[klm] for klm in INDICES}

    def global_state(self) -> GlobalState:
        return GlobalState(QUBITS, projector(self.amplitudes))

    def __repr__(self):
        parts = ", ".join(f"{k}: {v:.6g}" for k, v in self.as_dict().items() if abs(v) > 0)
        return f"PureState8({parts})"


def _amplitudes(x) -> np.ndarray:
    return x.amplitudes if isinstance(x, PureState8) else np.asarray(x, dtype=np.complex128).reshape(8)


def residuals(x, spec: ThreeQubitSpec | tuple) -> np.ndarray:
    """Absolute residuals of the seven defining equations.

    Order: norm, the three diagonal conditions ``<0_i|rho_i|0_i> = l_i``, the
    three off-diagonal conditions ``<1_i|rho_i|0_i> = 0``.
    """
    spec = spec if isinstance(spec, ThreeQubitSpec) else ThreeQubitSpec(tuple(spec))
    a = _amplitudes(x)

    def amp(klm):
        return a[index_of(klm)]

    out = [abs(np.vdot(a, a).real - 1.0)]
    pairs = [a + b for a in "01" for b in "01"]
    for i in (1, 2, 3):
        diag = sum(abs(amp(tilde(i, "0" + kl))) ** 2 for kl in pairs)
        out.append(abs(diag - spec.lambdas[i - 1]))
    for i in (1, 2, 3):
        off = sum(amp(tilde(i, "1" + kl)) * np.conj(amp(tilde(i, "0" + kl))) for kl in pairs)
        out.append(abs(off))
    return np.array(out, dtype=float)


def _root(value: float, what: str) -> float:
    if value < -_SLACK:
        raise InfeasibleError(f"negative quantity under square root for {what}: {value:.3e}")
    return np.sqrt(max(value, 0.0))


def _build(spec: ThreeQubitSpec, radicands: Mapping[str, float]) -> PureState8:
    a = np.zeros(8, dtype=np.complex128)
    for klm, r in radicands.items():
        a[index_of(klm)] = spec.phase(klm) * _root(2 * r, klm) / 2
    return PureState8(a)


def construct_y(spec: ThreeQubitSpec) -> PureState8:
    """Even-parity solution, valid when ``l1 + l2 - l3 <= 1``."""
    l1, l2, l3 = spec.lambdas
    if l1 + l2 - l3 > 1 + _SLACK:
        raise InfeasibleError(f"y family needs l1 + l2 - l3 <= 1, got {l1 + l2 - l3:.12g}")
    return _build(
        spec,
        {
            "000": l1 + l2 + l3 - 1,
            "011": l1 - l2 - l3 + 1,
            "101": -l1 + l2 - l3 + 1,
            "110": -l1 - l2 + l3 + 1,
        },
    )


def construct_z(spec: ThreeQubitSpec) -> PureState8:
    """Odd-parity solution, valid when ``l1 + l2 + l3 <= 2``."""
    l1, l2, l3 = spec.lambdas
    if l1 + l2 + l3 > 2 + _SLACK:
        raise InfeasibleError(f"z family needs l1 + l2 + l3 <= 2, got {l1 + l2 + l3:.12g}")
    return _build(
        spec,
        {
            "001": l1 + l2 - l3,
            "010": l1 - l2 + l3,
            "100": -l1 + l2 + l3,
            "111": -l1 - l2 - l3 + 2,
        },
    )


def solve_product_case(spec: ThreeQubitSpec, tol: float = TOL_RESIDUAL) -> PureState8 | None:
    """Solve the equations when qubit 1 is pure (``l1 = 1``).

    A solution exists exactly when ``l2 == l3``; then ``x_000 = sqrt(l2)``,
    ``x_011 = sqrt(1 - l2)``. Returns ``None`` when there is none.
    """
    l1, l2, l3 = spec.lambdas
    if abs(l1 - 1.0) > tol:
        raise ContractError(f"product case needs l1 = 1, got {l1}")
    if abs(l2 - l3) > tol:
        return None
    a = np.zeros(8, dtype=np.complex128)
    a[index_of("000")] = spec.phase("000") * np.sqrt(l2)
    a[index_of("011")] = spec.phase("011") * np.sqrt(max(1.0 - l2, 0.0))
    return PureState8(a)


def local_states(x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three single-qubit reduced states of the projector onto ``x``."""
    p = projector(_amplitudes(x))
    return tuple(partial_trace(p, QUBITS, i) for i in (1, 2, 3))


def local_spectra3(x) -> tuple[Spectrum, Spectrum, Spectrum]:
    return tuple(spectrum_of(r) for r in local_states(x))


def pair_state(x, drop: int = 3) -> np.ndarray:
    """Two-qubit mixed state left after tracing out qubit ``drop``."""
    keep = [i for i in (1, 2, 3) if i != drop]
    return partial_trace(projector(_amplitudes(x)), QUBITS, keep)


def _eigenbasis_desc(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in decreasing order and matching eigenvectors.

    Each eigenvector is rotated so its largest-modulus component is real
    positive.
    """
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    for c in range(v.shape[1]):
        pivot = v[np.argmax(np.abs(v[:, c])), c]
        v[:, c] *= np.conj(pivot) / abs(pivot)
    return w, v


@dataclass(frozen=True)
class Witness:
    verdict: str  # "not_equivalent" or "inconclusive"
    max_difference: float
    index: tuple[int, int]
    sigma_value: float
    tau_value: float
    sigma11: float
    tau11: float
    sigma_in_basis: np.ndarray = field(repr=False)
    tau_in_basis: np.ndarray = field(repr=False)

    @property
    def not_equivalent(self) -> bool:
        return self.verdict == "not_equivalent"


def equivalence_witness(
    sigma,
    tau,
    dims: tuple[int, int] = (2, 2),
    tol: float = 1e-9,
    tol_degen: float = TOL_DEGEN,
) -> Witness:
    """Necessary test for local-unitary equivalence of two bipartite states.

    Both states are rewritten in the product of the (shared) eigenbases of
    their local traces. If local-unitary equivalent, entry moduli must agree;
    any entry differing by more than ``tol`` proves inequivalence. Agreement
    is inconclusive.

    Raises:
        ContractError: when the local traces differ, or a local spectrum is
            degenerate (gap at most ``tol_degen``).
    """
    sigma = np.asarray(sigma, dtype=np.complex128)
    tau = np.asarray(tau, dtype=np.complex128)
    layout = PartyLayout(dims)
    if sigma.shape != (layout.total, layout.total) or tau.shape != sigma.shape:
        raise ContractError(f"states must both be {layout.total}x{layout.total}")
    bases = []
    for party, name in ((1, "Tr_B"), (2, "Tr_A")):
        rs = partial_trace(sigma, layout, party)
        rt = partial_trace(tau, layout, party)
        gap = np.max(np.abs(rs - rt))
        if gap > tol:
            raise ContractError(f"mismatched traces: {name}(sigma) and {name}(tau) differ by {gap:.3e}")
        w, v = _eigenbasis_desc(rs)
        if len(w) > 1 and np.min(-np.diff(w)) <= tol_degen:
            raise ContractError(f"degenerate spectrum of {name}(sigma): {w}")
        bases.append(v)
    u = np.kron(bases[0], bases[1])
    s = u.conj().T @ sigma @ u
    t = u.conj().T @ tau @ u
    diff = np.abs(np.abs(s) - np.abs(t))
    i, j = np.unravel_index(np.argmax(diff), diff.shape)
    verdict = "not_equivalent" if diff[i, j] > tol else "inconclusive"
    return Witness(
        verdict,
        float(diff[i, j]),
        (int(i) + 1, int(j) + 1),
        float(abs(s[i, j])),
        float(abs(t[i, j])),
        float(s[0, 0].real),
        float(t[0, 0].real),
        s,
        t,
    )


# --- the measurement scenario in which one outcome makes a remote qubit more mixed


@dataclass(frozen=True)
class AppendixBRecord:
    """Closed-form values for the scenario, for cross-checking the engine."""

    p: float
    bob_pre_matrix: np.ndarray
    bob_pre_spectrum: tuple[float, float]
    branch_probabilities: tuple[float, float]
    branch1_vector: np.ndarray
    branch1_bob_matrix: np.ndarray
    branch1_spectrum: tuple[float, float]
    expected_spectrum: tuple[float, float]
    single_branch_violation: bool


@dataclass(frozen=True, eq=False)
class AppendixB:
    state: GlobalState
    measurement: MeasurementSet
    record: AppendixBRecord


APPENDIX_B_LAYOUT = PartyLayout([4, 2])


def appendix_b_vector(p: float) -> np.ndarray:
    """Amplitudes over ``|klm>``, with Alice holding qubits k, l and Bob qubit m."""
    a = np.zeros(8)
    a[index_of("000")] = a[index_of("001")] = a[index_of("111")] = np.sqrt(p / 3)
    a[index_of("010")] = a[index_of("100")] = np.sqrt((1 - p) / 2)
    return a.astype(np.complex128)


def appendix_b_measurement() -> MeasurementSet:
    """Alice projects onto span(|00>, |11>) or span(|01>, |10>)."""
    even = np.diag([1.0, 0.0, 0.0, 1.0])
    odd = np.diag([0.0, 1.0, 1.0, 0.0])
    return MeasurementSet(1, (even, odd))


def appendix_b_scenario(p: float) -> AppendixB:
    """State, measurement and closed-form record for ``0 <= p < 1``."""
    if not 0.0 <= p < 1.0:
        raise ContractError(f"p must satisfy 0 <= p < 1, got {p}")
    state = GlobalState(APPENDIX_B_LAYOUT, projector(appendix_b_vector(p)))
    disc = np.sqrt(1 - 4 / 3 * p * (2 - 5 / 3 * p))
    pre = (float((1 + disc) / 2), float((1 - disc) / 2))
    post = (float((1 + np.sqrt(5) / 3) / 2), float((1 - np.sqrt(5) / 3) / 2))
    h1 = np.zeros(8, dtype=np.complex128)
    h1[[index_of("000"), index_of("001"), index_of("111")]] = np.sqrt(1 / 3)
    expected = (p * post[0] + (1 - p) * 1.0, p * post[1])
    record = AppendixBRecord(
        p=p,
        bob_pre_matrix=np.array([[1 - 2 * p / 3, p / 3], [p / 3, 2 * p / 3]]),
        bob_pre_spectrum=pre,
        branch_probabilities=(p, 1 - p),
        branch1_vector=h1,
        branch1_bob_matrix=np.array([[1 / 3, 1 / 3], [1 / 3, 2 / 3]]),
        branch1_spectrum=post,
        expected_spectrum=expected,
        single_branch_violation=bool(post[0] < pre[0]),
    )
    return AppendixB(state, appendix_b_measurement(), record)


# --- numeric exploration for parameters outside both families


@dataclass(frozen=True)
class Exploration:
    lambdas: tuple[float, float, float]
    best_max_residual: float
    best_state: np.ndarray = field(repr=False)
    restarts: int = 0
    seed: int = 0


def _signed_residuals(v: np.ndarray, lambdas) -> np.ndarray:
    a = v[:8] + 1j * v[8:]
    out = [np.vdot(a, a).real - 1.0]
    pairs = ["00", "01", "10", "11"]
    for i in (1, 2, 3):
        out.append(sum(abs(a[index_of(tilde(i, "0" + kl))]) ** 2 for kl in pairs) - lambdas[i - 1])
    for i in (1, 2, 3):
        off = sum(a[index_of(tilde(i, "1" + kl))] * np.conj(a[index_of(tilde(i, "0" + kl))]) for kl in pairs)
        out.extend([off.real, off.imag])
    return np.array(out)


def explore_existence(spec: ThreeQubitSpec, restarts: int = 20, seed: int = 0) -> Exploration:
    """Randomized least-squares search for a solution; reports the best residual.

    This is a numerical probe only: a small residual suggests a solution and a
    large one proves nothing.
    """
    rng = np.random.default_rng(seed)
    best_val, best_x = np.inf, None
    for _ in range(restarts):
        x0 = rng.standard_normal(16)
        x0 /= np.linalg.norm(x0)
        sol = least_squares(_signed_residuals, x0, args=(spec.lambdas,), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        a = sol.x[:8] + 1j * sol.x[8:]
        val = float(residuals(a, spec).max())
        if val < best_val:
            best_val, best_x = val, a
    return Exploration(spec.lambdas, best_val, best_x, restarts, seed)
