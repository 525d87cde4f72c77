"""Execution of LOCC protocols as probability-weighted branch trees.

A protocol is a list of local steps. Measurement outcomes are recorded under a
label; later steps may carry a guard (``{label: outcome}``) and then run only
on branches whose history matches, which is how classical communication
steers the remaining operations. Broadcast steps change no state and only
append a message to the branch history.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ContractError, LayoutError, ProtocolError
from .spectra import Spectrum, c_majorizes, majorizes, mix_spectra, prefix_margins, spectrum_of
from .tensor_core import (
    GlobalState,
    LocalOperator,
    PartyLayout,
    as_matrix,
    lift_local,
    partial_trace,
    require_density,
)
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "MeasurementSet",
    "MeasurementReport",
    "Unitary",
    "Measure",
    "Broadcast",
    "Protocol",
    "TreeNode",
    "ProtocolTree",
    "PartyMonotonicity",
    "validate_measurement",
    "apply_unitary",
    "measure",
    "local_spectra",
    "expected_local_spectrum",
    "run_protocol",
    "sample_path",
    "sample_protocol",
    "check_monotonicity",
    "stronger",
    "p_stronger",
]


def _spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, ord=2))


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Operators ``f_1..f_m`` on one party's factor (a measuring POVM)."""

    party: int
    ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(LocalOperator(self.party, op).op for op in self.ops)
        if not ops:
            raise ContractError("a measurement needs at least one operator")
        shapes = {op.shape for op in ops}
        if len(shapes) != 1:
            raise LayoutError(f"measurement operators have differing shapes {sorted(shapes)}")
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    def __len__(self):
        return len(self.ops)

    def completeness_defect(self) -> float:
        total = sum(op.conj().T @ op for op in self.ops)
        return _spectral_norm(total - np.eye(self.dim))


@dataclass(frozen=True)
class MeasurementReport:
    completeness_defect: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.completeness_defect <= self.tol

    def __bool__(self):
        return self.passed


def validate_measurement(m: MeasurementSet, tol: float = DEFAULT.complete) -> MeasurementReport:
    """Report ``||sum_j f_j^† f_j - id||`` (spectral norm)."""
    return MeasurementReport(m.completeness_defect(), tol)


Guard = tuple[tuple[str, int], ...]


def _guard(g: Mapping[str, int] | Iterable[tuple[str, int]] | None) -> Guard:
    if not g:
        return ()
    items = g.items() if isinstance(g, Mapping) else g
    return tuple(sorted((str(k), int(v)) for k, v in items))


@dataclass(frozen=True, eq=False)
class Unitary:
    party: int
    u: np.ndarray
    guard: Guard = ()

    def __post_init__(self):
        object.__setattr__(self, "u", LocalOperator(self.party, self.u).op)
        object.__setattr__(self, "guard", _guard(self.guard))


@dataclass(frozen=True, eq=False)
class Measure:
    mset: MeasurementSet
    label: str
    guard: Guard = ()

    def __post_init__(self):
        object.__setattr__(self, "guard", _guard(self.guard))

    @property
    def party(self) -> int:
        return self.mset.party


@dataclass(frozen=True)
class Broadcast:
    party: int
    tag: str
    guard: Guard = ()

    def __post_init__(self):
        object.__setattr__(self, "guard", _guard(self.guard))


Step = Union[Unitary, Measure, Broadcast]


@dataclass(frozen=True, eq=False)
class Protocol:
    """Layout plus ordered, optionally guarded steps.

    Construction checks party indices, operator shapes, unitarity,
    measurement completeness, label uniqueness and guard reachability.
    """

    layout: PartyLayout
    steps: tuple[Step, ...] = ()
    tol: Tolerances = field(default=DEFAULT, repr=False)

    def __post_init__(self):
        layout = self.layout if isinstance(self.layout, PartyLayout) else PartyLayout(self.layout)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "steps", tuple(self.steps))
        self._check()

    def _check(self) -> None:
        issues: list[tuple[int, str]] = []
        defined: dict[str, Measure] = {}
        for pos, step in enumerate(self.steps, start=1):
            for msg in self._step_issues(step, defined):
                issues.append((pos, msg))
            if isinstance(step, Measure):
                if step.label in defined:
                    issues.append((pos, f"duplicate measurement label {step.label!r}"))
                defined[step.label] = step
        if issues:
            summary = "; ".join(f"step {k}: {m}" for k, m in issues)
            raise ProtocolError(summary, issues)

    def _step_issues(self, step: Step, defined: Mapping[str, Measure]) -> list[str]:
        if not 1 <= step.party <= self.layout.n:
            return [f"party {step.party} out of range 1..{self.layout.n}"]
        d = self.layout.dim(step.party)
        out = []
        if isinstance(step, Unitary):
            if step.u.shape != (d, d):
                out.append(f"unitary of shape {step.u.shape} on party {step.party} of dimension {d}")
            else:
                defect = _spectral_norm(step.u.conj().T @ step.u - np.eye(d))
                if defect > self.tol.unitary:
                    out.append(f"operator is not unitary (defect {defect:.6g})")
        elif isinstance(step, Measure):
            if step.mset.dim != d:
                out.append(f"measurement of dimension {step.mset.dim} on party {step.party} of dimension {d}")
            else:
                report = validate_measurement(step.mset, self.tol.complete)
                if not report:
                    out.append(f"incomplete measurement (completeness defect {report.completeness_defect!r})")
        out.extend(self._guard_issues(step.guard, defined))
        return out

    @staticmethod
    def _guard_issues(guard: Guard, defined: Mapping[str, Measure]) -> list[str]:
        required = dict(guard)
        pending = list(guard)
        while pending:
            label, outcome = pending.pop()
            if label not in defined:
                return [f"guard references unknown label {label!r}"]
            m = defined[label]
            if not 0 <= outcome < len(m.mset):
                return [f"label {label!r} has no outcome {outcome}"]
            for k, v in m.guard:
                if required.setdefault(k, v) != v:
                    return [f"guard is unreachable ({k}={v} conflicts)"]
                pending.append((k, v))
        return []

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.steps if isinstance(s, Measure)]


@dataclass(eq=False)
class TreeNode:
    """A branch: normalized state, absolute probability, and its history."""

    state: GlobalState
    prob: float
    history: tuple[tuple[str, int], ...] = ()
    messages: tuple[str, ...] = ()
    children: list["TreeNode"] = field(default_factory=list)

    @property
    def outcomes(self) -> dict[str, int]:
        return dict(self.history)

    def history_key(self) -> str:
        return ",".join(f"{k}={v}" for k, v in self.history)

    def matches(self, guard: Guard) -> bool:
        seen = self.outcomes
        return all(seen.get(k) == v for k, v in guard)


@dataclass(eq=False)
class ProtocolTree:
    root: TreeNode
    leaves: list[TreeNode]
    pruned_mass: float = 0.0

    def branches(self) -> list[tuple[float, GlobalState]]:
        return [(leaf.prob, leaf.state) for leaf in self.leaves]

    def total_probability(self) -> float:
        return float(sum(leaf.prob for leaf in self.leaves))

    def iter_nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


def apply_unitary(state: GlobalState, party: int, u, tol: Tolerances = DEFAULT) -> GlobalState:
    """``rho -> U' rho U'^†`` with ``U' = id ⊗ u ⊗ id`` at ``party``."""
    u = as_matrix(u)
    d = state.layout.dim(party)
    if u.shape != (d, d):
        raise LayoutError(f"unitary of shape {u.shape} on party {party} of dimension {d}")
    defect = _spectral_norm(u.conj().T @ u - np.eye(d))
    if defect > tol.unitary:
        raise ContractError(f"operator is not unitary (defect {defect:.3g})")
    big = lift_local(LocalOperator(party, u), state.layout)
    return GlobalState(state.layout, big @ state.rho @ big.conj().T)


def measure(state: GlobalState, m: MeasurementSet, tol: Tolerances = DEFAULT) -> list[tuple[float, GlobalState]]:
    """Outcome probabilities and post-measurement states, in operator order.

    Outcomes with probability at most ``tol.prob`` are dropped.

    Raises:
        ContractError: if the measurement is incomplete.
    """
    return [(p, s) for _, p, s in _measure_indexed(state, m, tol)[0]]


def _measure_indexed(state: GlobalState, m: MeasurementSet, tol: Tolerances):
    report = validate_measurement(m, tol.complete)
    if not report:
        raise ContractError(f"incomplete measurement (completeness defect {report.completeness_defect!r})")
    out = []
    probs = []
    pruned = 0.0
    for j, op in enumerate(m.ops):
        big = lift_local(LocalOperator(m.party, op), state.layout)
        unnorm = big @ state.rho @ big.conj().T
        p = float(np.trace(unnorm).real)
        probs.append(p)
        if p <= tol.prob:
            pruned += max(p, 0.0)
            continue
        out.append((j, p, GlobalState(state.layout, unnorm / p)))
    total = sum(probs)
    if abs(total - 1.0) > tol.trace:
        raise ContractError(f"outcome probabilities sum to {total:.12g}; is the state normalized?")
    return out, pruned


def local_spectra(state: GlobalState, tol: Tolerances = DEFAULT) -> list[Spectrum]:
    """Spectrum of every party's local state, party order."""
    return [
        spectrum_of(partial_trace(state.rho, state.layout, i), tol_herm=tol.herm, tol_psd=tol.psd)
        for i in state.layout.parties()
    ]


def expected_local_spectrum(branches: Sequence[tuple[float, GlobalState]], party: int, tol: Tolerances = DEFAULT) -> Spectrum:
    """``sum_j p_j Sp(rho_party^{sigma_j})``."""
    pairs = [
        (p, spectrum_of(partial_trace(s.rho, s.layout, party), tol_herm=tol.herm, tol_psd=tol.psd))
        for p, s in branches
    ]
    return mix_spectra(pairs)


def _expand(node: TreeNode, step: Step, tol: Tolerances) -> tuple[list[TreeNode], float]:
    if not node.matches(step.guard):
        return [node], 0.0
    if isinstance(step, Broadcast):
        child = TreeNode(node.state, node.prob, node.history, node.messages + (f"{step.party}:{step.tag}",))
        node.children.append(child)
        return [child], 0.0
    if isinstance(step, Unitary):
        child = TreeNode(apply_unitary(node.state, step.party, step.u, tol), node.prob, node.history, node.messages)
        node.children.append(child)
        return [child], 0.0
    branches, pruned = _measure_indexed(node.state, step.mset, tol)
    children = [
        TreeNode(state, node.prob * p, node.history + ((step.label, j),), node.messages)
        for j, p, state in branches
    ]
    node.children.extend(children)
    return children, node.prob * pruned


def run_protocol(
    protocol: Protocol,
    initial: GlobalState,
    tol: Tolerances = DEFAULT,
    threads: int = 1,
) -> ProtocolTree:
    """Expand every branch of ``protocol`` from ``initial``.

    Branch order follows measurement-operator order; ``threads > 1`` expands
    sibling branches concurrently with identical results.
    """
    if initial.layout != protocol.layout:
        raise LayoutError(f"state layout {initial.layout.dims} differs from protocol layout {protocol.layout.dims}")
    require_density(initial, tol.trace)
    root = TreeNode(initial, 1.0)
    frontier = [root]
    pruned = 0.0
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for step in protocol.steps:
            if pool is None:
                results = [_expand(node, step, tol) for node in frontier]
            else:
                results = list(pool.map(lambda nd, st=step: _expand(nd, st, tol), frontier))
            frontier = [child for children, _ in results for child in children]
            pruned += sum(mass for _, mass in results)
            if pruned > tol.pruned:
                raise ProtocolError(f"pruned probability mass {pruned:.3e} exceeds {tol.pruned:.1e}")
    finally:
        if pool is not None:
            pool.shutdown()
    tree = ProtocolTree(root, frontier, pruned)
    total = tree.total_probability()
    if abs(total - 1.0) > tol.trace:
        raise ProtocolError(f"leaf probabilities sum to {total:.12g}")
    return tree


def sample_path(protocol: Protocol, initial: GlobalState, rng: np.random.Generator, tol: Tolerances = DEFAULT) -> TreeNode:
    """Follow one branch, drawing each measurement outcome at random.

    The returned node's ``prob`` is the probability of the sampled path.
    """
    node = TreeNode(initial, 1.0)
    for step in protocol.steps:
        if not node.matches(step.guard):
            continue
        if isinstance(step, Measure):
            branches, _ = _measure_indexed(node.state, step.mset, tol)
            weights = np.array([p for _, p, _ in branches])
            k = int(rng.choice(len(branches), p=weights / weights.sum()))
            j, p, state = branches[k]
            node = TreeNode(state, node.prob * p, node.history + ((step.label, j),), node.messages)
        else:
            node = _expand(node, step, tol)[0][0]
    return node


@dataclass
class SampleResult:
    shots: int
    seed: int
    counts: dict[str, int]
    paths: dict[str, TreeNode]

    def frequencies(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}

    def branches(self) -> list[tuple[float, GlobalState]]:
        return [(self.counts[k] / self.shots, self.paths[k].state) for k in self.counts]


def sample_protocol(
    protocol: Protocol,
    initial: GlobalState,
    shots: int,
    seed: int,
    tol: Tolerances = DEFAULT,
) -> SampleResult:
    """Monte-Carlo execution: ``shots`` independent sampled paths."""
    if initial.layout != protocol.layout:
        raise LayoutError("state layout differs from protocol layout")
    require_density(initial, tol.trace)
    rng = np.random.default_rng(seed)
    counts: dict[str, int] = {}
    paths: dict[str, TreeNode] = {}
    for _ in range(shots):
        leaf = sample_path(protocol, initial, rng, tol)
        key = leaf.history_key()
        counts[key] = counts.get(key, 0) + 1
        paths.setdefault(key, leaf)
    order = sorted(counts)
    return SampleResult(shots, seed, {k: counts[k] for k in order}, {k: paths[k] for k in order})


@dataclass(frozen=True)
class PartyMonotonicity:
    party: int
    initial: Spectrum
    expected: Spectrum
    margins: tuple[float, ...]
    holds: bool

    @property
    def min_margin(self) -> float:
        return min(self.margins)


def check_monotonicity(
    tree: ProtocolTree | Sequence[tuple[float, GlobalState]],
    initial: GlobalState,
    tol: Tolerances = DEFAULT,
) -> list[PartyMonotonicity]:
    """Compare each party's expected final spectrum with its initial one.

    ``holds`` is true when the expected spectrum majorizes the initial
    spectrum up to ``tol.major``; ``margins`` are the prefix-sum differences.
    """
    branches = tree.branches() if isinstance(tree, ProtocolTree) else list(tree)
    out = []
    init_spectra = local_spectra(initial, tol)
    for party, before in zip(initial.layout.parties(), init_spectra):
        after = expected_local_spectrum(branches, party, tol)
        margins = prefix_margins(after, before)
        out.append(
            PartyMonotonicity(party, before, after, tuple(float(x) for x in margins), majorizes(after, before, tol.major))
        )
    return out


def _same_layout(a: GlobalState, b: GlobalState) -> None:
    if a.layout != b.layout:
        raise LayoutError(f"layouts differ: {a.layout.dims} vs {b.layout.dims}")


def stronger(a: GlobalState, b: GlobalState, tol: Tolerances = DEFAULT) -> bool:
    """Every local spectrum of ``a`` majorizes the matching one of ``b``."""
    _same_layout(a, b)
    return all(majorizes(sa, sb, tol.major) for sa, sb in zip(local_spectra(a, tol), local_spectra(b, tol)))


def p_stronger(a: GlobalState, b: GlobalState, p: float, tol: Tolerances = DEFAULT) -> bool:
    """Every local spectrum of ``a`` p-majorizes (slack ``1 - p``) that of ``b``."""
    _same_layout(a, b)
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"p must lie in [0, 1], got {p}")
    return all(c_majorizes(sa, sb, p, tol.major) for sa, sb in zip(local_spectra(a, tol), local_spectra(b, tol)))
