"""Seeded random states, operators and protocols for sweeps and tests."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .engine import Broadcast, Measure, MeasurementSet, Protocol, Unitary
from .tensor_core import GlobalState, PartyLayout


def ginibre(d: int, rng: np.random.Generator, cols: int | None = None) -> np.ndarray:
    cols = d if cols is None else cols
    return (rng.standard_normal((d, cols)) + 1j * rng.standard_normal((d, cols))) / np.sqrt(2)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = ginibre(d, rng)
    return (g + g.conj().T) / 2


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return unitary_group.rvs(d, random_state=rng)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """``G G^† / Tr`` with ``G`` a ``d x rank`` Ginibre matrix (full rank by default)."""
    g = ginibre(d, rng, rank or d)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state(layout, rng: np.random.Generator, rank: int | None = None) -> GlobalState:
    layout = layout if isinstance(layout, PartyLayout) else PartyLayout(layout)
    return GlobalState(layout, random_density(layout.total, rng, rank))


def random_qbasis(d: int, q: int, rng: np.random.Generator) -> np.ndarray:
    """``d x q`` matrix with orthonormal columns."""
    return random_unitary(d, rng)[:, :q]


def complete(ops) -> list[np.ndarray]:
    """Normalize ``A_j -> A_j S^{-1/2}`` with ``S = sum_j A_j^† A_j``."""
    s = sum(a.conj().T @ a for a in ops)
    w, v = np.linalg.eigh((s + s.conj().T) / 2)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return [a @ inv_sqrt for a in ops]


def random_measurement(party: int, d: int, m: int, rng: np.random.Generator) -> MeasurementSet:
    return MeasurementSet(party, tuple(complete([ginibre(d, rng) for _ in range(m)])))


def random_protocol(
    layout,
    rng: np.random.Generator,
    max_steps: int = 3,
    unitary_only: bool = False,
    max_outcomes: int = 3,
    min_steps: int = 1,
) -> Protocol:
    """A random protocol of min_steps..max_steps steps, some guarded on earlier outcomes."""
    layout = layout if isinstance(layout, PartyLayout) else PartyLayout(layout)
    steps = []
    labels: list[tuple[str, int]] = []
    for k in range(int(rng.integers(min_steps, max_steps + 1))):
        party = int(rng.integers(1, layout.n + 1))
        d = layout.dim(party)
        guard = {}
        if labels and rng.random() < 0.4:
            label, m = labels[int(rng.integers(len(labels)))]
            guard = {label: int(rng.integers(m))}
        kind = "u" if unitary_only else rng.choice(["u", "m", "m", "b"])
        if kind == "u":
            steps.append(Unitary(party, random_unitary(d, rng), guard))
        elif kind == "b":
            steps.append(Broadcast(party, f"msg{k}", guard))
        else:
            m = int(rng.integers(2, max_outcomes + 1))
            label = f"m{k}"
            steps.append(Measure(random_measurement(party, d, m, rng), label, guard))
            labels.append((label, m))
    return Protocol(layout, steps)
