"""Canonical, snapshot-friendly run reports.

Every float is rounded to 12 significant digits and keys are sorted, so two
runs with the same input, mode and seed serialize to identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

import numpy as np

from . import __version__
from .engine import ProtocolTree, SampleResult, check_monotonicity, local_spectra
from .tensor_core import GlobalState
from .tolerances import Tolerances

SIG_DIGITS = 12


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    x = float(x)
    if not math.isfinite(x) or x == 0.0:
        return 0.0 if x == 0.0 else x
    return float(f"{x:.{digits}g}")


def matrix_pairs(m) -> list:
    """Row-major nested ``[re, im]`` pairs."""
    m = np.asarray(m)
    if m.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in m]
    return [matrix_pairs(row) for row in m]


def canonical(obj: Any) -> Any:
    """Recursively convert to plain JSON types with rounded floats."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return canonical(matrix_pairs(obj))
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(obj)
    if isinstance(obj, complex):
        return [round_sig(obj.real), round_sig(obj.imag)]
    return obj


def dumps(report: dict) -> str:
    return json.dumps(canonical(report), sort_keys=True, indent=2) + "\n"


def input_digest(text: str, params: dict | None = None) -> str:
    h = hashlib.sha256(text.encode())
    for k in sorted(params or {}):
        h.update(f"\n{k}={params[k]!r}".encode())
    return h.hexdigest()


def envelope(command: str, tol: Tolerances, **fields) -> dict:
    out = {"tool": "locc", "version": __version__, "command": command, "tolerances": tol.as_dict()}
    out.update(fields)
    return out


def run_report(
    *,
    text: str,
    params: dict,
    initial: GlobalState,
    tol: Tolerances,
    tree: ProtocolTree | None = None,
    sample: SampleResult | None = None,
) -> dict:
    """Report for a protocol run in branch mode (``tree``) or sample mode."""
    if (tree is None) == (sample is None):
        raise ValueError("give exactly one of tree or sample")
    if tree is not None:
        rows = [(leaf.history_key(), leaf.prob, leaf.state, list(leaf.messages)) for leaf in tree.leaves]
        branches = tree.branches()
        mode, seed, pruned = "branch", None, tree.pruned_mass
    else:
        rows = [
            (k, sample.counts[k] / sample.shots, sample.paths[k].state, list(sample.paths[k].messages))
            for k in sample.counts
        ]
        branches = sample.branches()
        mode, seed, pruned = "sample", sample.seed, 0.0

    leaves = [
        {
            "history": key,
            "probability": p,
            "messages": msgs,
            "local_spectra": [s.to_list() for s in local_spectra(state, tol)],
        }
        for key, p, state, msgs in rows
    ]
    mono = check_monotonicity(branches, initial, tol)
    total = sum(p for _, p, _, _ in rows)
    flags = {
        "probability_sum": abs(total - 1.0) <= tol.trace,
        "monotonicity": all(m.holds for m in mono),
    }
    return envelope(
        "run",
        tol,
        mode=mode,
        seed=seed,
        input_digest=input_digest(text, params),
        params=params,
        layout=list(initial.layout.dims),
        leaves=leaves,
        pruned_mass=pruned,
        initial_spectra=[m.initial.to_list() for m in mono],
        expected_spectra=[m.expected.to_list() for m in mono],
        monotonicity=[
            {"party": m.party, "holds": m.holds, "margins": list(m.margins), "min_margin": m.min_margin} for m in mono
        ],
        flags=flags,
        passed=all(flags.values()),
    )
