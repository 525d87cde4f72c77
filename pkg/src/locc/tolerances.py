"""Numerical tolerances used across the package.

Every engine-level call accepts a :class:`Tolerances` instance; lower-level
helpers take the individual float they need with the default below.
"""

from dataclasses import asdict, dataclass, replace

TOL_HERM = 1e-9
TOL_TRACE = 1e-9
TOL_PSD = 1e-9
TOL_EIG = 1e-9
TOL_PROB = 1e-12
TOL_MAJOR = 1e-9
TOL_COMPLETE = 1e-9
TOL_UNITARY = 1e-9
TOL_DEGEN = 1e-6
TOL_RESIDUAL = 1e-12
# total probability mass that may be discarded by branch pruning
TOL_PRUNED = 1e-9


@dataclass(frozen=True)
class Tolerances:
    herm: float = TOL_HERM
    trace: float = TOL_TRACE
    psd: float = TOL_PSD
    eig: float = TOL_EIG
    prob: float = TOL_PROB
    major: float = TOL_MAJOR
    complete: float = TOL_COMPLETE
    unitary: float = TOL_UNITARY
    degen: float = TOL_DEGEN
    residual: float = TOL_RESIDUAL
    pruned: float = TOL_PRUNED

    def with_overrides(self, **kwargs):
        """Return a copy with the non-``None`` keyword values replaced."""
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def as_dict(self):
        return asdict(self)


DEFAULT = Tolerances()
