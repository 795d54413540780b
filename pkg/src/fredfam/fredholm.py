"""Pointwise Fredholm theory for model operators.

The index is computed analytically (winding number of the symbol curve, or the
diagonal rule). ``nullity_defect_oracle`` is an independent finite-section SVD
estimate of kernel and cokernel dimensions, used to cross-check it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import InstabilityError, OnEssentialSpectrumError, PreconditionError
from .op_model import LaurentSymbol, OperatorSpec, section


@dataclass(frozen=True)
class FredholmReport:
    fredholm: bool
    index: int | None
    essential_gap: float


@dataclass(frozen=True)
class NullityDefect:
    nullity: int
    defect: int
    stabilized: bool
    sizes: tuple[int, ...] = ()

    @property
    def index(self) -> int:
        return self.nullity - self.defect


def curve_gap(sym: LaurentSymbol, lam: complex, samples: int) -> float:
    return float(np.min(np.abs(sym.samples(samples) - lam)))


def winding_number(sym: LaurentSymbol, lam: complex = 0.0, tol: Tolerances = DEFAULT) -> int:
    """Winding of ``theta -> a(e^{i theta}) - lam`` around the origin."""
    n = tol.theta_samples
    if n <= 4 * sym.degree:
        raise PreconditionError(f"theta_samples={n} too small for symbol degree {sym.degree}")
    w = sym.samples(n) - lam
    gap = float(np.min(np.abs(w)))
    if gap < tol.fredholm_margin:
        raise OnEssentialSpectrumError(
            f"symbol curve passes within {gap:.3g} of lambda={lam} (margin {tol.fredholm_margin})"
        )
    turns = np.angle(np.roll(w, -1) / w).sum() / (2 * np.pi)
    return int(round(turns))


def essential_gap(spec: OperatorSpec, lam: complex, tol: Tolerances = DEFAULT) -> float:
    if spec.symbol is not None:
        return curve_gap(spec.symbol, lam, tol.theta_samples)
    return float(min(abs(t - lam) for t in spec.core.tails))


def point_fredholm(spec: OperatorSpec, lam: complex = 0.0, tol: Tolerances = DEFAULT) -> FredholmReport:
    gap = essential_gap(spec, lam, tol)
    if gap < tol.fredholm_margin:
        return FredholmReport(False, None, gap)
    if spec.symbol is not None:
        return FredholmReport(True, -winding_number(spec.symbol, lam, tol), gap)
    return FredholmReport(True, 0, gap)


# an uncounted singular value shrinking by more than this factor per doubling
# is a kernel vector that has not yet dropped below the cutoff
_DECAY_GUARD = 0.1


def _small_singular_count(m: np.ndarray, rel_tol: float, scale: float) -> tuple[int, float]:
    """(count below the cutoff, smallest singular value above it)."""
    s = np.linalg.svd(m, compute_uv=False)
    # columns beyond the row count are automatically in the kernel
    deficit = max(m.shape[1] - m.shape[0], 0)
    kept = s[s >= rel_tol * scale]
    return int(s.size - kept.size) + deficit, float(kept.min()) if kept.size else np.inf


def _estimate(spec: OperatorSpec, lam: complex, n: int, rel_tol: float):
    """((nullity, defect), (nullity floor, defect floor)) at section size n."""
    lo, up = spec.band
    big = max(n + max(lo, up), spec.compact.max_support + 1, n)
    a = section(spec, big, big) - lam * np.eye(big)
    scale = np.linalg.norm(a, 2)
    if scale == 0:
        return (n, n), (np.inf, np.inf)
    # T restricted to span(e_0..e_{n-1}) is captured exactly by these columns
    nullity, nfloor = _small_singular_count(a[:, :n], rel_tol, scale)
    defect, dfloor = _small_singular_count(a.conj().T[:, :n], rel_tol, scale)
    return (nullity, defect), (nfloor, dfloor)


def _agree(prev, cur) -> bool:
    (pc, pf), (cc, cf) = prev, cur
    return pc == cc and all(c >= _DECAY_GUARD * p for p, c in zip(pf, cf))


def nullity_defect_oracle(
    spec: OperatorSpec, lam: complex = 0.0, n: int | None = None, tol: Tolerances = DEFAULT
) -> NullityDefect:
    """Estimate (nullity, defect) of ``spec - lam`` from rectangular finite sections.

    Sizes n, 2n, 4n are tried; the estimate is accepted as soon as two consecutive
    sizes agree and no uncounted singular value is collapsing between them.
    """
    n = tol.oracle_n if n is None else n
    if n < tol.oracle_n:
        raise PreconditionError(f"oracle size {n} below configured minimum {tol.oracle_n}")
    sizes = [n, 2 * n, 4 * n]
    prev = _estimate(spec, lam, sizes[0], tol.rank_rel_tol)
    for k, size in enumerate(sizes[1:], start=1):
        cur = _estimate(spec, lam, size, tol.rank_rel_tol)
        if _agree(prev, cur):
            (nullity, defect), _ = cur
            return NullityDefect(nullity, defect, True, tuple(sizes[: k + 1]))
        prev = cur
    raise InstabilityError(
        f"nullity/defect estimates did not stabilize up to n={sizes[-1]}; try a larger n"
    )
