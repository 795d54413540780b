"""Weyl spectra on complex-plane grids and discrete Kuratowski set limits.

Grid membership uses the rasterization margin ``max(fredholm_margin, h/sqrt(2))``:
a grid point is treated as non-Fredholm when the essential spectrum passes
within that distance. Every point of the plane is within ``h/sqrt(2)`` of some
grid point, so curves and isolated tail values always leave a trace on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, sqrt
from typing import Iterable, Sequence

import numpy as np
from scipy.ndimage import distance_transform_edt
from scipy.spatial import cKDTree

from .config import DEFAULT, Tolerances
from .errors import (
    FredfamError,
    HypothesisViolation,
    InconclusiveError,
    PreconditionError,
    StructuralError,
)
from .family import OperatorFamily, family_index, sample_family, sup_distance
from .calc import Poly, poly_apply_spec
from .op_model import (
    DIAGONAL,
    LaurentSymbol,
    OperatorSpec,
    identity_like,
    linear_combine,
    multiply,
    section,
    specs_equal,
)

MAX_CELLS = 10_000


@dataclass(frozen=True)
class ComplexGrid:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    h: float

    def __post_init__(self):
        if not (self.re_min <= self.re_max and self.im_min <= self.im_max):
            raise StructuralError("grid bounds must be ordered")
        if self.h <= 0:
            raise StructuralError("grid step must be positive")
        if max(self.re_max - self.re_min, self.im_max - self.im_min) / self.h > MAX_CELLS:
            raise StructuralError(f"grid exceeds {MAX_CELLS} cells per axis")

    @classmethod
    def square(cls, half_width: float, h: float) -> "ComplexGrid":
        return cls(-half_width, half_width, -half_width, half_width, h)

    @property
    def shape(self) -> tuple[int, int]:
        return (
            int(round((self.re_max - self.re_min) / self.h)) + 1,
            int(round((self.im_max - self.im_min) / self.h)) + 1,
        )

    def re_values(self) -> np.ndarray:
        return self.re_min + self.h * np.arange(self.shape[0])

    def im_values(self) -> np.ndarray:
        return self.im_min + self.h * np.arange(self.shape[1])

    def points(self) -> np.ndarray:
        """Complex grid points, array of shape ``self.shape`` indexed [i_re, j_im]."""
        return self.re_values()[:, None] + 1j * self.im_values()[None, :]

    def point(self, i: int, j: int) -> complex:
        return complex(self.re_min + i * self.h, self.im_min + j * self.h)

    def nearest(self, z: complex) -> tuple[int, int]:
        ni, nj = self.shape
        i = int(np.clip(round((z.real - self.re_min) / self.h), 0, ni - 1))
        j = int(np.clip(round((z.imag - self.im_min) / self.h), 0, nj - 1))
        return i, j

    def margin(self, tol: Tolerances = DEFAULT) -> float:
        return max(tol.fredholm_margin, self.h / sqrt(2.0))


@dataclass(frozen=True)
class GridSet:
    grid: ComplexGrid
    members: frozenset = field(default_factory=frozenset)

    @classmethod
    def from_mask(cls, grid: ComplexGrid, mask: np.ndarray) -> "GridSet":
        return cls(grid, frozenset((int(i), int(j)) for i, j in zip(*np.nonzero(mask))))

    @classmethod
    def from_points(cls, grid: ComplexGrid, zs: Iterable[complex]) -> "GridSet":
        return cls(grid, frozenset(grid.nearest(complex(z)) for z in zs))

    def mask(self) -> np.ndarray:
        m = np.zeros(self.grid.shape, dtype=bool)
        if self.members:
            idx = np.array(sorted(self.members))
            m[idx[:, 0], idx[:, 1]] = True
        return m

    def sorted_members(self) -> list[tuple[int, int]]:
        return sorted(self.members)

    def complex_points(self) -> list[complex]:
        return [self.grid.point(i, j) for i, j in self.sorted_members()]

    def __len__(self):
        return len(self.members)

    def __contains__(self, ij):
        return tuple(ij) in self.members

    def _same_grid(self, other: "GridSet") -> None:
        if self.grid != other.grid:
            raise StructuralError("grid sets live on different grids")

    def __or__(self, other: "GridSet") -> "GridSet":
        self._same_grid(other)
        return GridSet(self.grid, self.members | other.members)

    def __and__(self, other: "GridSet") -> "GridSet":
        self._same_grid(other)
        return GridSet(self.grid, self.members & other.members)

    def __sub__(self, other: "GridSet") -> "GridSet":
        self._same_grid(other)
        return GridSet(self.grid, self.members - other.members)

    def __xor__(self, other: "GridSet") -> "GridSet":
        self._same_grid(other)
        return GridSet(self.grid, self.members ^ other.members)

    def issubset(self, other: "GridSet") -> bool:
        self._same_grid(other)
        return self.members <= other.members

    def distance_field(self) -> np.ndarray:
        """Euclidean distance from every grid point to the nearest member."""
        if not self.members:
            return np.full(self.grid.shape, np.inf)
        return distance_transform_edt(~self.mask(), sampling=self.grid.h)

    def dilate(self, eps: float) -> "GridSet":
        return GridSet.from_mask(self.grid, self.distance_field() <= eps + 1e-9 * self.grid.h)


def close_under(a: GridSet, b: GridSet, eps: float) -> bool:
    """Each set lies within the eps-dilation of the other."""
    return a.issubset(b.dilate(eps)) and b.issubset(a.dilate(eps))


def _ray_winding(curve: np.ndarray, grid: ComplexGrid) -> np.ndarray:
    """Winding number of the closed polygon ``curve`` around every grid point.

    Crossing-number form of the winding rule with half-open edges; equals the
    accumulated-argument winding whenever the point is off the polygon.
    """
    x0, y0 = curve.real, curve.imag
    nxt = np.roll(curve, -1)
    x1, y1 = nxt.real, nxt.imag
    xs = grid.re_values()
    out = np.zeros(grid.shape, dtype=int)
    for j, y in enumerate(grid.im_values()):
        up = (y0 <= y) & (y1 > y)
        down = (y1 <= y) & (y0 > y)
        cross = up | down
        if not cross.any():
            continue
        t = (y - y0[cross]) / (y1[cross] - y0[cross])
        xi = x0[cross] + t * (x1[cross] - x0[cross])
        sign = np.where(up[cross], 1, -1)
        order = np.argsort(xi)
        xi, sign = xi[order], sign[order]
        suffix = np.concatenate([np.cumsum(sign[::-1])[::-1], [0]])
        # crossings strictly to the right of each grid x
        k = np.searchsorted(xi, xs, side="right")
        out[:, j] = suffix[k]
    return out


def _scan_spec(spec: OperatorSpec, grid: ComplexGrid, tol: Tolerances) -> tuple[np.ndarray, np.ndarray]:
    """(essential-gap field, index field) over the grid; index is 0 where meaningless."""
    pts = grid.points()
    flat = np.column_stack([pts.real.ravel(), pts.imag.ravel()])
    if spec.symbol is not None:
        curve = spec.symbol.samples(tol.theta_samples)
        gap, _ = cKDTree(np.column_stack([curve.real, curve.imag])).query(flat)
        index = -_ray_winding(curve, grid)
    else:
        tails = np.array(spec.core.tails)
        gap, _ = cKDTree(np.column_stack([tails.real, tails.imag])).query(flat)
        index = np.zeros(grid.shape, dtype=int)
    return gap.reshape(grid.shape), index


def weyl_spectrum_point(spec: OperatorSpec, grid: ComplexGrid, tol: Tolerances = DEFAULT) -> GridSet:
    """Grid points where ``spec - lam`` is not Fredholm of index zero."""
    gap, index = _scan_spec(spec, grid, tol)
    return GridSet.from_mask(grid, (gap < grid.margin(tol)) | (index != 0))


def essential_spectrum_point(spec: OperatorSpec, grid: ComplexGrid, tol: Tolerances = DEFAULT) -> GridSet:
    gap, _ = _scan_spec(spec, grid, tol)
    return GridSet.from_mask(grid, gap < grid.margin(tol))


def weyl_spectrum_family(fam: OperatorFamily, grid: ComplexGrid, tol: Tolerances = DEFAULT) -> GridSet:
    mask = np.zeros(grid.shape, dtype=bool)
    for p in sample_family(fam):
        mask |= weyl_spectrum_point(p.spec, grid, tol).mask()
    return GridSet.from_mask(grid, mask)


def essential_spectrum_family(fam: OperatorFamily, grid: ComplexGrid, tol: Tolerances = DEFAULT) -> GridSet:
    mask = np.zeros(grid.shape, dtype=bool)
    for p in sample_family(fam):
        mask |= essential_spectrum_point(p.spec, grid, tol).mask()
    return GridSet.from_mask(grid, mask)


def weyl_spectrum_direct(fam: OperatorFamily, grid: ComplexGrid, tol: Tolerances = DEFAULT) -> GridSet:
    """Slow reference: test every grid point with ``family_index`` at the grid margin."""
    local = tol.with_overrides(fredholm_margin=grid.margin(tol))
    members = []
    ni, nj = grid.shape
    for i in range(ni):
        for j in range(nj):
            try:
                idx = family_index(fam, grid.point(i, j), local)
            except FredfamError:
                members.append((i, j))
                continue
            if not idx.is_zero():
                members.append((i, j))
    return GridSet(grid, frozenset(members))


@dataclass(frozen=True)
class SetLimitReport:
    liminf: GridSet
    limsup: GridSet
    converged: bool
    eps: float
    tail_policy: str = "last half; limsup by majority vote"

    @property
    def limit(self) -> GridSet:
        return self.liminf


def kuratowski_limits(seq: Sequence[GridSet], eps: float | None = None) -> SetLimitReport:
    """Discrete lower and upper set limits over the last half of ``seq``.

    Candidates are the members of the tail sets. A candidate is in the lower
    limit when it lies within ``eps`` of every tail set and in the upper limit
    when it does so for at least half of them.
    """
    if len(seq) < 8:
        raise PreconditionError("need at least 8 sets to form set limits")
    grid = seq[0].grid
    if any(s.grid != grid for s in seq):
        raise StructuralError("all sets must share one grid")
    eps = 2 * grid.h if eps is None else eps
    tail = seq[len(seq) // 2 :]
    near = np.stack([s.distance_field() <= eps + 1e-9 * grid.h for s in tail])
    votes = near.sum(axis=0)
    seen = np.any(np.stack([s.mask() for s in tail]), axis=0)
    lo = GridSet.from_mask(grid, seen & (votes == len(tail)))
    hi = GridSet.from_mask(grid, seen & (votes >= ceil(len(tail) / 2)))
    converged = hi.issubset(lo.dilate(eps))
    return SetLimitReport(lo, hi, converged, eps)


@dataclass(frozen=True)
class InclusionResult:
    holds: bool
    witness: complex | None
    limsup: GridSet
    target: GridSet


def _check_convergent(seq_fams: Sequence[OperatorFamily], limit_fam: OperatorFamily, eps: float) -> list[float]:
    dists = [sup_distance(f, limit_fam) for f in seq_fams]
    monotone = all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    if not monotone or dists[-1] > eps:
        raise InconclusiveError(
            f"sequence is not monotonically converging below eps={eps} (last distances {dists[-3:]})"
        )
    return dists


def semicontinuity_check(
    seq_fams: Sequence[OperatorFamily],
    limit_fam: OperatorFamily,
    grid: ComplexGrid,
    eps: float | None = None,
    tol: Tolerances = DEFAULT,
) -> InclusionResult:
    """Upper semicontinuity: the upper limit of the Weyl spectra lies in that of the limit.

    The eps budget is split: eps/2 for set-limit membership, the full eps as
    the dilation of the target.
    """
    eps = 2 * grid.h if eps is None else eps
    _check_convergent(seq_fams, limit_fam, eps)
    spectra = [weyl_spectrum_family(f, grid, tol) for f in seq_fams]
    report = kuratowski_limits(spectra, eps / 2)
    target = weyl_spectrum_family(limit_fam, grid, tol)
    outside = report.limsup - target.dilate(eps)
    witness = None
    if outside.members:
        # report the offender farthest from the target
        dist = target.distance_field()
        i, j = max(outside.members, key=lambda ij: dist[ij])
        witness = grid.point(i, j)
    return InclusionResult(not outside.members, witness, report.limsup, target)


SCENARIOS = ("commuting", "totally_disconnected", "normal", "essential_convergence")


def _polynomial_in(spec: OperatorSpec, base: OperatorSpec, max_degree: int = 8) -> bool:
    """True when ``spec`` equals ``q(base)`` as operators for some polynomial q."""
    if spec.symbol is None or base.symbol is None:
        return False
    powers = [LaurentSymbol({0: 1.0})]
    for _ in range(max_degree):
        powers.append(powers[-1] * base.symbol)
    keys = sorted({k for p in powers for k, _ in p.coeffs} | {k for k, _ in spec.symbol.coeffs})
    a = np.array([[p.coefficient(k) for p in powers] for k in keys])
    b = np.array([spec.symbol.coefficient(k) for k in keys])
    q, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.linalg.norm(a @ q - b) > 1e-10:
        return False
    q = np.where(np.abs(q) < 1e-13, 0, q)
    if np.count_nonzero(q[1:]) == 0:
        ident = identity_like(base)
        candidate = linear_combine(q[0], ident, 0.0, ident)
    else:
        candidate = poly_apply_spec(base, Poly(q))
    # symbols alone cannot see finite-rank corrections
    return specs_equal(candidate, spec, atol=1e-10)


def _commutator_small(s: OperatorSpec, t: OperatorSpec, n: int = 64) -> bool:
    big = n + max(s.band + t.band) + max(s.compact.max_support, t.compact.max_support) + 2
    a, b = section(s, big, big), section(t, big, big)
    c = (a @ b - b @ a)[:n, :n]
    return bool(np.max(np.abs(c)) <= 1e-10)


def _verify_hypothesis(
    scenario: str,
    seq_fams: Sequence[OperatorFamily],
    limit_fam: OperatorFamily,
    grid: ComplexGrid,
    eps: float,
    tol: Tolerances,
) -> None:
    fams = list(seq_fams) + [limit_fam]
    if scenario == "commuting":
        for f in seq_fams:
            for v in limit_fam.space.vertices:
                s, t = f.assignment[v], limit_fam.assignment[v]
                if s.kind != t.kind:
                    raise HypothesisViolation("sequence and limit are of different kinds")
                if not _commutator_small(s, t):
                    raise HypothesisViolation(f"truncated commutator at vertex {v} is not small")
                if s.kind == DIAGONAL:
                    # diagonal operators commute whenever their finite-rank parts do
                    if s.compact.is_empty() and t.compact.is_empty():
                        continue
                    if not specs_equal(multiply(s, t), multiply(t, s)):
                        raise HypothesisViolation(f"operators at vertex {v} do not commute")
                    continue
                if not _polynomial_in(s, t):
                    raise HypothesisViolation(
                        f"no structural certificate: operator at vertex {v} is not a polynomial in the limit"
                    )
    elif scenario == "totally_disconnected":
        if any(f.kind != DIAGONAL for f in fams):
            raise HypothesisViolation("totally disconnected spectra are certified only for diagonal families")
    elif scenario == "normal":
        for f in fams:
            if f.kind != DIAGONAL or any(not t.compact.is_empty() for t in f.assignment.values()):
                raise HypothesisViolation("normality is certified only for diagonal families without finite-rank part")
    elif scenario == "essential_convergence":
        ess = [essential_spectrum_family(f, grid, tol) for f in seq_fams]
        rep = kuratowski_limits(ess, eps / 2)
        target = essential_spectrum_family(limit_fam, grid, tol)
        if not (rep.converged and close_under(rep.liminf, target, eps)):
            raise HypothesisViolation("essential spectra do not converge to that of the limit")
    else:
        raise PreconditionError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


@dataclass(frozen=True)
class LimitScenarioResult:
    holds: bool
    report: SetLimitReport
    target: GridSet
    scenario: str


def limit_scenario_check(
    scenario: str,
    seq_fams: Sequence[OperatorFamily],
    limit_fam: OperatorFamily,
    grid: ComplexGrid,
    eps: float | None = None,
    tol: Tolerances = DEFAULT,
) -> LimitScenarioResult:
    """Check that the Weyl spectra converge to the Weyl spectrum of the limit.

    Raises HypothesisViolation when the scenario's hypothesis is not certified.
    """
    eps = 2 * grid.h if eps is None else eps
    _check_convergent(seq_fams, limit_fam, eps)
    _verify_hypothesis(scenario, seq_fams, limit_fam, grid, eps, tol)
    spectra = [weyl_spectrum_family(f, grid, tol) for f in seq_fams]
    report = kuratowski_limits(spectra, eps / 2)
    target = weyl_spectrum_family(limit_fam, grid, tol)
    holds = (
        report.converged
        and close_under(report.liminf, target, eps)
        and report.limsup.issubset(target.dilate(eps))
    )
    return LimitScenarioResult(holds, report, target, scenario)
