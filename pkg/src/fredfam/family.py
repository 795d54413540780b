"""Continuous operator families over a finite parameter graph.

A family assigns an operator to every vertex; along an edge (u, v) the operator
at parameter s is the coefficientwise interpolation ``(1-s) T_u + s T_v``, so
continuity holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    DiscretizationError,
    InconclusiveError,
    NotFredholmFamilyError,
    PreconditionError,
    StructuralError,
    UnsupportedCombinationError,
)
from .fredholm import essential_gap, point_fredholm
from .op_model import (
    OperatorSpec,
    diagonal,
    essential_norm,
    identity_like,
    is_compact_spec,
    linear_combine,
    multiply,
    specs_equal,
    toeplitz,
)
from .param_space import ComponentLabeling, ParamSpace, components


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    space: ParamSpace
    assignment: Mapping[int, OperatorSpec]
    edge_samples: int = 8
    # operator at (u, v, s); families built by pointwise algebra override the
    # default linear interpolation so that e.g. (ST)_x = S_x T_x along edges too
    edge_rule: Callable[[int, int, float], OperatorSpec] | None = None

    def __post_init__(self):
        missing = [v for v in self.space.vertices if v not in self.assignment]
        if missing:
            raise StructuralError(f"vertices without an operator: {missing}")
        extra = [v for v in self.assignment if v not in set(self.space.vertices)]
        if extra:
            raise StructuralError(f"operators assigned to unknown vertices: {extra}")
        if self.edge_samples < 1:
            raise StructuralError("edge_samples must be positive")
        kinds = {spec.kind for spec in self.assignment.values()}
        if len(kinds) > 1:
            raise UnsupportedCombinationError(f"family mixes operator kinds {sorted(kinds)}")

    @classmethod
    def constant(cls, space: ParamSpace, spec: OperatorSpec, edge_samples: int = 8) -> "OperatorFamily":
        return cls(space, {v: spec for v in space.vertices}, edge_samples)

    @classmethod
    def single(cls, spec: OperatorSpec) -> "OperatorFamily":
        return cls(ParamSpace([0]), {0: spec})

    @property
    def kind(self) -> str:
        return next(iter(self.assignment.values())).kind

    def at_edge(self, u: int, v: int, s: float) -> OperatorSpec:
        if self.edge_rule is not None:
            return self.edge_rule(u, v, s)
        return linear_combine(1.0 - s, self.assignment[u], s, self.assignment[v])

    def map(self, fn: Callable[[OperatorSpec], OperatorSpec]) -> "OperatorFamily":
        """Pointwise image ``x -> fn(T_x)``."""
        return OperatorFamily(
            self.space,
            {v: fn(t) for v, t in self.assignment.items()},
            self.edge_samples,
            lambda u, v, s: fn(self.at_edge(u, v, s)),
        )

    def __add__(self, other: "OperatorFamily") -> "OperatorFamily":
        return combine_families(1.0, self, 1.0, other)

    def shifted(self, lam: complex) -> "OperatorFamily":
        """The family ``T - lam I``."""
        return self.map(lambda t: linear_combine(1.0, t, -lam, identity_like(t)))


@dataclass(frozen=True)
class SamplePoint:
    tag: tuple
    spec: OperatorSpec = field(compare=False)
    component: int


@dataclass(frozen=True)
class SampledFamily:
    points: tuple[SamplePoint, ...]
    labeling: ComponentLabeling = field(compare=False)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def by_component(self) -> dict[int, list[SamplePoint]]:
        out: dict[int, list[SamplePoint]] = {c: [] for c in self.labeling.ids()}
        for p in self.points:
            out[p.component].append(p)
        return out


@dataclass(frozen=True)
class IndexVector:
    """One integer per connected component, keyed by the component's smallest vertex."""

    entries: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "entries", {int(k): int(v) for k, v in sorted(self.entries.items())})

    def __add__(self, other: "IndexVector") -> "IndexVector":
        if set(self.entries) != set(other.entries):
            raise StructuralError("index vectors live on different component sets")
        return IndexVector({k: self.entries[k] + other.entries[k] for k in self.entries})

    def __getitem__(self, comp: int) -> int:
        return self.entries[comp]

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(self.entries.values())

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.entries.values())


def combine_families(alpha: complex, s: OperatorFamily, beta: complex, t: OperatorFamily) -> OperatorFamily:
    _check_same_space(s, t)
    rule = None
    if s.edge_rule is not None or t.edge_rule is not None:
        rule = lambda u, v, x: linear_combine(alpha, s.at_edge(u, v, x), beta, t.at_edge(u, v, x))  # noqa: E731
    return OperatorFamily(
        s.space,
        {v: linear_combine(alpha, s.assignment[v], beta, t.assignment[v]) for v in s.space.vertices},
        max(s.edge_samples, t.edge_samples),
        rule,
    )


def _check_same_space(s: OperatorFamily, t: OperatorFamily) -> None:
    if s.space != t.space:
        raise StructuralError("families are defined on different parameter spaces")


def sample_family(fam: OperatorFamily) -> SampledFamily:
    """Vertices in ascending order, then each edge's interior points ``j/(edge_samples+1)``."""
    labeling = components(fam.space)
    pts = [SamplePoint(("vertex", v), fam.assignment[v], labeling.label[v]) for v in sorted(fam.space.vertices)]
    m = fam.edge_samples
    for u, v in fam.space.edges:
        for j in range(1, m + 1):
            s = j / (m + 1)
            pts.append(SamplePoint(("edge", u, v, s), fam.at_edge(u, v, s), labeling.label[u]))
    return SampledFamily(tuple(pts), labeling)


def family_index(fam: OperatorFamily, lam: complex = 0.0, tol: Tolerances = DEFAULT) -> IndexVector:
    """Index of ``fam - lam I``, one integer per connected component."""
    sampled = sample_family(fam)
    bad, per_comp = [], {}
    for p in sampled:
        rep = point_fredholm(p.spec, lam, tol)
        if not rep.fredholm:
            bad.append((p.tag, rep.essential_gap))
            continue
        per_comp.setdefault(p.component, {}).setdefault(rep.index, []).append(p.tag)
    if bad:
        raise NotFredholmFamilyError(
            f"{len(bad)} sampled point(s) are not Fredholm at lambda={lam}", offending=bad
        )
    out = {}
    for comp, seen in per_comp.items():
        if len(seen) > 1:
            detail = {k: v[:3] for k, v in seen.items()}
            raise DiscretizationError(
                f"component {comp} has sampled indices {sorted(seen)}; increase edge_samples ({detail})"
            )
        out[comp] = next(iter(seen))
    return IndexVector(out)


def compose_families(s: OperatorFamily, t: OperatorFamily) -> OperatorFamily:
    """Pointwise product ``(ST)_x = S_x T_x``, on edges as well as vertices."""
    _check_same_space(s, t)
    return OperatorFamily(
        s.space,
        {v: multiply(s.assignment[v], t.assignment[v]) for v in s.space.vertices},
        max(s.edge_samples, t.edge_samples),
        lambda u, v, x: multiply(s.at_edge(u, v, x), t.at_edge(u, v, x)),
    )


def families_equal(s: OperatorFamily, t: OperatorFamily) -> bool:
    if s.space != t.space:
        return False
    return all(specs_equal(s.assignment[v], t.assignment[v]) for v in s.space.vertices)


def linear_path(fam0: OperatorFamily, fam1: OperatorFamily, ts: Sequence[float]) -> list[OperatorFamily]:
    out = []
    for t in ts:
        if t == 0:
            out.append(fam0)
        elif t == 1:
            out.append(fam1)
        else:
            out.append(combine_families(1.0 - t, fam0, t, fam1))
    return out


@dataclass(frozen=True)
class HomotopyReport:
    fredholm_path: bool
    index_start: IndexVector | None = None
    index_end: IndexVector | None = None
    witness: dict | None = None

    @property
    def invariant(self) -> bool:
        return self.fredholm_path and self.index_start == self.index_end


def homotopy_invariance_check(
    fam0: OperatorFamily,
    fam1: OperatorFamily,
    path: Sequence[OperatorFamily],
    ts: Sequence[float] | None = None,
    lam: complex = 0.0,
    tol: Tolerances = DEFAULT,
) -> HomotopyReport:
    """Verify Fredholmness along a sampled homotopy, then compare endpoint indices.

    Returns a report with ``fredholm_path=False`` and a witness when some
    (t, x) fails to be Fredholm; in that case nothing is claimed.
    """
    if len(path) < 2:
        raise PreconditionError("path needs at least two families")
    if not (families_equal(path[0], fam0) and families_equal(path[-1], fam1)):
        raise PreconditionError("path endpoints do not match fam0 and fam1")
    if any(p.space != fam0.space for p in path):
        raise StructuralError("path families live on different spaces")
    ts = list(np.linspace(0.0, 1.0, len(path))) if ts is None else list(ts)
    if len(ts) != len(path):
        raise PreconditionError("t-grid length must match path length")
    worst = None
    for t, fam in zip(ts, path):
        for p in sample_family(fam):
            rep = point_fredholm(p.spec, lam, tol)
            if not rep.fredholm:
                cand = {"t": float(t), "point": p.tag, "essential_gap": rep.essential_gap}
                if worst is None or rep.essential_gap < worst["essential_gap"]:
                    worst = cand
    if worst is not None:
        return HomotopyReport(False, witness=worst)
    i0 = family_index(fam0, lam, tol)
    i1 = family_index(fam1, lam, tol)
    if i0 != i1:
        # cannot happen for a genuinely Fredholm path; surfaces a sampling problem
        raise DiscretizationError(f"endpoint indices differ along a Fredholm path: {i0} vs {i1}")
    return HomotopyReport(True, i0, i1)


def local_constancy_radius(fam: OperatorFamily, lam: complex = 0.0, tol: Tolerances = DEFAULT) -> float:
    """Half the smallest essential gap over sampled points.

    Any family whose essential-norm distance to ``fam`` stays below this radius
    at every sampled point has the same index vector.
    """
    gaps = []
    bad = []
    for p in sample_family(fam):
        rep = point_fredholm(p.spec, lam, tol)
        if not rep.fredholm:
            bad.append((p.tag, rep.essential_gap))
        gaps.append(rep.essential_gap)
    if bad:
        raise NotFredholmFamilyError(f"family is not Fredholm at lambda={lam}", offending=bad)
    return 0.5 * min(gaps)


def sup_distance(s: OperatorFamily, t: OperatorFamily, essential: bool = False, tol: Tolerances = DEFAULT) -> float:
    """Sup over sampled points of ``||s_x - t_x||``.

    ``essential=True`` uses the Calkin-algebra norm, otherwise the norm upper bound.
    """
    diff = combine_families(1.0, s, -1.0, t)
    if essential:
        return max(essential_norm(p.spec, tol.norm_samples) for p in sample_family(diff))
    return max(p.spec.norm_bound() for p in sample_family(diff))


def is_compact_family(fam: OperatorFamily) -> bool:
    return all(is_compact_spec(p.spec) for p in sample_family(fam))


def _default_probes(fam: OperatorFamily) -> list[OperatorFamily]:
    ref = next(iter(fam.assignment.values()))
    probes = [OperatorFamily.constant(fam.space, identity_like(ref), fam.edge_samples)]
    if fam.kind == "toeplitz":
        probes.append(OperatorFamily.constant(fam.space, toeplitz({1: 1.0, -2: 0.5}), fam.edge_samples))
    else:
        core = ref.core
        head = [complex(j + 1) for j in range(len(core.head))]
        tails = [complex(2 + j) for j in range(len(core.tails))]
        probes.append(OperatorFamily.constant(fam.space, diagonal(head, tails), fam.edge_samples))
    return probes


def ideal_property_holds(fam: OperatorFamily, compact: OperatorFamily) -> bool:
    """Both ``fam * compact`` and ``compact * fam`` are compact families."""
    return is_compact_family(compose_families(fam, compact)) and is_compact_family(
        compose_families(compact, fam)
    )


@dataclass(frozen=True)
class ClosureReport:
    passed: bool
    limit_compact: bool
    ideal_ok: bool
    distances: tuple[float, ...]
    reason: str = ""


def ideal_closure_check(
    seq: Sequence[OperatorFamily],
    limit: OperatorFamily,
    probes: Iterable[OperatorFamily] | None = None,
    conv_tol: float = 1e-6,
) -> ClosureReport:
    """Check that a norm-convergent sequence of compact families has a compact limit.

    When the limit is not compact the report fails and the distances show the
    gap staying bounded below. When the limit is compact the sequence must be
    nonincreasing in sup-norm distance and reach ``conv_tol``; otherwise the
    result is inconclusive.
    """
    if not seq:
        raise PreconditionError("empty sequence")
    for k, f in enumerate(seq):
        if not is_compact_family(f):
            raise PreconditionError(f"sequence member {k} is not a compact family")
    dists = tuple(sup_distance(f, limit) for f in seq)
    limit_compact = is_compact_family(limit)
    if not limit_compact:
        return ClosureReport(False, False, False, dists, "limit family is not compact")
    nonincreasing = all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    if not (nonincreasing and dists[-1] <= conv_tol):
        raise InconclusiveError(f"sequence does not converge to the limit (distances {dists[-3:]})")
    probes = list(probes) if probes is not None else _default_probes(limit)
    ideal_ok = all(ideal_property_holds(p, limit) for p in probes) and all(
        ideal_property_holds(p, f) for p in probes for f in seq
    )
    return ClosureReport(ideal_ok, True, ideal_ok, dists, "" if ideal_ok else "ideal property failed")


def quotient_invertible(fam: OperatorFamily, lam: complex = 0.0, tol: Tolerances = DEFAULT) -> bool:
    """Invertibility of the image in the Calkin algebra at every sampled point."""
    gaps = [essential_gap(p.spec, lam, tol) for p in sample_family(fam)]
    return min(gaps) >= tol.fredholm_margin
