"""Finite graph models of a parameter space and its connected components."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import StructuralError


@dataclass(frozen=True)
class ParamSpace:
    """Vertices are sample points, edges are adjacency between them."""

    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...] = ()

    def __init__(self, vertices: Iterable[int], edges: Iterable[Iterable[int]] = ()):
        verts = tuple(int(v) for v in vertices)
        pairs = []
        for e in edges:
            a, b = (int(x) for x in e)
            pairs.append((min(a, b), max(a, b)))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(sorted(set(pairs))))
        self._validate()

    def _validate(self) -> None:
        if not self.vertices:
            raise StructuralError("parameter space needs at least one vertex")
        if any(v < 0 for v in self.vertices):
            raise StructuralError("vertex ids must be non-negative")
        if len(set(self.vertices)) != len(self.vertices):
            raise StructuralError("duplicate vertex ids")
        known = set(self.vertices)
        for a, b in self.edges:
            if a == b:
                raise StructuralError(f"self-loop at vertex {a}")
            for v in (a, b):
                if v not in known:
                    raise StructuralError(f"edge ({a}, {b}) has undeclared endpoint {v}")

    def with_edge(self, a: int, b: int) -> "ParamSpace":
        return ParamSpace(self.vertices, self.edges + ((a, b),))

    @classmethod
    def path(cls, n: int) -> "ParamSpace":
        return cls(range(n), [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def cycle(cls, n: int, offset: int = 0) -> "ParamSpace":
        vs = [offset + i for i in range(n)]
        return cls(vs, [(vs[i], vs[(i + 1) % n]) for i in range(n)])

    @classmethod
    def disjoint(cls, *spaces: "ParamSpace") -> "ParamSpace":
        verts, edges = [], []
        for s in spaces:
            verts.extend(s.vertices)
            edges.extend(s.edges)
        return cls(verts, edges)


@dataclass(frozen=True)
class ComponentLabeling:
    label: dict[int, int] = field(hash=False)
    count: int

    def members(self, comp: int) -> list[int]:
        return sorted(v for v, c in self.label.items() if c == comp)

    def ids(self) -> list[int]:
        return sorted(set(self.label.values()))


def _find(parent: dict[int, int], v: int) -> int:
    root = v
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        parent[v], v = root, parent[v]
    return root


def components(space: ParamSpace) -> ComponentLabeling:
    """Label each vertex by the smallest vertex id of its connected component."""
    space._validate()
    parent = {v: v for v in space.vertices}
    for a, b in space.edges:
        ra, rb = _find(parent, a), _find(parent, b)
        if ra != rb:
            # smaller id always wins, so roots are canonical labels
            lo, hi = min(ra, rb), max(ra, rb)
            parent[hi] = lo
    label = {v: _find(parent, v) for v in sorted(space.vertices)}
    return ComponentLabeling(label=label, count=len(set(label.values())))


def representatives(labeling: ComponentLabeling) -> list[int]:
    return labeling.ids()
