"""Polynomial functional calculus on operator families."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .config import DEFAULT, Tolerances
from .errors import IllPosedError, PreconditionError, StructuralError
from .family import IndexVector, OperatorFamily, sample_family
from .fredholm import essential_gap, point_fredholm
from .op_model import OperatorSpec, identity_like, linear_combine, multiply
from .param_space import representatives


@dataclass(frozen=True)
class Poly:
    """Polynomial with complex coefficients in ascending degree."""

    coefficients: tuple[complex, ...]

    def __init__(self, coefficients: Sequence[complex]):
        cs = [complex(c) for c in coefficients]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coefficients", tuple(cs))
        if self.degree < 1:
            raise StructuralError("polynomial must have degree >= 1")

    @classmethod
    def from_roots(cls, roots: Sequence[complex], lead: complex = 1.0) -> "Poly":
        # np.poly gives descending order
        return cls(list(lead * np.poly(np.asarray(roots, dtype=complex)))[::-1])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)

    def derivative(self, x):
        d = np.polynomial.polynomial.polyder(self.coefficients)
        return np.polynomial.polynomial.polyval(x, d)

    def __mul__(self, other: "Poly") -> "Poly":
        return Poly(np.polynomial.polynomial.polymul(self.coefficients, other.coefficients))


@dataclass(frozen=True)
class RootList:
    roots: tuple[tuple[complex, int], ...]

    def __iter__(self):
        return iter(self.roots)

    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.roots)


def companion_matrix(p: Poly) -> np.ndarray:
    c = np.asarray(p.coefficients, dtype=complex)
    n = p.degree
    m = np.zeros((n, n), dtype=complex)
    m[1:, :-1] = np.eye(n - 1)
    m[:, -1] = -c[:-1] / c[-1]
    return m


def poly_roots(p: Poly, tol: Tolerances = DEFAULT) -> RootList:
    """Roots from companion-matrix eigenvalues, clustered within ``cluster_tol``."""
    eig = np.linalg.eigvals(companion_matrix(p))
    # single-linkage clustering; degree is small so quadratic work is fine
    parent = list(range(eig.size))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(eig.size):
        for j in range(i + 1, eig.size):
            if abs(eig[i] - eig[j]) <= tol.cluster_tol:
                parent[find(j)] = find(i)
    groups: dict[int, list[complex]] = {}
    for i, z in enumerate(eig):
        groups.setdefault(find(i), []).append(z)
    roots = []
    for zs in groups.values():
        centre = complex(np.mean(zs))
        # snap float dust so that e.g. 0 prints as 0
        centre = complex(round(centre.real, 12) + 0.0, round(centre.imag, 12) + 0.0)
        roots.append((centre, len(zs)))
    roots.sort(key=lambda r: (r[0].real, r[0].imag))
    return RootList(tuple(roots))


def poly_apply_spec(spec: OperatorSpec, p: Poly) -> OperatorSpec:
    """Horner evaluation of ``p(T)`` inside the model class."""
    ident = identity_like(spec)
    cs = p.coefficients
    out = linear_combine(cs[-1], ident, 0.0, ident)
    for c in reversed(cs[:-1]):
        out = linear_combine(1.0, multiply(out, spec), c, ident)
    return out


def poly_apply(fam: OperatorFamily, p: Poly) -> OperatorFamily:
    return fam.map(lambda t: poly_apply_spec(t, p))


def fredholm_spectrum(fam: OperatorFamily, theta_samples: int = 2048) -> np.ndarray:
    """Sample cloud of the union of essential spectra over the sampled family."""
    pts = []
    for p in sample_family(fam):
        if p.spec.symbol is not None:
            pts.append(p.spec.symbol.samples(theta_samples))
        else:
            pts.append(np.array(sorted(p.spec.core.essential_spectrum(), key=lambda z: (z.real, z.imag))))
    return np.concatenate(pts)


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two finite point clouds in the plane."""
    pa = np.column_stack([a.real, a.imag])
    pb = np.column_stack([b.real, b.imag])
    d_ab, _ = cKDTree(pb).query(pa)
    d_ba, _ = cKDTree(pa).query(pb)
    return float(max(d_ab.max(), d_ba.max()))


@dataclass(frozen=True)
class SpectralMapResult:
    passed: bool
    distance: float
    tolerance: float


def spectral_map_check(fam: OperatorFamily, p: Poly, theta_samples: int = 2048) -> SpectralMapResult:
    """Compare ``p(sigma_F(T))`` with ``sigma_F(p(T))`` as sample clouds."""
    curve = fredholm_spectrum(fam, theta_samples)
    image = p(curve)
    mapped = fredholm_spectrum(poly_apply(fam, p), theta_samples)
    dist = hausdorff(image, mapped)
    scale = max(1.0, float(np.max(np.abs(p.derivative(curve)))))
    tolerance = 10.0 / theta_samples * scale
    return SpectralMapResult(dist <= tolerance, dist, tolerance)


def index_via_roots(fam: OperatorFamily, p: Poly, tol: Tolerances = DEFAULT) -> IndexVector:
    """Index of ``p(T)`` as the multiplicity-weighted sum of ``ind(T_x - root)``.

    Roots where ``T_x - root`` has index zero contribute nothing, so whether a
    root lies in the spectrum or the resolvent set never has to be decided.
    """
    roots = poly_roots(p, tol)
    sampled = sample_family(fam)
    for pt in sampled:
        for r, _ in roots:
            gap = essential_gap(pt.spec, r, tol)
            if gap < tol.fredholm_margin:
                raise IllPosedError(
                    f"root {r} lies within {gap:.3g} of the essential spectrum at {pt.tag}"
                )
    out = {}
    for rep in representatives(sampled.labeling):
        spec = fam.assignment[rep]
        out[rep] = sum(m * point_fredholm(spec, r, tol).index for r, m in roots)
    return IndexVector(out)
