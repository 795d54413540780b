"""Model operators on square-summable sequences over the naturals.

Two classes are supported, each closed under sums and products:

* Toeplitz operators with Laurent-polynomial symbol, plus a finite-rank part;
* diagonal operators with a finite head and a periodic tail, plus a finite-rank part.

Matrix convention: the Toeplitz operator of ``a = sum c_k z^k`` has entries
``M[i, j] = c_{i-j}``, so ``z`` is the forward (unilateral) shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import lcm
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import PreconditionError, StructuralError, UnsupportedCombinationError

TOEPLITZ = "toeplitz"
DIAGONAL = "diagonal"


def theta_grid(samples: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(samples) / samples


@dataclass(frozen=True)
class LaurentSymbol:
    """Finitely supported Laurent polynomial ``a(z) = sum_k c_k z^k``."""

    coeffs: tuple[tuple[int, complex], ...]

    def __init__(self, coeffs: Mapping[int, complex] | Iterable[tuple[int, complex]] = ()):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: dict[int, complex] = {}
        for k, c in items:
            merged[int(k)] = merged.get(int(k), 0j) + complex(c)
        object.__setattr__(self, "coeffs", tuple(sorted(merged.items())))

    @classmethod
    def monomial(cls, k: int, c: complex = 1.0) -> "LaurentSymbol":
        return cls({k: c})

    def as_dict(self) -> dict[int, complex]:
        return dict(self.coeffs)

    def coefficient(self, k: int) -> complex:
        return self.as_dict().get(k, 0j)

    def trimmed(self) -> "LaurentSymbol":
        return LaurentSymbol({k: c for k, c in self.coeffs if c != 0})

    @property
    def plus_degree(self) -> int:
        return max([k for k, c in self.coeffs if c != 0 and k > 0], default=0)

    @property
    def minus_degree(self) -> int:
        return max([-k for k, c in self.coeffs if c != 0 and k < 0], default=0)

    @property
    def degree(self) -> int:
        return max(self.plus_degree, self.minus_degree)

    def is_zero(self) -> bool:
        return all(c == 0 for _, c in self.coeffs)

    def __call__(self, theta) -> np.ndarray | complex:
        th = np.asarray(theta, dtype=float)
        out = np.zeros(th.shape, dtype=complex)
        for k, c in self.coeffs:
            if c != 0:
                out += c * np.exp(1j * k * th)
        return complex(out) if out.ndim == 0 else out

    def samples(self, n: int) -> np.ndarray:
        """Values on ``theta_grid(n)``; cached and read-only."""
        return _symbol_samples(self.coeffs, int(n))

    def __mul__(self, other: "LaurentSymbol") -> "LaurentSymbol":
        prod: dict[int, complex] = {}
        for k, c in self.coeffs:
            for l, d in other.coeffs:
                prod[k + l] = prod.get(k + l, 0j) + c * d
        return LaurentSymbol(prod).trimmed()

    def conj_reflect(self) -> "LaurentSymbol":
        """Symbol of the adjoint Toeplitz operator."""
        return LaurentSymbol({-k: np.conj(c) for k, c in self.coeffs})


@lru_cache(maxsize=4096)
def _symbol_samples(coeffs: tuple[tuple[int, complex], ...], n: int) -> np.ndarray:
    if all(abs(k) < n for k, _ in coeffs):
        # a(theta_j) = sum_k c_k w^(jk): one inverse FFT with wrapped exponents
        buf = np.zeros(n, dtype=complex)
        for k, c in coeffs:
            buf[k % n] += c
        out = n * np.fft.ifft(buf)
    else:
        out = LaurentSymbol(coeffs)(theta_grid(n))
    out.setflags(write=False)
    return out


def symbol_eval(sym: LaurentSymbol, theta: float) -> complex:
    return sym(theta)


def _vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=complex).ravel()
    nz = np.flatnonzero(v)
    return v[: nz[-1] + 1].copy() if nz.size else np.zeros(0, dtype=complex)


@dataclass(frozen=True, eq=False)
class FiniteRankPart:
    """Sum of rank-one operators ``x -> u <x, v>`` with finitely supported u, v.

    Matrix entries are ``sum u_i * conj(v_j)``.
    """

    terms: tuple[tuple[np.ndarray, np.ndarray], ...] = ()

    def __init__(self, terms: Iterable[tuple[Sequence[complex], Sequence[complex]]] = ()):
        cleaned = []
        for u, v in terms:
            u, v = _vec(u), _vec(v)
            if u.size and v.size:
                cleaned.append((u, v))
        object.__setattr__(self, "terms", tuple(cleaned))

    @classmethod
    def from_matrix(cls, k: np.ndarray) -> "FiniteRankPart":
        """One term per nonzero row: row i becomes ``e_i (x) conj(k[i])``."""
        k = np.asarray(k, dtype=complex)
        terms = []
        for i in range(k.shape[0]):
            if np.any(k[i] != 0):
                e = np.zeros(i + 1, dtype=complex)
                e[i] = 1.0
                terms.append((e, np.conj(k[i])))
        return cls(terms)

    @classmethod
    def rank_one(cls, i: int, j: int, c: complex = 1.0) -> "FiniteRankPart":
        """``c * e_i (x) e_j``, i.e. a single matrix entry at (i, j)."""
        u = np.zeros(i + 1, dtype=complex)
        v = np.zeros(j + 1, dtype=complex)
        u[i], v[j] = c, 1.0
        return cls([(u, v)])

    @property
    def rows(self) -> int:
        return max((u.size for u, _ in self.terms), default=0)

    @property
    def cols(self) -> int:
        return max((v.size for _, v in self.terms), default=0)

    @property
    def max_support(self) -> int:
        """Largest index carrying a nonzero entry of some u or v (-1 when empty)."""
        return max(self.rows, self.cols) - 1

    def is_empty(self) -> bool:
        return not self.terms

    def matrix(self, rows: int | None = None, cols: int | None = None) -> np.ndarray:
        rows = self.rows if rows is None else rows
        cols = self.cols if cols is None else cols
        out = np.zeros((rows, cols), dtype=complex)
        for u, v in self.terms:
            r, c = min(rows, u.size), min(cols, v.size)
            out[:r, :c] += np.outer(u[:r], np.conj(v[:c]))
        return out

    def scaled(self, alpha: complex) -> "FiniteRankPart":
        if alpha == 0:
            return FiniteRankPart()
        return FiniteRankPart((alpha * u, v) for u, v in self.terms)

    def __add__(self, other: "FiniteRankPart") -> "FiniteRankPart":
        return FiniteRankPart(self.terms + other.terms)

    def normalized(self) -> "FiniteRankPart":
        return FiniteRankPart.from_matrix(self.matrix())

    def norm_bound(self) -> float:
        """Operator norm, exact: the largest singular value of the finite matrix."""
        if not self.terms:
            return 0.0
        return float(np.linalg.norm(self.matrix(), 2))


@dataclass(frozen=True)
class DiagonalCore:
    """Diagonal entries: ``head[j]`` for j < len(head), then ``tails`` round-robin."""

    head: tuple[complex, ...]
    tails: tuple[complex, ...]

    def __init__(self, head: Iterable[complex], tails: Iterable[complex]):
        object.__setattr__(self, "head", tuple(complex(x) for x in head))
        object.__setattr__(self, "tails", tuple(complex(x) for x in tails))
        if not self.tails:
            raise StructuralError("diagonal tail list must be nonempty")

    def entry(self, j: int) -> complex:
        if j < len(self.head):
            return self.head[j]
        return self.tails[(j - len(self.head)) % len(self.tails)]

    def entries(self, n: int) -> np.ndarray:
        return np.array([self.entry(j) for j in range(n)], dtype=complex)

    def spectrum(self) -> set[complex]:
        return set(self.head) | set(self.tails)

    def essential_spectrum(self) -> set[complex]:
        return set(self.tails)

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.head + self.tails)


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """``T = Toeplitz(symbol)`` or ``Diag(core)``, plus the finite-rank ``compact`` part."""

    symbol: LaurentSymbol | None = None
    core: DiagonalCore | None = None
    compact: FiniteRankPart = field(default_factory=FiniteRankPart)

    def __post_init__(self):
        if (self.symbol is None) == (self.core is None):
            raise StructuralError("exactly one of symbol or core must be given")

    @property
    def kind(self) -> str:
        return TOEPLITZ if self.symbol is not None else DIAGONAL

    @property
    def band(self) -> tuple[int, int]:
        """(lower, upper) bandwidth of the non-compact part."""
        if self.symbol is not None:
            return self.symbol.plus_degree, self.symbol.minus_degree
        return 0, 0

    def min_truncation(self) -> int:
        m = self.symbol.degree if self.symbol is not None else len(self.core.head)
        return max(m, self.compact.max_support) + 1

    def with_compact(self, compact: FiniteRankPart) -> "OperatorSpec":
        return OperatorSpec(self.symbol, self.core, compact)

    def without_compact(self) -> "OperatorSpec":
        return self.with_compact(FiniteRankPart())

    def norm_bound(self) -> float:
        if self.symbol is not None:
            base = sum(abs(c) for _, c in self.symbol.coeffs)
        else:
            base = max(abs(x) for x in self.core.head + self.core.tails)
        return float(base + self.compact.norm_bound())

    def shape_key(self):
        if self.symbol is not None:
            return (TOEPLITZ,)
        return (DIAGONAL, len(self.core.head), len(self.core.tails))


def toeplitz(coeffs, compact: FiniteRankPart | None = None) -> OperatorSpec:
    sym = coeffs if isinstance(coeffs, LaurentSymbol) else LaurentSymbol(coeffs)
    return OperatorSpec(symbol=sym, compact=compact or FiniteRankPart())


def diagonal(head, tails, compact: FiniteRankPart | None = None) -> OperatorSpec:
    return OperatorSpec(core=DiagonalCore(head, tails), compact=compact or FiniteRankPart())


def identity_like(spec: OperatorSpec) -> OperatorSpec:
    if spec.kind == TOEPLITZ:
        return toeplitz({0: 1.0})
    return diagonal([1.0] * len(spec.core.head), [1.0] * len(spec.core.tails))


def core_section(spec: OperatorSpec, rows: int, cols: int) -> np.ndarray:
    """Leading rows x cols block of the non-compact part."""
    out = np.zeros((rows, cols), dtype=complex)
    if spec.symbol is not None:
        for k, c in spec.symbol.coeffs:
            if c != 0:
                out += c * np.eye(rows, cols, k=-k)
    else:
        d = spec.core.entries(min(rows, cols))
        idx = np.arange(d.size)
        out[idx, idx] = d
    return out


def section(spec: OperatorSpec, rows: int, cols: int) -> np.ndarray:
    """Leading rows x cols block of the full operator, no size precondition."""
    out = core_section(spec, rows, cols)
    if not spec.compact.is_empty():
        out += spec.compact.matrix(rows, cols)
    return out


def truncate(spec: OperatorSpec, n: int) -> np.ndarray:
    """Leading n x n finite section."""
    need = spec.min_truncation()
    if n < need:
        raise PreconditionError(f"truncation size {n} too small; minimum admissible n is {need}")
    return section(spec, n, n)


def _check_same_kind(s: OperatorSpec, t: OperatorSpec) -> None:
    if s.kind != t.kind:
        raise UnsupportedCombinationError(f"cannot combine {s.kind} with {t.kind} operator")


def linear_combine(alpha: complex, s: OperatorSpec, beta: complex, t: OperatorSpec) -> OperatorSpec:
    """``alpha*s + beta*t`` inside one model class."""
    _check_same_kind(s, t)
    compact = s.compact.scaled(alpha) + t.compact.scaled(beta)
    if s.kind == TOEPLITZ:
        coeffs: dict[int, complex] = {}
        for scale, sym in ((alpha, s.symbol), (beta, t.symbol)):
            if scale == 0:
                continue
            for k, c in sym.coeffs:
                coeffs[k] = coeffs.get(k, 0j) + scale * c
        return OperatorSpec(symbol=LaurentSymbol(coeffs), compact=compact)
    if s.shape_key() != t.shape_key():
        raise UnsupportedCombinationError(
            f"diagonal shapes differ: {s.shape_key()[1:]} vs {t.shape_key()[1:]}"
        )
    a, b = s.core, t.core
    head = [alpha * x + beta * y for x, y in zip(a.head, b.head)]
    tails = [alpha * x + beta * y for x, y in zip(a.tails, b.tails)]
    return OperatorSpec(core=DiagonalCore(head, tails), compact=compact)


def hankel_remainder(a: LaurentSymbol, b: LaurentSymbol) -> np.ndarray:
    """Finite matrix R with ``T(a) T(b) = T(ab) - R``.

    ``R[i, j] = sum_{l >= 0} a_{i+l+1} b_{-(j+l+1)}``, nonzero only for
    i < deg+(a) and j < deg-(b).
    """
    p, q = a.plus_degree, b.minus_degree
    out = np.zeros((p, q), dtype=complex)
    if p == 0 or q == 0:
        return out
    ad, bd = a.as_dict(), b.as_dict()
    for i in range(p):
        for j in range(q):
            out[i, j] = sum(ad.get(i + l + 1, 0j) * bd.get(-(j + l + 1), 0j) for l in range(min(p, q)))
    return out


def _pad_add(acc: np.ndarray, m: np.ndarray) -> np.ndarray:
    r = max(acc.shape[0], m.shape[0])
    c = max(acc.shape[1], m.shape[1])
    out = np.zeros((r, c), dtype=complex)
    out[: acc.shape[0], : acc.shape[1]] += acc
    out[: m.shape[0], : m.shape[1]] += m
    return out


def multiply(s: OperatorSpec, t: OperatorSpec) -> OperatorSpec:
    """Exact product ``s t``; every finite-rank correction is accumulated explicitly."""
    _check_same_kind(s, t)
    k1, k2 = s.compact.matrix(), t.compact.matrix()
    r1, c1 = k1.shape
    r2, c2 = k2.shape
    lo_s, up_s = s.band
    lo_t, up_t = t.band
    acc = np.zeros((0, 0), dtype=complex)
    if s.kind == TOEPLITZ:
        base = OperatorSpec(symbol=s.symbol * t.symbol)
        acc = _pad_add(acc, -hankel_remainder(s.symbol, t.symbol))
    else:
        a, b = s.core, t.core
        n_head = max(len(a.head), len(b.head))
        period = lcm(len(a.tails), len(b.tails))
        head = [a.entry(j) * b.entry(j) for j in range(n_head)]
        tails = [a.entry(j) * b.entry(j) for j in range(n_head, n_head + period)]
        base = OperatorSpec(core=DiagonalCore(head, tails))
    if r2:
        # core(s) @ K2: columns of K2 spread downward by the lower bandwidth
        acc = _pad_add(acc, core_section(s, r2 + lo_s, r2) @ k2)
    if c1:
        # K1 @ core(t): rows of K1 spread right by the upper bandwidth
        acc = _pad_add(acc, k1 @ core_section(t, c1, c1 + up_t))
    if r2 and c1:
        inner = max(c1, r2)
        a1 = np.zeros((r1, inner), dtype=complex)
        a1[:, :c1] = k1
        b2 = np.zeros((inner, c2), dtype=complex)
        b2[:r2, :] = k2
        acc = _pad_add(acc, a1 @ b2)
    return base.with_compact(FiniteRankPart.from_matrix(acc))


def essential_norm(spec: OperatorSpec, samples: int = 2048) -> float:
    """Norm of the image in the Calkin algebra; the finite-rank part is invisible."""
    if spec.symbol is not None:
        return float(np.max(np.abs(spec.symbol.samples(samples))))
    return float(max(abs(x) for x in spec.core.tails))


def norm_bound(spec: OperatorSpec) -> float:
    return spec.norm_bound()


def is_compact_spec(spec: OperatorSpec) -> bool:
    if spec.symbol is not None:
        return spec.symbol.is_zero()
    return spec.core.is_zero()


def specs_equal(s: OperatorSpec, t: OperatorSpec, n: int | None = None, atol: float = 1e-12) -> bool:
    """Compare represented operators through a finite section large enough to see every difference."""
    if s.kind != t.kind:
        return False
    if n is None:
        n = max(s.min_truncation(), t.min_truncation())
        if s.kind == DIAGONAL:
            n += lcm(len(s.core.tails), len(t.core.tails))
        n += 1
    return bool(np.allclose(section(s, n, n), section(t, n, n), atol=atol, rtol=0))
