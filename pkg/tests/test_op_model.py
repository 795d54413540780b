import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus import enlarged_product, random_compact, random_symbol, random_toeplitz
from fredfam import diagonal, essential_norm, linear_combine, multiply, symbol_eval, toeplitz, truncate
from fredfam.errors import PreconditionError, UnsupportedCombinationError
from fredfam.op_model import FiniteRankPart, LaurentSymbol, hankel_remainder, section


S = toeplitz({1: 1.0})
S_STAR = toeplitz({-1: 1.0})


def test_truncate_shift():
    np.testing.assert_array_equal(truncate(S, 3), [[0, 0, 0], [1, 0, 0], [0, 1, 0]])


def test_truncate_diagonal():
    np.testing.assert_array_equal(truncate(diagonal([5], [0]), 3), np.diag([5, 0, 0]))


def test_truncate_superposes_compact_part():
    spec = toeplitz({1: 1.0}, FiniteRankPart.rank_one(0, 0))
    np.testing.assert_array_equal(truncate(spec, 2), [[1, 0], [1, 0]])


def test_truncate_round_robin_tails():
    d = diagonal([7], [1, 2, 3])
    np.testing.assert_array_equal(np.diag(truncate(d, 8)), [7, 1, 2, 3, 1, 2, 3, 1])


def test_truncate_too_small_names_minimum():
    spec = toeplitz({3: 1.0})
    with pytest.raises(PreconditionError, match="minimum admissible n is 4"):
        truncate(spec, 3)


def test_linear_combine_examples():
    s = linear_combine(1, S, 1, S_STAR)
    assert s.symbol.as_dict() == {-1: 1, 1: 1}
    t = linear_combine(1, S, -0.3, toeplitz({0: 1.0}))
    assert t.symbol.as_dict() == {0: -0.3, 1: 1}
    k = toeplitz({2: 1.0}, FiniteRankPart.rank_one(1, 0, 4.0))
    u = linear_combine(0, S, 1, k)
    np.testing.assert_array_equal(truncate(u, 5), truncate(k, 5))


def test_cross_kind_combination_is_an_error():
    with pytest.raises(UnsupportedCombinationError):
        linear_combine(1, S, 1, diagonal([], [1]))
    with pytest.raises(UnsupportedCombinationError):
        multiply(S, diagonal([], [1]))
    with pytest.raises(UnsupportedCombinationError):
        linear_combine(1, diagonal([1], [1]), 1, diagonal([1, 2], [1]))


def test_shift_identities():
    ss_star = multiply(S, S_STAR)
    assert ss_star.symbol.as_dict() == {0: 1}
    np.testing.assert_array_equal(ss_star.compact.matrix(), [[-1]])
    s_star_s = multiply(S_STAR, S)
    assert s_star_s.symbol.as_dict() == {0: 1}
    assert s_star_s.compact.is_empty()


def test_hankel_remainder_matches_direct_sum():
    rng = np.random.default_rng(3)
    a, b = random_symbol(rng, 3), random_symbol(rng, 3)
    r = hankel_remainder(a, b)
    n = 20
    direct = section(toeplitz(a), n, 3 * n) @ section(toeplitz(b), 3 * n, n) - section(toeplitz(a * b), n, n)
    full = np.zeros((n, n), dtype=complex)
    full[: r.shape[0], : r.shape[1]] = r
    np.testing.assert_allclose(direct, -full, atol=1e-12)


def test_multiply_against_enlarged_matrix_product():
    rng = np.random.default_rng(11)
    for _ in range(10):
        s = toeplitz(random_symbol(rng, 2), random_compact(rng, 2))
        t = toeplitz(random_symbol(rng, 2), random_compact(rng, 2))
        n = 12
        prod = truncate(multiply(s, t), n)
        oracle = enlarged_product(s, t, n)
        for _ in range(20):
            x = rng.normal(size=n) + 1j * rng.normal(size=n)
            np.testing.assert_allclose(prod @ x, oracle @ x, atol=1e-10)


def test_multiply_diagonal_with_compact_cross_terms():
    rng = np.random.default_rng(5)
    s = diagonal([1, 2j], [3, -1], random_compact(rng, 2))
    t = diagonal([0.5], [2, 1, 1j], random_compact(rng, 1))
    n = 16
    np.testing.assert_allclose(truncate(multiply(s, t), n), enlarged_product(s, t, n), atol=1e-12)


def test_symbol_eval():
    assert symbol_eval(LaurentSymbol({1: 1}), 0.0) == pytest.approx(1)
    assert abs(symbol_eval(LaurentSymbol({1: 1, -1: 1}), np.pi / 2)) < 1e-15
    assert symbol_eval(LaurentSymbol({0: 3, 1: 0}), 1.234) == pytest.approx(3)


def test_essential_norm_examples():
    assert essential_norm(S) == pytest.approx(1)
    assert essential_norm(toeplitz({1: 1.0}, FiniteRankPart.rank_one(0, 0, 100))) == pytest.approx(1)
    assert essential_norm(diagonal([7], [0, 1])) == 1


specs = st.integers(0, 2**32 - 1).map(lambda seed: random_toeplitz(np.random.default_rng(seed), 3, 2))
scalars = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@given(scalars, specs, scalars, specs)
def test_truncate_is_linear(alpha, s, beta, t):
    n = max(s.min_truncation(), t.min_truncation()) + 2
    lhs = truncate(linear_combine(alpha, s, beta, t), n)
    rhs = alpha * truncate(s, n) + beta * truncate(t, n)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@settings(max_examples=30)
@given(specs, specs, specs)
def test_multiply_is_associative(s, t, u):
    left = multiply(multiply(s, t), u)
    right = multiply(s, multiply(t, u))
    n = max(left.min_truncation(), right.min_truncation()) + 4
    np.testing.assert_allclose(truncate(left, n), truncate(right, n), atol=1e-12, rtol=0)


@settings(max_examples=30)
@given(specs, specs)
def test_essential_norm_submultiplicative(s, t):
    assert essential_norm(multiply(s, t)) <= essential_norm(s) * essential_norm(t) + 1e-9


@given(specs, st.integers(0, 2**32 - 1))
def test_essential_norm_ignores_compact_part(s, seed):
    k = random_compact(np.random.default_rng(seed), 3)
    assert essential_norm(s.with_compact(k)) == essential_norm(s)
