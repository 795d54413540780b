import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus import SPACES, corpus_families, random_family, root_count_winding
from fredfam import OperatorFamily, ParamSpace, diagonal, toeplitz
from fredfam.errors import (
    HypothesisViolation,
    InconclusiveError,
    PreconditionError,
    StructuralError,
)
from fredfam.family import combine_families
from fredfam.op_model import FiniteRankPart
from fredfam.weyl import (
    ComplexGrid,
    GridSet,
    close_under,
    essential_spectrum_family,
    kuratowski_limits,
    limit_scenario_check,
    semicontinuity_check,
    weyl_spectrum_direct,
    weyl_spectrum_family,
    weyl_spectrum_point,
)

S = toeplitz({1: 1.0})
GRID = ComplexGrid.square(2.0, 0.05)


def disk(grid, r):
    return GridSet.from_mask(grid, np.abs(grid.points()) <= r + 1e-12)


def near_circle(grid, z, r, width):
    return abs(abs(z) - r) <= width


def test_grid_cap_and_order():
    with pytest.raises(StructuralError):
        ComplexGrid(1, 0, 0, 1, 0.1)
    with pytest.raises(StructuralError):
        ComplexGrid(0, 1, 0, 1, 1e-5)
    assert ComplexGrid.square(2, 0.05).shape == (81, 81)


def test_shift_weyl_spectrum_is_disk_up_to_one_layer():
    w = weyl_spectrum_point(S, GRID)
    diff = w ^ disk(GRID, 1.0)
    assert all(near_circle(GRID, z, 1.0, GRID.h) for z in diff.complex_points())
    # interior points are in by index, exterior points out
    assert GRID.nearest(0.5j) in w and GRID.nearest(1.5) not in w


def test_diagonal_head_eigenvalue_is_excluded():
    w = weyl_spectrum_point(diagonal([5], [0]), GRID)
    assert w.members == {GRID.nearest(0)}


def test_identity_weyl_spectrum_is_one_point():
    assert weyl_spectrum_point(toeplitz({0: 1.0}), GRID).members == {GRID.nearest(1)}
    fam = OperatorFamily.constant(ParamSpace.path(3), toeplitz({0: 1.0}))
    assert weyl_spectrum_family(fam, GRID).members == {GRID.nearest(1)}


def test_two_vertex_union_of_disks():
    fam = OperatorFamily(ParamSpace([0, 1]), {0: S, 1: toeplitz({1: 2.0})})
    diff = weyl_spectrum_family(fam, GRID) ^ disk(GRID, 2.0)
    assert all(near_circle(GRID, z, 2.0, GRID.h) for z in diff.complex_points())


def test_essential_spectrum_examples():
    ess = essential_spectrum_family(OperatorFamily.single(S), GRID)
    assert all(abs(abs(z) - 1) <= GRID.h for z in ess.complex_points())
    assert len(ess) > 100
    ess_d = essential_spectrum_family(OperatorFamily.single(diagonal([], [0, 1])), GRID)
    assert ess_d.members == {GRID.nearest(0), GRID.nearest(1)}


def test_essential_inside_weyl_on_corpus():
    for fam in corpus_families():
        assert essential_spectrum_family(fam, GRID).issubset(weyl_spectrum_family(fam, GRID))


def test_scan_matches_direct_definition_on_coarse_grid():
    grid = ComplexGrid.square(2.0, 0.25)
    rng = np.random.default_rng(5)
    for fam in [OperatorFamily.single(S), random_family(rng, SPACES["path3"], edge_samples=2)]:
        assert weyl_spectrum_family(fam, grid) == weyl_spectrum_direct(fam, grid)


def test_scan_index_matches_root_count():
    grid = ComplexGrid.square(2.0, 0.2)
    sym = toeplitz({2: 1.0, -1: 0.4, 0: 0.3}).symbol
    w = weyl_spectrum_point(toeplitz(sym), grid)
    margin = grid.margin()
    curve = sym.samples(4096)
    for z in grid.points().ravel():
        if np.min(np.abs(curve - z)) < 2 * margin:
            continue
        inside = grid.nearest(z) in w
        assert inside == (root_count_winding(sym, z) != 0)


def test_kuratowski_constant_sequence():
    a = disk(GRID, 0.5)
    rep = kuratowski_limits([a] * 10)
    assert rep.converged and rep.liminf == a and rep.limsup == a


def test_kuratowski_shrinking_singleton():
    seq = [GridSet.from_points(GRID, [1 / n]) for n in range(1, 33)]
    rep = kuratowski_limits(seq, eps=GRID.h)
    assert rep.converged
    assert close_under(rep.liminf, GridSet.from_points(GRID, [0]), GRID.h)


def test_kuratowski_alternating_sets():
    p = GridSet.from_points(GRID, [-1.0])
    q = GridSet.from_points(GRID, [1.0])
    rep = kuratowski_limits([p, q] * 8)
    assert not rep.converged
    assert len(rep.liminf) == 0 and rep.limsup == p | q


def test_kuratowski_needs_enough_terms():
    with pytest.raises(PreconditionError):
        kuratowski_limits([disk(GRID, 1)] * 3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(-1.9, 1.9), st.floats(-1.9, 1.9)), min_size=1, max_size=6), st.integers(8, 14))
def test_liminf_inside_dilated_limsup(points, count):
    rng = np.random.default_rng(len(points) * count)
    seq = []
    for _ in range(count):
        jitter = rng.normal(scale=0.1, size=(len(points), 2))
        seq.append(GridSet.from_points(GRID, [complex(x + a, y + b) for (x, y), (a, b) in zip(points, jitter)]))
    rep = kuratowski_limits(seq)
    assert rep.liminf.issubset(rep.limsup.dilate(rep.eps))


def _harmonic(base, pert, count=32):
    return [combine_families(1.0, base, 1.0 / n, pert) for n in range(1, count + 1)]


def test_semicontinuity_rank_one_perturbation():
    base = OperatorFamily.single(S)
    pert = OperatorFamily.single(toeplitz({}, FiniteRankPart.rank_one(0, 0)))
    assert semicontinuity_check(_harmonic(base, pert), base, GRID).holds


def test_semicontinuity_shifted_symbol():
    base = OperatorFamily.single(S)
    res = semicontinuity_check(_harmonic(base, OperatorFamily.single(toeplitz({0: 1.0}))), base, GRID)
    assert res.holds and res.witness is None


def test_semicontinuity_constant_sequence():
    base = OperatorFamily.single(toeplitz({1: 1.0, -1: 0.5}))
    assert semicontinuity_check([base] * 8, base, GRID).holds


def test_semicontinuity_non_converging_is_inconclusive():
    base = OperatorFamily.single(S)
    with pytest.raises(InconclusiveError):
        semicontinuity_check([OperatorFamily.single(toeplitz({-1: 1.0}))] * 8, base, GRID)


def test_limit_commuting():
    base = OperatorFamily.single(S)
    res = limit_scenario_check("commuting", _harmonic(base, OperatorFamily.single(toeplitz({2: 1.0}))), base, GRID)
    assert res.holds and res.report.converged


def test_limit_normal_diagonal():
    base = OperatorFamily.single(diagonal([0.5 + 0.5j], [0, 1]))
    pert = OperatorFamily.single(diagonal([1.0], [0, 0]))
    res = limit_scenario_check("normal", _harmonic(base, pert), base, GRID)
    assert res.holds
    assert res.target.members == {GRID.nearest(0), GRID.nearest(1)}


def test_limit_totally_disconnected():
    heads = [1 / k for k in range(1, 6)]
    base = OperatorFamily.single(diagonal(heads, [0]))
    pert = OperatorFamily.single(diagonal([1.0] * 5, [0]))
    res = limit_scenario_check("totally_disconnected", _harmonic(base, pert), base, GRID)
    assert res.holds and res.target.members == {GRID.nearest(0)}


def test_limit_without_certificate_is_rejected():
    base = OperatorFamily.single(S)
    seq = _harmonic(base, OperatorFamily.single(toeplitz({-1: 1.0})))
    with pytest.raises(HypothesisViolation):
        limit_scenario_check("commuting", seq, base, GRID)
    with pytest.raises(HypothesisViolation):
        limit_scenario_check("normal", seq, base, GRID)


def test_close_under_is_symmetric():
    a, b = disk(GRID, 1.0), disk(GRID, 1.05)
    assert close_under(a, b, 0.1) and close_under(b, a, 0.1)
    assert not close_under(a, disk(GRID, 1.5), 0.1)
