import pytest

from solenoid_kit.dynamics import (CircleMap, Point, Subshift, branch,
                                   branch_count, branch_of, cell_midpoints, cell_table,
                                   circle_index, circle_point, forward, parse_system,
                                   point_value, preimages, same_point,
                                   structure_flags, system_to_json)
from solenoid_kit.errors import (BranchOutOfRange, ConfigError, EmptyWord,
                                 InvalidPoint)

from conftest import CANTOR, GOLDEN


def test_circle_forward_doubles():
    S = CircleMap(2)
    y = forward(S, circle_point(2, 3, 3))
    assert circle_index(S, y) == 6
    assert len(y) == 3


def test_word_forward_drops_first_symbol():
    assert forward(Subshift(((1, 1), (1, 1))), Point((0, 1, 1))).word == (1, 1)
    assert forward(CANTOR, Point((0, 2, 2))).word == (2, 2)


def test_forward_errors():
    with pytest.raises(EmptyWord):
        forward(CANTOR, Point(()))
    with pytest.raises(InvalidPoint):
        forward(GOLDEN, Point((1, 1, 0)))
    with pytest.raises(InvalidPoint):
        forward(CANTOR, Point((1,)))


def test_preimages_map_back():
    for sys, p in [(CircleMap(3), circle_point(3, 5, 2)), (GOLDEN, Point((0, 1))),
                   (CANTOR, Point((2, 0)))]:
        for y in preimages(sys, p):
            assert same_point(sys, forward(sys, y), p)


def test_golden_branch_counts():
    assert branch_count(GOLDEN, Point((0,))) == 2
    assert branch_count(GOLDEN, Point((1,))) == 1
    assert [q.word for q in preimages(GOLDEN, Point((1, 0)))] == [(0, 1, 0)]


def test_branch_out_of_range():
    with pytest.raises(BranchOutOfRange):
        branch(GOLDEN, 1, Point((1,)))


def test_branch_of_inverts_branch():
    for sys, p in [(CircleMap(4), circle_point(4, 7, 2)), (GOLDEN, Point((0, 0))),
                   (CANTOR, Point((2,)))]:
        for k in range(branch_count(sys, p)):
            assert branch_of(sys, branch(sys, k, p)) == k


def test_circle_branch_values():
    S = CircleMap(3)
    x = circle_point(3, 1, 1)
    vals = [point_value(S, branch(S, k, x)) for k in range(3)]
    assert [float(v) for v in vals] == pytest.approx([1 / 9, 4 / 9, 7 / 9])


def test_subshift_must_be_onto():
    with pytest.raises(ValueError):
        Subshift(((1, 0), (1, 0)))


def test_structure_flags():
    assert structure_flags(GOLDEN) == {"onto": True, "aperiodic": True, "max_branches": 2}
    assert not structure_flags(Subshift(((0, 1), (1, 0))))["aperiodic"]


def test_cell_table_golden_counts():
    # admissible words of length d are counted by Fibonacci numbers
    sizes = [cell_table(GOLDEN, d).size for d in range(1, 8)]
    assert sizes == [2, 3, 5, 8, 13, 21, 34]


def test_cell_table_tail_parent_consistent():
    t = cell_table(GOLDEN, 5)
    up = cell_table(GOLDEN, 4)
    for c, w in enumerate(t.words):
        assert t.parent[c] == up.index(tuple(w[:-1]))
        assert t.tail[c] == up.index(tuple(w[1:]))


def test_cantor_midpoints_are_hull_centres():
    mids = cell_midpoints(CANTOR, 1)
    assert mids == pytest.approx([1 / 6, 5 / 6])


def test_system_json_roundtrip():
    for sys in [CircleMap(5), GOLDEN, CANTOR]:
        assert parse_system(system_to_json(sys)) == sys
    with pytest.raises(ConfigError):
        parse_system({"type": "torus"})
