import io as stdio

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thmc.basis import markov_basis
from thmc.core import PathTable, is_valid_move
from thmc.io import (ParseError, format_fiber, format_histogram, format_moves, format_paths,
                     load_fixture, parse_paths, parse_paths_text, read_moves)
from thmc.fiber import fiber_of


def test_plain_and_aggregated_lines():
    assert parse_paths_text(["1,1,2,2"]) == PathTable({(1, 1, 2, 2): 1}, 2, 4)
    assert parse_paths_text(["1 1 2 2"]) == PathTable({(1, 1, 2, 2): 1}, 2, 4)
    assert parse_paths_text(["1 1 2 2,3"], aggregated=True) == PathTable({(1, 1, 2, 2): 3}, 2, 4)


def test_comments_and_overrides():
    t = parse_paths_text(["# header", "", "1 1 1", "1 2 1"], states=3)
    assert (t.S, t.T, t.N) == (3, 3, 2)


def test_fixture():
    t = load_fixture("marijuana")
    assert (t.S, t.T, t.N) == (3, 3, 120)
    assert t[(1, 1, 1)] == 76


@pytest.mark.parametrize("lines, aggregated, lineno", [
    (["1 1 2", "1 2"], False, 2),
    (["1 1 2", "1 x 2"], False, 2),
    (["1 1 2,0"], True, 1),
    (["1 1 2"], True, 1),
    (["# c", "1 0 2"], False, 2),
])
def test_errors_carry_line_numbers(lines, aggregated, lineno):
    with pytest.raises(ParseError) as err:
        parse_paths_text(lines, aggregated=aggregated)
    assert err.value.line == lineno
    assert f"{lineno}:" in str(err.value)


def test_empty_input():
    with pytest.raises(ParseError):
        parse_paths(stdio.StringIO(""))
    with pytest.raises(ParseError):
        parse_paths(stdio.StringIO("# only a comment\n"))


def test_state_above_declared_s():
    with pytest.raises(ParseError):
        parse_paths_text(["1 3 1"], states=2)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 4), st.integers(3, 5), st.data())
def test_roundtrip(S, T, data):
    cells = data.draw(st.lists(st.integers(0, S ** T - 1), min_size=1, max_size=12))
    t = PathTable.from_key(sorted(cells), S, T)
    for aggregated in (True, False):
        back = parse_paths(stdio.StringIO(format_paths(t, aggregated)), aggregated=aggregated,
                           states=S)
        assert back == t


@pytest.mark.parametrize("S, T", [(2, 4), (3, 3)])
def test_move_file_roundtrip(S, T):
    moves = markov_basis(S, T).enumerate_moves()
    text = format_moves(moves, S, T)
    assert text.splitlines()[0] == f"{len(moves)} {S ** T}"
    back = read_moves(stdio.StringIO(text), S, T)
    assert back == moves
    assert all(is_valid_move(z) for z in back)


def test_move_file_errors():
    with pytest.raises(ParseError):
        read_moves(stdio.StringIO("1 8\n1 -1 0 0\n"), 2, 3)
    with pytest.raises(ParseError):
        read_moves(stdio.StringIO("1 16\n" + " ".join(["0"] * 16)), 2, 3)
    assert read_moves(stdio.StringIO("1 8\n0 0 0 0 0 0 0 0\n"), 2, 3) == []


def test_histogram_csv():
    text = format_histogram([(0.0, 1.5, 3), (1.5, 3.0, 0)])
    assert text.splitlines() == ["bin_left,bin_right,count", "0.000000,1.500000,3",
                                 "1.500000,3.000000,0"]


def test_fiber_dump():
    text = format_fiber(fiber_of(PathTable({(1, 1, 2, 1): 1}, 2, 4)))
    assert sorted(text.split("\n")[:-1]) == ["1 1 2 1,1", "1 2 1 1,1"]
