import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cranetraj.corridor import (
    InfeasibleCorridorError, ProfileError, StackProfile, bundled_profile, corridor_bounds,
    height_at, outline, parse_profile, profile_to_dict,
)
from cranetraj.spatial import SpatialGrid


def brute_height(profile, x):
    best = 0.0
    for s in profile.stacks:
        if s.start <= x <= s.end:
            best = max(best, s.height)
    return best


def test_height_at_examples():
    prof = StackProfile(0.75, ((0.4, 0.6, 0.3),))
    assert height_at(prof, 0.5) == 0.3
    assert height_at(prof, 0.2) == 0.0
    two = StackProfile(0.75, ((0.2, 0.4, 0.1), (0.4, 0.7, 0.5)), ground_clearance=0.1)
    assert height_at(two, 0.4) == 0.5 == brute_height(two, 0.4)


def test_height_at_vectorized_matches_scan():
    prof = bundled_profile()
    xs = np.linspace(-0.1, 1.1, 1201)
    np.testing.assert_array_equal(height_at(prof, xs), [brute_height(prof, x) for x in xs])


def test_bounds_without_stacks():
    b = corridor_bounds(StackProfile(0.75, (), 0.15), SpatialGrid(0, 1, 4))
    np.testing.assert_array_equal(b.upper, 0.75)
    np.testing.assert_array_equal(b.lower, 0.15)


def test_bounds_on_stack():
    b = corridor_bounds(StackProfile(0.75, ((0.4, 0.6, 0.3),)), SpatialGrid(0, 1, 4))
    assert b.upper[2] == pytest.approx(0.45)


def test_stack_between_grid_points_caps_both_neighbours():
    prof = StackProfile(0.75, ((0.41, 0.59, 0.3),))
    grid = SpatialGrid(0, 1, 5)
    b = corridor_bounds(prof, grid)
    pts = grid.points
    for k in (2, 3):
        assert pts[k] in (pytest.approx(0.4), pytest.approx(0.6))
        a, c = pts[max(k - 1, 0)], pts[min(k + 1, 5)]
        brute = max(height_at(prof, np.linspace(a, c, 20001)))
        assert b.upper[k] == pytest.approx(0.75 - brute) == pytest.approx(0.45)


def test_empty_corridor_raises():
    with pytest.raises(ProfileError, match="no room"):
        StackProfile(0.75, ((0.4, 0.6, 0.55),), ground_clearance=0.25)
    prof = StackProfile(0.75, ((0.4, 0.6, 0.55),), ground_clearance=0.15)
    object.__setattr__(prof, "ground_clearance", 0.25)  # bypass validation
    with pytest.raises(InfeasibleCorridorError, match="grid points"):
        corridor_bounds(prof, SpatialGrid(0, 1, 4))


@st.composite
def profiles(draw):
    n = draw(st.integers(0, 4))
    edges = sorted(draw(st.lists(st.floats(0, 1), min_size=2 * n, max_size=2 * n, unique=True)))
    stacks = [(edges[2 * i], edges[2 * i + 1], draw(st.floats(0, 0.5))) for i in range(n)]
    return StackProfile(0.75, tuple(stacks), 0.1)


@settings(max_examples=50, deadline=None)
@given(profiles(), st.integers(2, 30))
def test_linear_paths_inside_bounds_clear_all_stacks(prof, k):
    grid = SpatialGrid(0, 1, k)
    b = corridor_bounds(prof, grid)
    xs = np.linspace(0, 1, 4001)
    # the worst admissible path runs along the caps
    path = np.interp(xs, grid.points, b.upper)
    assert np.all(path <= prof.rail_height - height_at(prof, xs) + 1e-12)


@settings(max_examples=50, deadline=None)
@given(profiles(), st.floats(0, 0.9), st.floats(0.01, 0.1), st.floats(0, 0.5))
def test_adding_a_stack_never_raises_a_cap(prof, start, width, height):
    grid = SpatialGrid(0, 1, 10)
    new = (start, start + width, height)
    if any(s.start < new[1] and new[0] < s.end for s in prof.stacks):
        return
    bigger = StackProfile(prof.rail_height, prof.stacks + (new,), prof.ground_clearance)
    assert np.all(corridor_bounds(bigger, grid).upper <= corridor_bounds(prof, grid).upper)


def test_parse_valid_profile():
    text = json.dumps({"rail_height": 0.75, "ground_clearance": 0.15,
                       "stacks": [{"start": 0.1, "end": 0.2, "height": 0.3},
                                  {"start": 0.5, "end": 0.6, "height": 0.2}]})
    prof = parse_profile(text)
    assert len(prof.stacks) == 2
    assert parse_profile(json.dumps(profile_to_dict(prof))) == prof


@pytest.mark.parametrize("doc, message", [
    ({"rail_height": 0.75, "stacks": [{"start": 0.1, "end": 0.3, "height": 0.2},
                                      {"start": 0.2, "end": 0.4, "height": 0.2}]}, "overlap"),
    ({"rail_height": 0.75, "stacks": [{"start": 0.1, "end": 0.3, "height": 0.9}]},
     "exceeds rail height"),
    ({"rail_height": 0.75, "color": "red"}, "unknown keys"),
    ({"rail_height": "tall"}, "expected a number"),
    ({"stacks": []}, "missing key 'rail_height'"),
])
def test_parse_rejects_invalid_profiles(doc, message):
    with pytest.raises(ProfileError, match=message):
        parse_profile(json.dumps(doc))


def test_parse_reports_location_of_syntax_errors():
    with pytest.raises(ProfileError, match="line 2"):
        parse_profile('{"rail_height": 0.75,\n "stacks": [}')


def test_outline_heights_match_profile():
    prof = bundled_profile()
    xs, hs = outline(prof, 0.0, 1.0)
    tops = {(x, h) for x, h in zip(xs, hs) if h > 0}
    for s in prof.stacks:
        assert (s.start, s.height) in tops and (s.end, s.height) in tops
