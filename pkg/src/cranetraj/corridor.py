"""Container stack profiles and the payload height corridor they induce.

Heights of stacks are measured upward from the ground, which lies
``rail_height`` below the trolley rail.  Payload depth ``y_p`` is measured
downward from the rail, so a stack of height ``s`` caps the depth at
``rail_height - s``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class ProfileError(ValueError):
    """A profile document could not be parsed or violates an invariant."""


class InfeasibleCorridorError(ValueError):
    pass


@dataclass(frozen=True)
class Stack:
    start: float
    end: float
    height: float


@dataclass(frozen=True)
class StackProfile:
    rail_height: float
    stacks: tuple = ()
    ground_clearance: float = 0.15

    def __post_init__(self):
        stacks = (s if isinstance(s, Stack) else Stack(*s) for s in self.stacks)
        object.__setattr__(self, "stacks", tuple(sorted(stacks, key=lambda s: s.start)))
        _validate(self)

    @property
    def max_height(self):
        return max((s.height for s in self.stacks), default=0.0)


def _validate(profile):
    h = profile.rail_height
    if not np.isfinite(h) or h <= 0:
        raise ProfileError(f"rail_height must be positive, got {h}")
    if profile.ground_clearance < 0:
        raise ProfileError("ground_clearance must be nonnegative")
    prev_end = -np.inf
    for i, s in enumerate(profile.stacks):
        if not s.end > s.start:
            raise ProfileError(f"stacks[{i}]: end must exceed start")
        if s.height < 0:
            raise ProfileError(f"stacks[{i}]: negative height")
        if s.height > h:
            raise ProfileError(f"stacks[{i}]: height {s.height} exceeds rail height {h}")
        if s.start < prev_end:
            raise ProfileError(f"stacks[{i}]: overlap with a neighbouring stack")
        prev_end = s.end
    if profile.ground_clearance > h - profile.max_height:
        raise ProfileError("ground_clearance leaves no room above the highest stack")


def height_at(profile, x_p):
    """Stack height below position ``x_p`` (vectorized).

    Where two stacks share an edge the taller one counts.
    """
    x = np.asarray(x_p, dtype=float)
    out = np.zeros_like(x)
    for s in profile.stacks:
        inside = (x >= s.start) & (x <= s.end)
        out = np.where(inside, np.maximum(out, s.height), out)
    return out


def max_height_on(profile, a, b):
    """Largest stack height anywhere on the closed interval ``[a, b]``."""
    best = 0.0
    for s in profile.stacks:
        if s.start <= b and s.end >= a:
            best = max(best, s.height)
    return best


@dataclass(frozen=True)
class CorridorBounds:
    lower: np.ndarray
    upper: np.ndarray


def corridor_bounds(profile, grid):
    """Depth bounds at every grid point.

    The cap at point ``k`` uses the tallest stack over both grid intervals
    adjacent to it, so a payload path that is linear between grid points and
    respects the caps cannot clip a stack edge that falls between points.
    """
    pts = grid.points
    upper = np.empty(len(pts))
    for k, x in enumerate(pts):
        a = pts[max(k - 1, 0)]
        b = pts[min(k + 1, len(pts) - 1)]
        upper[k] = profile.rail_height - max_height_on(profile, a, b)
    lower = np.full(len(pts), profile.ground_clearance)
    bad = np.nonzero(lower > upper)[0]
    if bad.size:
        raise InfeasibleCorridorError(f"empty corridor at grid points {bad.tolist()}")
    return CorridorBounds(lower, upper)


_PROFILE_KEYS = {"rail_height", "ground_clearance", "stacks"}
_STACK_KEYS = {"start", "end", "height"}


def _number(obj, key, where):
    if key not in obj:
        raise ProfileError(f"{where}: missing key '{key}'")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProfileError(f"{where}.{key}: expected a number, got {value!r}")
    return float(value)


def profile_from_dict(doc):
    if not isinstance(doc, dict):
        raise ProfileError("profile document must be an object")
    unknown = set(doc) - _PROFILE_KEYS
    if unknown:
        raise ProfileError(f"unknown keys {sorted(unknown)}")
    rail = _number(doc, "rail_height", "profile")
    clearance = _number(doc, "ground_clearance", "profile") if "ground_clearance" in doc else 0.15
    raw = doc.get("stacks", [])
    if not isinstance(raw, list):
        raise ProfileError("profile.stacks: expected an array")
    stacks = []
    for i, item in enumerate(raw):
        where = f"stacks[{i}]"
        if not isinstance(item, dict):
            raise ProfileError(f"{where}: expected an object")
        extra = set(item) - _STACK_KEYS
        if extra:
            raise ProfileError(f"{where}: unknown keys {sorted(extra)}")
        stacks.append(Stack(*(_number(item, k, where) for k in ("start", "end", "height"))))
    return StackProfile(rail, tuple(stacks), clearance)


def parse_profile(text):
    """Parse and validate a JSON profile document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return profile_from_dict(doc)


def profile_to_dict(profile):
    return {
        "rail_height": profile.rail_height,
        "ground_clearance": profile.ground_clearance,
        "stacks": [{"start": s.start, "end": s.end, "height": s.height} for s in profile.stacks],
    }


def bundled_profile():
    """Three stacks rising toward the far end of a 1 m loading site."""
    return StackProfile(
        rail_height=0.75,
        stacks=((0.15, 0.35, 0.20), (0.45, 0.60, 0.30), (0.75, 0.90, 0.45)),
        ground_clearance=0.15,
    )


def outline(profile, x0, x1):
    """Vertices of the stack silhouette on ``[x0, x1]`` for plotting."""
    xs = [x0]
    hs = [float(height_at(profile, x0))]
    for s in profile.stacks:
        if s.end < x0 or s.start > x1:
            continue
        xs += [s.start, s.start, s.end, s.end]
        hs += [0.0, s.height, s.height, 0.0]
    xs.append(x1)
    hs.append(float(height_at(profile, x1)))
    return np.array(xs), np.array(hs)

