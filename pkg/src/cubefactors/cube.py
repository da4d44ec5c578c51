"""Hypercube geometry over an ordered direction set.

A vertex of the d-dimensional cube is a d-bit int; bit i is the coordinate
in the i-th direction.  Directions themselves are small ints (labels from
F_2^k) and are kept sorted by integer value, so a direction's bit position
is its rank in that order.  Text form of a vertex is its d-digit binary
string, e.g. flipping direction index 2 of the origin at d=7 gives 0000100.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Sequence

__all__ = [
    "CubeSpace",
    "Edge",
    "make_space",
    "basis_vertex",
    "flip",
    "hamming_distance",
    "direction_mask",
    "small_cube_id",
    "ball",
    "vertices",
    "vertex_text",
    "parse_vertex",
    "edge_at",
    "explicit_cap",
]

MAX_ENUM_D = 28
DEFAULT_EXPLICIT_CAP = 22
_CAP_ENV = "CUBEFACTORS_MAX_EXPLICIT_D"


def explicit_cap() -> int:
    """Largest d for which whole-cube tables may be materialised."""
    return int(os.environ.get(_CAP_ENV, DEFAULT_EXPLICIT_CAP))


def check_explicit(d: int) -> None:
    cap = explicit_cap()
    if d > cap:
        raise ValueError(
            f"d={d} exceeds the explicit-mode cap {cap} "
            f"(override with {_CAP_ENV})"
        )


@dataclass(frozen=True)
class CubeSpace:
    """The cube Q_X for an ordered tuple of distinct direction labels."""

    d: int
    directions: tuple[int, ...]
    index: dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.d != len(self.directions):
            raise ValueError("d must equal the number of directions")
        if len(set(self.directions)) != self.d:
            raise ValueError("directions must be distinct")
        if any(x <= 0 for x in self.directions):
            raise ValueError("directions must be nonzero positive ints")
        if tuple(sorted(self.directions)) != self.directions:
            raise ValueError("directions must be sorted ascending")
        object.__setattr__(self, "index", {x: i for i, x in enumerate(self.directions)})

    @property
    def n_vertices(self) -> int:
        return 1 << self.d

    def bit_of(self, x: int) -> int:
        """Coordinate bit mask of direction x."""
        try:
            return 1 << self.index[x]
        except KeyError:
            raise ValueError(f"direction {x} not in X") from None


def make_space(directions: Iterable[int]) -> CubeSpace:
    dirs = tuple(sorted(directions))
    return CubeSpace(len(dirs), dirs)


def basis_vertex(space: CubeSpace, x: int) -> int:
    """Vertex with a single 1 in direction x."""
    return space.bit_of(x)


def flip(space: CubeSpace, u: int, x: int) -> int:
    """Neighbour of u across direction x."""
    return u ^ space.bit_of(x)


def hamming_distance(u: int, v: int) -> int:
    return (u ^ v).bit_count()


def direction_mask(space: CubeSpace, dirs: Iterable[int]) -> int:
    """Coordinate mask covering the given directions."""
    mask = 0
    for x in dirs:
        mask |= space.bit_of(x)
    return mask


def small_cube_id(space: CubeSpace, u: int, dirs: Iterable[int]) -> int:
    """Identifier of the sub-cube through u spanned by ``dirs``.

    Two vertices get the same id exactly when they agree on every coordinate
    outside ``dirs``; there are 2^(d-|dirs|) distinct ids.
    """
    return u & ~direction_mask(space, dirs)


def ball(space: CubeSpace, u: int, radius: int) -> Iterator[int]:
    """All vertices at Hamming distance <= radius from u."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    r = min(radius, space.d)
    for size in range(r + 1):
        for positions in combinations(range(space.d), size):
            w = u
            for i in positions:
                w ^= 1 << i
            yield w


def vertices(space: CubeSpace) -> Iterator[int]:
    """All 2^d vertices; refuses above the enumeration guard."""
    if space.d > MAX_ENUM_D:
        raise ValueError(f"refusing to enumerate 2^{space.d} vertices (d > {MAX_ENUM_D})")
    return iter(range(space.n_vertices))


def vertex_text(space: CubeSpace, u: int) -> str:
    """d-digit binary string of a vertex; direction index 0 is the rightmost digit."""
    if u < 0 or u >> space.d:
        raise ValueError(f"vertex {u} does not fit in d={space.d} bits")
    return format(u, f"0{space.d}b")


def parse_vertex(space: CubeSpace, text: str) -> int:
    if len(text) != space.d or set(text) - {"0", "1"}:
        raise ValueError(f"expected a {space.d}-digit binary string, got {text!r}")
    return int(text, 2)


@dataclass(frozen=True, order=True)
class Edge:
    """Canonical cube edge: ``lo`` has coordinate 0 in ``direction``."""

    lo: int
    direction: int

    def endpoints(self, space: CubeSpace) -> tuple[int, int]:
        return self.lo, self.lo ^ space.bit_of(self.direction)


def edge_at(space: CubeSpace, u: int, x: int) -> Edge:
    """The edge incident to u in direction x, in canonical form."""
    bit = space.bit_of(x)
    return Edge(u & ~bit, x)
