"""Hamming-style code over the cube's direction set.

For d >= 3 let k = ceil(log2(d+1)).  The direction set X consists of all
odd-weight nonzero elements of F_2^k plus, if needed, the smallest
even-weight nonzero elements in integer order, until |X| = d.  The syndrome
of a vertex u is phi(u), the XOR over set coordinates of their direction
labels, and the code C is the kernel of phi.  Any two codewords are at
Hamming distance >= 3, so a vertex has at most one codeword neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Iterator, Optional

import numpy as np

from .cube import CubeSpace, check_explicit, make_space

__all__ = [
    "CodeContext",
    "build_context",
    "phi",
    "in_code",
    "adjacent_codeword",
    "enumerate_code",
    "codewords_in_ball",
    "code_size",
    "phi_table",
]

DEFAULT_BALL_COST = 10**9
_MATERIALIZE_LIMIT = 1 << 20


@dataclass(frozen=True)
class CodeContext:
    """Direction set X in F_2^k together with the cube Q_X it spans."""

    d: int
    k: int
    space: CubeSpace

    @cached_property
    def _pivot_positions(self) -> tuple[int, ...]:
        # Unit vectors are odd weight, hence always directions.
        return tuple(self.space.index[1 << j] for j in range(self.k))

    @cached_property
    def _free_positions(self) -> tuple[int, ...]:
        pivots = set(self._pivot_positions)
        return tuple(i for i in range(self.d) if i not in pivots)

    @cached_property
    def _codewords(self) -> Optional[tuple[int, ...]]:
        if 1 << (self.d - self.k) > _MATERIALIZE_LIMIT:
            return None
        return tuple(sorted(enumerate_code(self)))

    @cached_property
    def _phi_array(self) -> np.ndarray:
        check_explicit(self.d)
        idx = np.arange(1 << self.d, dtype=np.uint32)
        table = np.zeros(1 << self.d, dtype=np.uint32)
        for i, x in enumerate(self.space.directions):
            table[(idx >> i) & 1 == 1] ^= x
        table.flags.writeable = False
        return table


def build_context(d: int) -> CodeContext:
    """Direction set and code for dimension d (requires d >= 3)."""
    if d < 3:
        raise ValueError("need d >= 3")
    k = d.bit_length()
    odd = [v for v in range(1, 1 << k) if v.bit_count() % 2 == 1]
    even = [v for v in range(1, 1 << k) if v.bit_count() % 2 == 0]
    dirs = odd + even[: d - len(odd)]
    return CodeContext(d, k, make_space(dirs))


def phi(ctx: CodeContext, u: int) -> int:
    """Syndrome of a vertex: XOR of direction labels at its set coordinates."""
    s = 0
    dirs = ctx.space.directions
    while u:
        low = u & -u
        s ^= dirs[low.bit_length() - 1]
        u ^= low
    return s


def in_code(ctx: CodeContext, u: int) -> bool:
    return phi(ctx, u) == 0


def adjacent_codeword(ctx: CodeContext, u: int) -> Optional[tuple[int, int]]:
    """The unique codeword neighbour of u and the direction to it, if any."""
    s = phi(ctx, u)
    if s == 0:
        return None
    i = ctx.space.index.get(s)
    if i is None:
        return None
    return u ^ (1 << i), s


def code_size(ctx: CodeContext) -> int:
    return 1 << (ctx.d - ctx.k)


def enumerate_code(ctx: CodeContext) -> Iterator[int]:
    """All codewords: free coordinates range, pivot coordinates solve phi = 0."""
    check_explicit(ctx.d)
    dirs = ctx.space.directions
    free = ctx._free_positions
    pivots = ctx._pivot_positions
    for m in range(1 << len(free)):
        u = 0
        s = 0
        mm = m
        while mm:
            low = mm & -mm
            pos = free[low.bit_length() - 1]
            u |= 1 << pos
            s ^= dirs[pos]
            mm ^= low
        for j in range(ctx.k):
            if s >> j & 1:
                u |= 1 << pivots[j]
        yield u


def _ball_cost(d: int, radius: int) -> int:
    return sum(comb(d, i) for i in range(min(radius, d) + 1))


def codewords_in_ball(
    ctx: CodeContext, u: int, radius: int, *, max_cost: int = DEFAULT_BALL_COST
) -> Iterator[int]:
    """Codewords at Hamming distance <= radius from u.

    Enumerates coordinate subsets of size <= radius with syndrome pruning;
    cost grows like d^radius, so the feasibility guard refuses runaway radii.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if _ball_cost(ctx.d, radius) > max_cost:
        raise ValueError(
            f"radius {radius} exceeds feasible bound at d={ctx.d} "
            f"(ball cost > {max_cost})"
        )
    target = phi(ctx, u)
    dirs = ctx.space.directions
    index = ctx.space.index

    def rec(start: int, left: int, syn: int, acc: int) -> Iterator[int]:
        if syn == target:
            yield u ^ acc
        if left == 0:
            return
        if left == 1:
            t = syn ^ target
            i = index.get(t)
            if i is not None and i >= start:
                yield u ^ acc ^ (1 << i)
            return
        for i in range(start, ctx.d):
            yield from rec(i + 1, left - 1, syn ^ dirs[i], acc | (1 << i))

    return rec(0, min(radius, ctx.d), 0, 0)


def codewords_near(ctx: CodeContext, u: int, radius: int) -> list[int]:
    """Same set as ``codewords_in_ball``; filters a cached code list when cheap."""
    cached = ctx._codewords
    if cached is not None and len(cached) <= _ball_cost(ctx.d, radius):
        return [w for w in cached if (w ^ u).bit_count() <= radius]
    return list(codewords_in_ball(ctx, u, radius))


def phi_table(ctx: CodeContext) -> np.ndarray:
    """Vectorised syndromes for all 2^d vertices (explicit-mode cap applies)."""
    return ctx._phi_array
