"""Checks and statistics over factorisations and direction subsets.

Exact identities (component counts of directional unions, code sizes, parity
signatures of small cubes) are asserted by the test-suite; quantities that
are only known asymptotically (connectivity of random unions, disturbed path
counts) are reported as statistics and never asserted here.
"""

from __future__ import annotations

import random
import time
from collections import Counter, deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import gf2
from .code import CodeContext, code_size, enumerate_code, in_code, phi_table
from .construct import Factorisation
from .cube import Edge, direction_mask, edge_at

__all__ = [
    "SubsetSpec",
    "ValidationReport",
    "ComponentReport",
    "TfContext",
    "TfLabel",
    "validate",
    "union_components",
    "bfs_components",
    "small_cube_connectivity",
    "decomposition_of",
    "tf_context",
    "tf_label",
    "tf_class_sizes",
    "tf_connectivity",
    "code_intersections",
    "code_intersection",
    "psi_criterion",
    "untouched_parallel_paths",
    "untouched_path_histogram",
    "r_of",
    "r_scan",
    "is_connected",
    "min_connecting_prefix",
    "connectivity_profile",
]

R_OF_MAX_D = 10


@dataclass(frozen=True)
class SubsetSpec:
    """A nonempty subset of the direction set, kept sorted."""

    directions: tuple[int, ...]


DirSubset = Union[SubsetSpec, Iterable[int]]


def _dirs(ctx: CodeContext, spec: DirSubset) -> tuple[int, ...]:
    raw = spec.directions if isinstance(spec, SubsetSpec) else spec
    dirs = tuple(sorted(set(raw)))
    if not dirs:
        raise ValueError("direction subset must be nonempty")
    for x in dirs:
        if x not in ctx.space.index:
            raise ValueError(f"direction {x} not in X")
    return dirs


def _popcount32(arr: np.ndarray) -> np.ndarray:
    v = arr.astype(np.uint32)
    v = v - ((v >> 1) & np.uint32(0x55555555))
    v = (v & np.uint32(0x33333333)) + ((v >> 2) & np.uint32(0x33333333))
    v = (v + (v >> 4)) & np.uint32(0x0F0F0F0F)
    return (v * np.uint32(0x01010101)) >> 24


# -- validity -----------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    vertex: Optional[int] = None
    factor: Optional[int] = None
    message: str = ""


def validate(fac: Factorisation) -> ValidationReport:
    """Check that the factors are fixed-point-free matchings partitioning all edges."""
    if fac.mode != "explicit":
        fac = fac.materialize()
    d, n = fac.d, 1 << fac.d
    idx = np.arange(n, dtype=np.uint32)
    structural_ok = True
    counts = np.zeros(n * d, dtype=np.uint8)
    for i, x in enumerate(fac.directions):
        pt = fac.table(x)
        diff = pt ^ idx
        if (diff == 0).any() or (pt[pt] != idx).any() or (diff & (diff - 1)).any():
            structural_ok = False
            break
        sel = idx < pt
        slots = idx[sel].astype(np.int64) * d + _popcount32(diff[sel] - 1)
        counts += np.bincount(slots, minlength=n * d).astype(np.uint8)
    if structural_ok:
        clear = ((idx[:, None] >> np.arange(d)[None, :]) & 1) == 0
        grid = counts.reshape(n, d)
        if (grid[clear] == 1).all() and (grid[~clear] == 0).all():
            return ValidationReport(True)
    return _locate_violation(fac)


def _locate_violation(fac: Factorisation) -> ValidationReport:
    d, n = fac.d, 1 << fac.d
    owner: dict[tuple[int, int], int] = {}
    for x in fac.directions:
        pt = fac.table(x)
        for u in range(n):
            v = int(pt[u])
            if v == u:
                return ValidationReport(False, u, x, "factor has a fixed point")
            if int(pt[v]) != u:
                return ValidationReport(False, u, x, "factor is not an involution")
            diff = u ^ v
            if diff & (diff - 1):
                return ValidationReport(False, u, x, "partner is not a neighbour")
            if u < v:
                key = (u, diff.bit_length() - 1)
                if key in owner:
                    return ValidationReport(
                        False, u, x, f"edge already assigned to factor {owner[key]}"
                    )
                owner[key] = x
    for u in range(n):
        for i in range(d):
            if not u >> i & 1 and (u, i) not in owner:
                return ValidationReport(
                    False, u, fac.directions[i], "edge assigned to no factor"
                )
    return ValidationReport(False, None, None, "inconsistent vectorised check")


# -- connectivity -------------------------------------------------------------


@dataclass(frozen=True)
class ComponentReport:
    count: int
    sizes: tuple[int, ...]
    elapsed: float


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.count = n

    def find(self, u: int) -> int:
        parent = self.parent
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    def union(self, u: int, v: int) -> None:
        ru, rv = self.find(u), self.find(v)
        if ru == rv:
            return
        if self.size[ru] < self.size[rv]:
            ru, rv = rv, ru
        self.parent[rv] = ru
        self.size[ru] += self.size[rv]
        self.count -= 1


def _union_find(fac: Factorisation, dirs: Sequence[int]) -> _DisjointSet:
    if fac.mode != "explicit":
        fac = fac.materialize()
    n = 1 << fac.d
    ds = _DisjointSet(n)
    for x in dirs:
        pt = fac.table(x).tolist()
        for u in range(n):
            v = pt[u]
            if u < v:
                ds.union(u, v)
    return ds


def union_components(fac: Factorisation, spec: DirSubset) -> ComponentReport:
    """Components of the union of the chosen factors, via union-find."""
    dirs = _dirs(fac.ctx, spec)
    t0 = time.perf_counter()
    ds = _union_find(fac, dirs)
    sizes = sorted(ds.size[r] for r in range(1 << fac.d) if ds.find(r) == r)
    return ComponentReport(ds.count, tuple(sizes), time.perf_counter() - t0)


def bfs_components(fac: Factorisation, spec: DirSubset) -> ComponentReport:
    """Independent breadth-first oracle for the same component structure."""
    dirs = _dirs(fac.ctx, spec)
    if fac.mode != "explicit":
        fac = fac.materialize()
    t0 = time.perf_counter()
    n = 1 << fac.d
    tables = [fac.table(x) for x in dirs]
    seen = bytearray(n)
    sizes = []
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = 1
        size = 0
        q = deque([start])
        while q:
            u = q.popleft()
            size += 1
            for pt in tables:
                v = int(pt[u])
                if not seen[v]:
                    seen[v] = 1
                    q.append(v)
        sizes.append(size)
    return ComponentReport(len(sizes), tuple(sorted(sizes)), time.perf_counter() - t0)


def _uf_labels(fac: Factorisation, dirs: Sequence[int]) -> np.ndarray:
    ds = _union_find(fac, dirs)
    return np.fromiter(
        (ds.find(u) for u in range(1 << fac.d)), dtype=np.uint32, count=1 << fac.d
    )


def small_cube_connectivity(fac: Factorisation, spec: DirSubset) -> dict[int, bool]:
    """For each small cube of the subset: do its vertices land in one component?

    Components are taken in the whole union graph, not within the small cube.
    """
    dirs = _dirs(fac.ctx, spec)
    labels = _uf_labels(fac, dirs)
    n = 1 << fac.d
    mask = direction_mask(fac.ctx.space, dirs)
    ids = np.arange(n, dtype=np.uint32) & np.uint32(~mask & (n - 1))
    pairs = ids.astype(np.uint64) << np.uint64(32) | labels.astype(np.uint64)
    uniq = np.unique(pairs)
    cube_of_pair = (uniq >> np.uint64(32)).astype(np.uint32)
    uniq_ids, per_cube = np.unique(cube_of_pair, return_counts=True)
    return {int(i): bool(c == 1) for i, c in zip(uniq_ids, per_cube)}


# -- direction-subset algebra ---------------------------------------------------


def decomposition_of(ctx: CodeContext, spec: DirSubset) -> gf2.Decomposition:
    """Span W of the subset inside F_2^k, with complement and coset labels."""
    dirs = _dirs(ctx, spec)
    return gf2.decompose(gf2.span_basis(dirs, ctx.k))


@dataclass(frozen=True)
class TfContext:
    """Per-subset data for parity signatures of small cubes.

    ``masks[t-1]`` is the coordinate mask of the active directions in the
    coset with label t.  A mask may be empty when no direction falls in that
    coset; the affected signature bit is then constantly zero.
    """

    ctx: CodeContext
    directions: tuple[int, ...]
    dec: gf2.Decomposition
    masks: tuple[int, ...]

    @property
    def n_labels(self) -> int:
        return (1 << self.dec.label_width) - 1


@dataclass(frozen=True)
class TfLabel:
    """Parity signature f (bit t-1 is f_t) and psi, the label-XOR over set bits."""

    bits: int
    psi: int


def tf_context(ctx: CodeContext, spec: DirSubset) -> TfContext:
    dirs = _dirs(ctx, spec)
    dec = decomposition_of(ctx, dirs)
    masks = [0] * ((1 << dec.label_width) - 1)
    for x in ctx.space.directions:
        t = dec.coset_label(x)
        if t:
            masks[t - 1] |= ctx.space.bit_of(x)
    return TfContext(ctx, dirs, dec, tuple(masks))


def tf_label(tfc: TfContext, u: int) -> TfLabel:
    bits = 0
    psi = 0
    for j, m in enumerate(tfc.masks):
        if (u & m).bit_count() & 1:
            bits |= 1 << j
            psi ^= j + 1
    return TfLabel(bits, psi)


def tf_class_sizes(tfc: TfContext) -> dict[int, int]:
    """Sizes of the realised signature classes over all 2^d vertices."""
    n = 1 << tfc.ctx.d
    idx = np.arange(n, dtype=np.uint32)
    bits = np.zeros(n, dtype=np.uint32)
    for j, m in enumerate(tfc.masks):
        parity = _popcount32(idx & np.uint32(m)) & np.uint32(1)
        bits |= parity << np.uint32(j)
    uniq, counts = np.unique(bits, return_counts=True)
    return {int(b): int(c) for b, c in zip(uniq, counts)}


def tf_connectivity(fac: Factorisation, spec: DirSubset) -> dict[int, bool]:
    """Per signature class: do the class's vertices share one component?"""
    dirs = _dirs(fac.ctx, spec)
    tfc = tf_context(fac.ctx, dirs)
    labels = _uf_labels(fac, dirs)
    n = 1 << fac.d
    idx = np.arange(n, dtype=np.uint32)
    bits = np.zeros(n, dtype=np.uint32)
    for j, m in enumerate(tfc.masks):
        parity = _popcount32(idx & np.uint32(m)) & np.uint32(1)
        bits |= parity << np.uint32(j)
    pairs = bits.astype(np.uint64) << np.uint64(32) | labels.astype(np.uint64)
    uniq = np.unique(pairs)
    class_of_pair = (uniq >> np.uint64(32)).astype(np.uint32)
    uniq_classes, per_class = np.unique(class_of_pair, return_counts=True)
    return {int(b): bool(c == 1) for b, c in zip(uniq_classes, per_class)}


def code_intersections(ctx: CodeContext, spec: DirSubset) -> dict[int, int]:
    """Codeword count inside every small cube of the subset, by direct counting."""
    dirs = _dirs(ctx, spec)
    n = 1 << ctx.d
    mask = direction_mask(ctx.space, dirs)
    ids = np.arange(n, dtype=np.uint32) & np.uint32(~mask & (n - 1))
    result = {int(i): 0 for i in np.unique(ids)}
    cw_ids, counts = np.unique(ids[phi_table(ctx) == 0], return_counts=True)
    for i, c in zip(cw_ids, counts):
        result[int(i)] = int(c)
    return result


def code_intersection(ctx: CodeContext, spec: DirSubset, cube_id: int) -> int:
    """|S ∩ C| for the small cube with the given id."""
    dirs = _dirs(ctx, spec)
    mask = direction_mask(ctx.space, dirs)
    if cube_id & mask or cube_id >> ctx.d:
        raise ValueError("cube_id must be zero on the subset's coordinates")
    count = 0
    positions = [ctx.space.index[x] for x in dirs]
    for m in range(1 << len(dirs)):
        u = cube_id
        mm = m
        while mm:
            low = mm & -mm
            u |= 1 << positions[low.bit_length() - 1]
            mm ^= low
        count += in_code(ctx, u)
    return count


def psi_criterion(ctx: CodeContext, spec: DirSubset, cube_id: int) -> bool:
    """True when the cube's parity signature has psi = 0.

    Equivalent to the cube meeting the code; the equivalence is checked
    against ``code_intersection`` by the test-suite, not assumed here.
    """
    dirs = _dirs(ctx, spec)
    mask = direction_mask(ctx.space, dirs)
    if cube_id & mask or cube_id >> ctx.d:
        raise ValueError("cube_id must be zero on the subset's coordinates")
    return tf_label(tf_context(ctx, dirs), cube_id).psi == 0


# -- parallel paths -------------------------------------------------------------


def untouched_parallel_paths(fac: Factorisation, e: Edge) -> int:
    """How many of the d-1 parallel 3-edge paths around e are fully untouched.

    The edge must have an endpoint in the code.  For each direction x other
    than e's own, the path u -> u+x -> v+x -> v is untouched when all three
    of its edges still sit in the factors of their own directions.
    """
    ctx = fac.ctx
    lo, hi = e.endpoints(ctx.space)
    if in_code(ctx, lo):
        u, v = lo, hi
    elif in_code(ctx, hi):
        u, v = hi, lo
    else:
        raise ValueError("edge has no endpoint in the code")
    y = e.direction
    count = 0
    for x in fac.directions:
        if x == y:
            continue
        bx = ctx.space.bit_of(x)
        if (
            fac.partner(u, x) == u ^ bx
            and fac.partner(u ^ bx, y) == v ^ bx
            and fac.partner(v, x) == v ^ bx
        ):
            count += 1
    return count


def untouched_path_histogram(
    fac: Factorisation, edges: Optional[Sequence[Edge]] = None
) -> dict[int, int]:
    """Histogram of disturbed-path counts over code-incident edges."""
    ctx = fac.ctx
    if edges is None:
        edges = [
            edge_at(ctx.space, w, y)
            for w in enumerate_code(ctx)
            for y in fac.directions
        ]
    hist: Counter[int] = Counter()
    for e in edges:
        hist[fac.d - 1 - untouched_parallel_paths(fac, e)] += 1
    return dict(sorted(hist.items()))


# -- minimum connecting subset size ----------------------------------------------


def r_scan(
    fac: Factorisation, *, max_d: int = R_OF_MAX_D
) -> tuple[int, dict[int, float]]:
    """r_of plus elapsed seconds per tried subset size."""
    if fac.d > max_d:
        raise ValueError(f"r_of is guarded to d <= {max_d} (got d={fac.d})")
    if fac.mode != "explicit":
        fac = fac.materialize()
    dirs = fac.directions
    timings: dict[int, float] = {}
    for r in range(1, fac.d + 1):
        t0 = time.perf_counter()
        ok = all(
            _union_find(fac, subset).count == 1
            for subset in combinations(dirs, r)
        )
        timings[r] = time.perf_counter() - t0
        if ok:
            return r, timings
    raise AssertionError("full factor union must be connected")


def r_of(fac: Factorisation, *, max_d: int = R_OF_MAX_D) -> int:
    """Smallest r such that every union of r factors is connected.

    Enumerates subsets lexicographically with early exit; r = d always
    succeeds for a valid factorisation, since the full union is the cube.
    """
    return r_scan(fac, max_d=max_d)[0]


# -- fast engine for sweeps -------------------------------------------------------
#
# Minimum-label propagation with pointer jumping.  Used for Monte-Carlo
# sweeps only; the test-suite cross-checks it against union_components.


def _relax_to_fixpoint(comp: np.ndarray, tables: Sequence[np.ndarray]) -> np.ndarray:
    while True:
        prev = comp.copy()
        for pt in tables:
            np.minimum(comp, comp[pt], out=comp)
        comp = comp[comp]
        comp = comp[comp]
        if np.array_equal(comp, prev):
            return comp


def is_connected(fac: Factorisation, spec: DirSubset) -> bool:
    dirs = _dirs(fac.ctx, spec)
    if fac.mode != "explicit":
        fac = fac.materialize()
    comp = np.arange(1 << fac.d, dtype=np.uint32)
    comp = _relax_to_fixpoint(comp, [fac.table(x) for x in dirs])
    return bool((comp == 0).all())


def min_connecting_prefix(fac: Factorisation, order: Sequence[int]) -> int:
    """Smallest prefix length of ``order`` whose factor union is connected."""
    if fac.mode != "explicit":
        fac = fac.materialize()
    dirs = _dirs(fac.ctx, order)
    if len(dirs) != len(tuple(order)) or len(dirs) != fac.d:
        raise ValueError("order must be a permutation of the direction set")
    comp = np.arange(1 << fac.d, dtype=np.uint32)
    active: list[np.ndarray] = []
    for r, x in enumerate(order, 1):
        active.append(fac.table(x))
        comp = _relax_to_fixpoint(comp, active)
        if not comp.any():
            return r
    raise AssertionError("full factor union must be connected")


def connectivity_profile(
    fac: Factorisation, n_chains: int, rng: random.Random
) -> list[int]:
    """Minimum connecting prefix size for n random direction orders.

    Prefixes of one chain are nested, so per-chain connectivity is monotone
    in r by construction and the r-th prefix is a uniform random r-subset.
    """
    dirs = list(fac.directions)
    out = []
    for _ in range(n_chains):
        order = rng.sample(dirs, len(dirs))
        out.append(min_connecting_prefix(fac, order))
    return out
