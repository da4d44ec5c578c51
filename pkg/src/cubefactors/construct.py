"""Randomised edge-swap factorisations of the cube Q_X.

The starting point is the directional factorisation: factor x holds exactly
the direction-x edges.  It is then perturbed by two kinds of local swaps,
driven by a keyed deterministic tape so that explicit tables and implicit
(query-time) evaluation agree bit for bit:

* every codeword is independently marked G' with probability pg; codewords
  with another G' point within distance rg are dropped (both of a close pair),
  leaving G; codewords within distance rh of any G' point are dropped from
  the code to leave H;
* each u in H draws an ordered pair of distinct directions (p, q) and, unless
  the conflict rule below vetoes it, the four edges of the square
  {u, u+p, u+q, u+p+q} are exchanged between factors p and q;
* each v in G draws cube_dim distinct directions r_1..r_m and, inside the
  small cube through v spanned by them, the direction-r_i edges move from
  factor r_i to factor r_(i+1), indices cyclic.

Conflict rule: if the far corner u+p+q has a codeword neighbour w and w's own
far corner w+p_w+q_w is adjacent to u, neither square is swapped.  Applying
a plan is transactional: any two swap sites that try to rewrite the same
(vertex, factor) slot raise OverlapError instead of producing a broken
factorisation.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from hashlib import blake2b
from typing import Iterator, Optional, Sequence

import numpy as np

from . import code as code_mod
from .code import CodeContext, codewords_near
from .cube import Edge, check_explicit, direction_mask, vertex_text, parse_vertex

__all__ = [
    "ConstructionParams",
    "RandomTape",
    "SwapPlan",
    "Factorisation",
    "OverlapError",
    "directional",
    "sample_plan",
    "apply_explicit",
    "build_explicit",
    "implicit_factorisation",
    "random_greedy_factorisation",
    "touched_edge_count",
    "plan_summary",
    "save_factorisation",
    "load_factorisation",
]

_WORD_MAX = 1 << 64
_TAG_GPRIME, _TAG_PQ, _TAG_R6, _TAG_DERIVE = 0, 1, 2, 3

MIN_CONSTRUCTION_D = 7


class OverlapError(RuntimeError):
    """Two swap sites tried to rewrite the same (vertex, factor) slot."""


@dataclass(frozen=True)
class ConstructionParams:
    """Knobs of the swap construction; pg=None means the default 2^(-d/10)."""

    pg: Optional[float] = None
    rg: int = 14
    rh: int = 10
    cube_dim: int = 6
    conflict_check: bool = True

    def __post_init__(self) -> None:
        if self.pg is not None and not 0.0 <= self.pg <= 1.0:
            raise ValueError("pg must lie in [0, 1]")
        if not self.rg >= self.rh >= 0:
            raise ValueError("need rg >= rh >= 0")
        if self.cube_dim < 1:
            raise ValueError("cube_dim must be >= 1")

    def pg_value(self, d: int) -> float:
        return 2.0 ** (-d / 10.0) if self.pg is None else self.pg

    def coin_threshold(self, d: int) -> int:
        return int(self.pg_value(d) * float(_WORD_MAX))

    def as_dict(self, d: int) -> dict:
        return {
            "pg": self.pg_value(d),
            "rg": self.rg,
            "rh": self.rh,
            "cube_dim": self.cube_dim,
            "conflict_check": self.conflict_check,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConstructionParams":
        return cls(
            pg=data["pg"],
            rg=data["rg"],
            rh=data["rh"],
            cube_dim=data["cube_dim"],
            conflict_check=data["conflict_check"],
        )


class RandomTape:
    """Deterministic keyed randomness.

    Every draw is a pure function of (seed, tag, vertex), so the explicit
    bulk construction and implicit query-time replay see identical bits no
    matter in which order vertices are visited.
    """

    def __init__(self, seed: int):
        self.seed = seed & (_WORD_MAX - 1)
        self._key = self.seed.to_bytes(8, "big")

    def _word(self, tag: int, vertex: int, counter: int) -> int:
        msg = bytes([tag]) + counter.to_bytes(4, "big") + vertex.to_bytes(
            (vertex.bit_length() + 7) // 8 or 1, "big"
        )
        return int.from_bytes(blake2b(msg, key=self._key, digest_size=8).digest(), "big")

    def _below(self, tag: int, vertex: int, n: int, counter: int) -> tuple[int, int]:
        # Rejection sampling keeps the draw exactly uniform on range(n).
        limit = _WORD_MAX - _WORD_MAX % n
        while True:
            w = self._word(tag, vertex, counter)
            counter += 1
            if w < limit:
                return w % n, counter

    def coin(self, vertex: int, threshold: int) -> bool:
        return self._word(_TAG_GPRIME, vertex, 0) < threshold

    def pair_positions(self, vertex: int, d: int) -> tuple[int, int]:
        """Uniform ordered pair of distinct positions in range(d)."""
        idx, _ = self._below(_TAG_PQ, vertex, d * (d - 1), 0)
        i, j = divmod(idx, d - 1)
        if j >= i:
            j += 1
        return i, j

    def tuple_positions(self, vertex: int, d: int, m: int) -> tuple[int, ...]:
        """Uniform ordered m-tuple of distinct positions in range(d)."""
        avail = list(range(d))
        out = []
        counter = 0
        for t in range(m):
            r, counter = self._below(_TAG_R6, vertex, d - t, counter)
            out.append(avail.pop(r))
        return tuple(out)

    def derive_seed(self, label: str) -> int:
        msg = bytes([_TAG_DERIVE]) + label.encode()
        return int.from_bytes(blake2b(msg, key=self._key, digest_size=8).digest(), "big")


@dataclass(frozen=True, eq=False)
class SwapPlan:
    """Sampled swap sites: membership sets, direction draws, surviving squares."""

    params: ConstructionParams
    seed: int
    gprime: tuple[int, ...]
    g: tuple[int, ...]
    h: tuple[int, ...]
    pq: dict[int, tuple[int, int]]
    r6: dict[int, tuple[int, ...]]
    active_squares: tuple[int, ...]


def _draw_pq(ctx: CodeContext, tape: RandomTape, u: int) -> tuple[int, int]:
    i, j = tape.pair_positions(u, ctx.d)
    dirs = ctx.space.directions
    return dirs[i], dirs[j]


def _draw_r6(ctx: CodeContext, tape: RandomTape, v: int, m: int) -> tuple[int, ...]:
    dirs = ctx.space.directions
    return tuple(dirs[i] for i in tape.tuple_positions(v, ctx.d, m))


def _conflict_partner(ctx: CodeContext, u: int, p: int, q: int) -> Optional[int]:
    """Codeword adjacent to the far corner u+p+q, if one exists."""
    s = p ^ q
    i = ctx.space.index.get(s)
    if i is None:
        return None
    return u ^ ctx.space.bit_of(p) ^ ctx.space.bit_of(q) ^ (1 << i)


def _squares_conflict(
    ctx: CodeContext, u: int, w: int, pw: int, qw: int
) -> bool:
    far_w = w ^ ctx.space.bit_of(pw) ^ ctx.space.bit_of(qw)
    return (far_w ^ u).bit_count() == 1


def _check_construction_dims(ctx: CodeContext, params: ConstructionParams) -> None:
    if ctx.d < MIN_CONSTRUCTION_D:
        raise ValueError(f"full construction requires d >= {MIN_CONSTRUCTION_D}")
    if params.cube_dim > ctx.d:
        raise ValueError("cube_dim must not exceed d")


def sample_plan(ctx: CodeContext, params: ConstructionParams, tape: RandomTape) -> SwapPlan:
    """Draw all swap sites for an explicit build (enumerates the code once)."""
    check_explicit(ctx.d)
    _check_construction_dims(ctx, params)
    cw = ctx._codewords
    if cw is None:
        cw = tuple(sorted(code_mod.enumerate_code(ctx)))
    thr = params.coin_threshold(ctx.d)

    gprime = tuple(u for u in cw if tape.coin(u, thr))
    g = tuple(
        v
        for v in gprime
        if all((v ^ w).bit_count() > params.rg for w in gprime if w != v)
    )
    h = tuple(
        u for u in cw if all((u ^ w).bit_count() > params.rh for w in gprime)
    )
    pq = {u: _draw_pq(ctx, tape, u) for u in cw}
    r6 = {v: _draw_r6(ctx, tape, v, params.cube_dim) for v in g}

    active = []
    for u in h:
        p, q = pq[u]
        if params.conflict_check:
            w = _conflict_partner(ctx, u, p, q)
            if w is not None and _squares_conflict(ctx, u, w, *pq[w]):
                continue
        active.append(u)
    return SwapPlan(params, tape.seed, gprime, g, h, pq, r6, tuple(active))


class Factorisation:
    """Assignment of every cube edge to one of d factors, labelled by X.

    Explicit mode stores one partner table per factor (numpy uint32); factor
    x matches vertex u to ``partner(u, x)``.  Implicit mode stores only the
    context, parameters and tape, and answers partner queries by replaying
    the swap rules for the few codewords near the query.
    """

    def __init__(
        self,
        ctx: CodeContext,
        kind: str,
        mode: str,
        tables: Optional[dict[int, np.ndarray]] = None,
        params: Optional[ConstructionParams] = None,
        tape: Optional[RandomTape] = None,
        plan: Optional[SwapPlan] = None,
    ):
        if mode not in ("explicit", "implicit"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "explicit" and tables is None:
            raise ValueError("explicit mode needs partner tables")
        if mode == "implicit" and (params is None or tape is None):
            raise ValueError("implicit mode needs params and a tape")
        self.ctx = ctx
        self.kind = kind
        self.mode = mode
        self.params = params
        self.tape = tape
        self.plan = plan
        self._tables = tables
        self._sites: dict[int, "_Site"] = {}
        self._pqs: dict[int, tuple[int, int]] = {}

    @property
    def d(self) -> int:
        return self.ctx.d

    @property
    def directions(self) -> tuple[int, ...]:
        return self.ctx.space.directions

    @property
    def seed(self) -> Optional[int]:
        return self.tape.seed if self.tape is not None else None

    def table(self, x: int) -> np.ndarray:
        if self._tables is None:
            raise ValueError("no tables in implicit mode; call materialize() first")
        try:
            return self._tables[x]
        except KeyError:
            raise ValueError(f"direction {x} not in X") from None

    def partner(self, u: int, x: int) -> int:
        """The vertex matched to u by factor x."""
        if u < 0 or u >> self.d:
            raise ValueError(f"vertex {u} does not fit in d={self.d} bits")
        if self.mode == "explicit":
            return int(self.table(x)[u])
        return self._implicit_partner(u, x)

    def untouched(self, e: Edge) -> bool:
        """True when edge e still sits in the factor of its own direction."""
        return self.partner(e.lo, e.direction) == e.lo ^ self.ctx.space.bit_of(e.direction)

    def factor_of(self, e: Edge) -> int:
        lo, hi = e.endpoints(self.ctx.space)
        for x in self.directions:
            if self.partner(lo, x) == hi:
                return x
        raise ValueError(f"edge {e} is in no factor; factorisation is broken")

    def materialize(self) -> "Factorisation":
        """Explicit twin of this factorisation (same seed and parameters)."""
        if self.mode == "explicit":
            return self
        assert self.params is not None and self.tape is not None
        return build_explicit(self.ctx, self.params, self.tape)

    # -- implicit machinery -------------------------------------------------

    def _pq(self, w: int) -> tuple[int, int]:
        got = self._pqs.get(w)
        if got is None:
            got = self._pqs[w] = _draw_pq(self.ctx, self.tape, w)
        return got

    def _site(self, w: int) -> "_Site":
        got = self._sites.get(w)
        if got is None:
            got = self._sites[w] = _resolve_site(self, w)
        return got

    def _implicit_partner(self, u: int, x: int) -> int:
        ctx = self.ctx
        params = self.params
        bit_x = ctx.space.bit_of(x)
        claims: list[int] = []

        for w in codewords_near(ctx, u, 2):
            st = self._site(w)
            if not st.active_square:
                continue
            p, q = st.pq
            if x != p and x != q:
                continue
            region = ctx.space.bit_of(p) | ctx.space.bit_of(q)
            if (u ^ w) & ~region:
                continue
            other = q if x == p else p
            claims.append(u ^ ctx.space.bit_of(other))

        for v in codewords_near(ctx, u, params.cube_dim):
            st = self._site(v)
            if not st.in_g:
                continue
            r = st.r6
            if x not in r:
                continue
            if (u ^ v) & ~direction_mask(ctx.space, r):
                continue
            j = r.index(x)
            claims.append(u ^ ctx.space.bit_of(r[j - 1]))

        if len(claims) > 1:
            raise OverlapError("overlapping swap regions at queried edge")
        return claims[0] if claims else u ^ bit_x


@dataclass
class _Site:
    in_gprime: bool
    in_g: bool
    in_h: bool
    pq: tuple[int, int]
    r6: Optional[tuple[int, ...]]
    active_square: bool


def _resolve_site(fac: Factorisation, w: int) -> _Site:
    ctx, params, tape = fac.ctx, fac.params, fac.tape
    thr = params.coin_threshold(ctx.d)
    gp = tape.coin(w, thr)
    pqw = fac._pq(w)
    in_g = gp and all(
        not tape.coin(w2, thr)
        for w2 in codewords_near(ctx, w, params.rg)
        if w2 != w
    )
    in_h = not any(
        tape.coin(w2, thr) for w2 in codewords_near(ctx, w, params.rh)
    )
    r6 = _draw_r6(ctx, tape, w, params.cube_dim) if in_g else None
    active = in_h
    if active and params.conflict_check:
        w2 = _conflict_partner(ctx, w, *pqw)
        if w2 is not None and _squares_conflict(ctx, w, w2, *fac._pq(w2)):
            active = False
    return _Site(gp, in_g, in_h, pqw, r6, active)


def directional(ctx: CodeContext) -> Factorisation:
    """The baseline factorisation: factor x holds exactly the direction-x edges."""
    check_explicit(ctx.d)
    idx = np.arange(1 << ctx.d, dtype=np.uint32)
    tables = {}
    for i, x in enumerate(ctx.space.directions):
        t = idx ^ np.uint32(1 << i)
        t.flags.writeable = False
        tables[x] = t
    return Factorisation(ctx, "directional", "explicit", tables)


def apply_explicit(ctx: CodeContext, plan: SwapPlan) -> Factorisation:
    """Apply a swap plan to the directional tables, rejecting any overlap."""
    check_explicit(ctx.d)
    d = ctx.d
    space = ctx.space
    idx = np.arange(1 << d, dtype=np.uint32)
    tables = {
        x: idx ^ np.uint32(1 << i) for i, x in enumerate(space.directions)
    }

    claims: dict[int, int] = {}
    writes: list[tuple[int, int, int]] = []

    def claim(vertex: int, dir_pos: int, site: int) -> None:
        key = vertex * d + dir_pos
        owner = claims.setdefault(key, site)
        if owner != site:
            raise OverlapError(
                f"overlapping swap regions: factor slot (vertex={vertex}, "
                f"direction index {dir_pos}) written twice"
            )

    site = 0
    for u in plan.active_squares:
        p, q = plan.pq[u]
        bp, bq = space.bit_of(p), space.bit_of(q)
        ip, iq = space.index[p], space.index[q]
        for w in (u, u ^ bp, u ^ bq, u ^ bp ^ bq):
            claim(w, ip, site)
            claim(w, iq, site)
            writes.append((p, w, w ^ bq))
            writes.append((q, w, w ^ bp))
        site += 1

    for v in plan.g:
        r = plan.r6[v]
        bits = [space.bit_of(x) for x in r]
        positions = [space.index[x] for x in r]
        m = len(r)
        for sel in range(1 << m):
            w = v
            s = sel
            while s:
                low = s & -s
                w ^= bits[low.bit_length() - 1]
                s ^= low
            for j in range(m):
                claim(w, positions[j], site)
                writes.append((r[j], w, w ^ bits[j - 1]))
        site += 1

    for x, w, partner in writes:
        tables[x][w] = partner
    for t in tables.values():
        t.flags.writeable = False
    tape = RandomTape(plan.seed)
    return Factorisation(
        ctx, "construction", "explicit", tables, params=plan.params, tape=tape, plan=plan
    )


def build_explicit(
    ctx: CodeContext, params: ConstructionParams, tape: RandomTape
) -> Factorisation:
    return apply_explicit(ctx, sample_plan(ctx, params, tape))


def implicit_factorisation(
    ctx: CodeContext, params: ConstructionParams, tape: RandomTape
) -> Factorisation:
    """Query-time factorisation; no whole-cube tables are ever built."""
    _check_construction_dims(ctx, params)
    return Factorisation(ctx, "construction", "implicit", params=params, tape=tape)


def random_greedy_factorisation(ctx: CodeContext, tape: RandomTape) -> Factorisation:
    """Repeatedly strip a random perfect matching from the remaining graph.

    The remaining graph stays regular and bipartite, so a perfect matching
    always exists.  Matchings come from augmenting paths explored in seeded
    random order; the resulting factorisation is NOT uniform over all
    1-factorisations, it is just a cheap randomised probe.
    """
    check_explicit(ctx.d)
    d, n = ctx.d, 1 << ctx.d
    rng = random.Random(tape.derive_seed("greedy"))
    used = [0] * n
    left = [u for u in range(n) if u.bit_count() % 2 == 0]
    tables: dict[int, np.ndarray] = {}
    for label in ctx.space.directions:
        pair = _random_perfect_matching(d, n, left, used, rng)
        for u in left:
            v = pair[u]
            i = (u ^ v).bit_length() - 1
            used[u] |= 1 << i
            used[v] |= 1 << i
        arr = np.array(pair, dtype=np.uint32)
        arr.flags.writeable = False
        tables[label] = arr
    return Factorisation(ctx, "greedy", "explicit", tables, tape=tape)


def _random_perfect_matching(
    d: int, n: int, left: Sequence[int], used: Sequence[int], rng: random.Random
) -> list[int]:
    INF = n + 1
    pair = [-1] * n
    dist = [INF] * n

    def dirs_of(u: int) -> list[int]:
        return [i for i in range(d) if not used[u] >> i & 1]

    def bfs() -> bool:
        from collections import deque

        q = deque()
        for u in left:
            if pair[u] == -1:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = INF
        reachable = False
        while q:
            u = q.popleft()
            for i in dirs_of(u):
                w = pair[u ^ (1 << i)]
                if w == -1:
                    reachable = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return reachable

    def augment(u: int) -> bool:
        order = dirs_of(u)
        rng.shuffle(order)
        for i in order:
            v = u ^ (1 << i)
            w = pair[v]
            if w == -1 or (dist[w] == dist[u] + 1 and augment(w)):
                pair[u] = v
                pair[v] = u
                return True
        dist[u] = INF
        return False

    while bfs():
        frees = [u for u in left if pair[u] == -1]
        rng.shuffle(frees)
        for u in frees:
            if pair[u] == -1:
                augment(u)
    if any(pair[u] == -1 for u in left):
        raise RuntimeError("no perfect matching found in a regular bipartite graph")
    return pair


def touched_edge_count(fac: Factorisation) -> int:
    """Edges whose factor differs from their direction (explicit mode)."""
    if fac.mode != "explicit":
        fac = fac.materialize()
    idx = np.arange(1 << fac.d, dtype=np.uint32)
    total = 0
    for i, x in enumerate(fac.directions):
        total += int((fac.table(x) != (idx ^ np.uint32(1 << i))).sum())
    return total // 2


def plan_summary(plan: SwapPlan) -> dict:
    cd = plan.params.cube_dim
    return {
        "gprime": len(plan.gprime),
        "g": len(plan.g),
        "h": len(plan.h),
        "active_squares": len(plan.active_squares),
        "touched_edges": 4 * len(plan.active_squares) + cd * (1 << (cd - 1)) * len(plan.g),
    }


# -- file format -------------------------------------------------------------
#
# JSON lines.  Line 1 is a header; explicit factorisations follow with one
# line per factor listing canonical edges as [lo_text, direction].


def save_factorisation(fac: Factorisation, path: str) -> None:
    ctx = fac.ctx
    header = {
        "type": "factorisation",
        "version": 1,
        "d": ctx.d,
        "k": ctx.k,
        "X": list(ctx.space.directions),
        "kind": fac.kind,
        "mode": fac.mode,
        "seed": fac.seed,
        "params": fac.params.as_dict(ctx.d) if fac.params is not None else None,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        if fac.mode != "explicit":
            return
        idx = np.arange(1 << ctx.d, dtype=np.uint32)
        for x in ctx.space.directions:
            pt = fac.table(x)
            los = np.nonzero(idx < pt)[0]
            diffs = idx[los] ^ pt[los]
            edges = []
            for lo, diff in zip(los.tolist(), diffs.tolist()):
                direction = ctx.space.directions[int(diff).bit_length() - 1]
                edges.append([vertex_text(ctx.space, int(lo)), direction])
            fh.write(
                json.dumps({"factor": x, "edges": edges}, separators=(",", ":")) + "\n"
            )


def load_factorisation(path: str) -> Factorisation:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError("parse error at line 1: empty file")

    def parse_line(i: int) -> dict:
        try:
            obj = json.loads(lines[i])
        except json.JSONDecodeError as exc:
            raise ValueError(f"parse error at line {i + 1}: {exc}") from None
        if not isinstance(obj, dict):
            raise ValueError(f"parse error at line {i + 1}: expected an object")
        return obj

    header = parse_line(0)
    try:
        d = header["d"]
        dirs = tuple(header["X"])
        kind = header["kind"]
        mode = header["mode"]
        seed = header["seed"]
        raw_params = header["params"]
    except KeyError as exc:
        raise ValueError(f"parse error at line 1: missing key {exc}") from None
    ctx = code_mod.build_context(d)
    if ctx.space.directions != dirs:
        raise ValueError("parse error at line 1: direction set does not match d")
    params = ConstructionParams.from_dict(raw_params) if raw_params else None
    tape = RandomTape(seed) if seed is not None else None

    if mode == "implicit":
        if params is None or tape is None:
            raise ValueError("parse error at line 1: implicit stub needs params and seed")
        return implicit_factorisation(ctx, params, tape)

    check_explicit(d)
    idx = np.arange(1 << d, dtype=np.uint32)
    tables = {x: idx.copy() for x in dirs}
    for i in range(1, len(lines)):
        if not lines[i]:
            continue
        obj = parse_line(i)
        try:
            x = obj["factor"]
            edges = obj["edges"]
        except KeyError as exc:
            raise ValueError(f"parse error at line {i + 1}: missing key {exc}") from None
        if x not in ctx.space.index:
            raise ValueError(f"parse error at line {i + 1}: unknown factor {x}")
        t = tables[x]
        for lo_text, direction in edges:
            lo = parse_vertex(ctx.space, lo_text)
            hi = lo ^ ctx.space.bit_of(direction)
            t[lo] = hi
            t[hi] = lo
    for t in tables.values():
        t.flags.writeable = False
    return Factorisation(ctx, kind, "explicit", tables, params=params, tape=tape)
