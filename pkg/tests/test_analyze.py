import random
from itertools import combinations

import numpy as np
import pytest

from cubefactors.code import build_context, code_size, enumerate_code, in_code
from cubefactors.construct import (
    ConstructionParams,
    Factorisation,
    RandomTape,
    SwapPlan,
    apply_explicit,
    build_explicit,
    directional,
    random_greedy_factorisation,
    touched_edge_count,
)
from cubefactors.cube import Edge, direction_mask, edge_at
from cubefactors.analyze import (
    SubsetSpec,
    bfs_components,
    code_intersection,
    code_intersections,
    connectivity_profile,
    decomposition_of,
    is_connected,
    min_connecting_prefix,
    psi_criterion,
    r_of,
    r_scan,
    small_cube_connectivity,
    tf_class_sizes,
    tf_connectivity,
    tf_context,
    tf_label,
    union_components,
    untouched_parallel_paths,
    untouched_path_histogram,
    validate,
)

CTX7 = build_context(7)
FAC7 = directional(CTX7)
SCALED = ConstructionParams(pg=0.05, rg=6, rh=4, cube_dim=6)


def _crafted_square(ctx, u, p, q):
    plan = SwapPlan(ConstructionParams(), 0, (), (), (u,), {u: (p, q)}, {}, (u,))
    return apply_explicit(ctx, plan)


def _tables_copy(fac):
    return {x: fac.table(x).copy() for x in fac.directions}


def _bfs_labels(fac, dirs):
    n = 1 << fac.d
    tables = [fac.table(x) for x in dirs]
    label = [-1] * n
    for start in range(n):
        if label[start] >= 0:
            continue
        label[start] = start
        stack = [start]
        while stack:
            u = stack.pop()
            for pt in tables:
                v = int(pt[u])
                if label[v] < 0:
                    label[v] = start
                    stack.append(v)
    return label


# -- validity ------------------------------------------------------------------


def test_validate_accepts_valid_factorisations():
    assert validate(FAC7).ok
    assert validate(random_greedy_factorisation(build_context(4), RandomTape(2))).ok
    assert validate(build_explicit(build_context(10), SCALED, RandomTape(13))).ok


def test_validate_detects_fixed_point():
    ctx = build_context(3)
    tables = _tables_copy(directional(ctx))
    tables[3] = np.arange(8, dtype=np.uint32)
    rep = validate(Factorisation(ctx, "crafted", "explicit", tables))
    assert not rep.ok
    assert (rep.vertex, rep.factor) == (0, 3)
    assert rep.message == "factor has a fixed point"


def test_validate_detects_broken_involution():
    ctx = build_context(3)
    tables = _tables_copy(directional(ctx))
    tables[1][1] = 2
    rep = validate(Factorisation(ctx, "crafted", "explicit", tables))
    assert not rep.ok
    assert (rep.vertex, rep.factor) == (0, 1)
    assert rep.message == "factor is not an involution"


def test_validate_detects_non_neighbour_partner():
    ctx = build_context(3)
    tables = _tables_copy(directional(ctx))
    tables[1] = np.arange(8, dtype=np.uint32) ^ np.uint32(3)
    rep = validate(Factorisation(ctx, "crafted", "explicit", tables))
    assert not rep.ok
    assert (rep.vertex, rep.factor) == (0, 1)
    assert rep.message == "partner is not a neighbour"


def test_validate_detects_double_assignment():
    ctx = build_context(3)
    tables = _tables_copy(directional(ctx))
    tables[2] = tables[1].copy()
    rep = validate(Factorisation(ctx, "crafted", "explicit", tables))
    assert not rep.ok
    assert (rep.vertex, rep.factor) == (0, 2)
    assert rep.message == "edge already assigned to factor 1"


def test_subset_spec_validation():
    with pytest.raises(ValueError, match="nonempty"):
        union_components(FAC7, [])
    with pytest.raises(ValueError, match="direction 9 not in X"):
        union_components(FAC7, [9])
    rep = union_components(FAC7, SubsetSpec((2, 1, 2)))
    assert rep.count == 32


# -- components ------------------------------------------------------------------


def test_directional_unions_split_into_subcubes():
    dirs = CTX7.space.directions
    for r in range(1, 8):
        rep = union_components(FAC7, dirs[:r])
        assert rep.count == 1 << (7 - r)
        assert all(s == 1 << r for s in rep.sizes)


def test_directional_unions_exhaustive_d4():
    ctx = build_context(4)
    fac = directional(ctx)
    for r in range(1, 5):
        for sub in combinations(ctx.space.directions, r):
            rep = union_components(fac, sub)
            assert rep.count == 1 << (4 - r)
            assert all(s == 1 << r for s in rep.sizes)


def test_directional_unions_large_dims():
    # one sampled subset per size keeps d = 11, 12 affordable
    rng = random.Random(5)
    for d in (11, 12):
        ctx = build_context(d)
        fac = directional(ctx)
        for r in range(1, d + 1):
            sub = rng.sample(ctx.space.directions, r)
            rep = union_components(fac, sub)
            assert rep.count == 1 << (d - r)
            assert all(s == 1 << r for s in rep.sizes)


def test_bfs_oracle_matches_union_find():
    cases = []
    fac5 = directional(build_context(5))
    cases += [(fac5, sub) for sub in ([1], [1, 2], [2, 4, 7], [1, 2, 3, 4, 7])]
    g4 = random_greedy_factorisation(build_context(4), RandomTape(1))
    cases += [(g4, sub) for sub in ([1, 2], [2, 4, 7], [1, 2, 4, 7])]
    sq = _crafted_square(CTX7, 0, 1, 2)
    cases += [(sq, sub) for sub in ([1, 2], [1, 3], [2, 3, 4])]
    big = build_explicit(build_context(10), SCALED, RandomTape(13))
    cases += [(big, sub) for sub in ([1, 2, 3], [2, 7, 13], list(big.directions))]
    for fac, sub in cases:
        a = union_components(fac, sub)
        b = bfs_components(fac, sub)
        assert a.count == b.count
        assert a.sizes == b.sizes


def test_square_swap_preserves_pair_union():
    # the swapped square keeps the same four edges, only their factors change
    sq = _crafted_square(CTX7, 0, 1, 2)
    assert union_components(sq, [1, 2]).sizes == union_components(FAC7, [1, 2]).sizes


# -- small cubes -------------------------------------------------------------------


def test_small_cube_connectivity_directional():
    got = small_cube_connectivity(FAC7, [1, 2, 3])
    assert len(got) == 1 << 4
    assert all(got.values())
    mask = direction_mask(CTX7.space, (1, 2, 3))
    assert set(got) == {u & ~mask for u in range(1 << 7)}


def test_small_cube_connectivity_matches_bfs():
    fac = build_explicit(build_context(10), SCALED, RandomTape(13))
    dirs = (1, 2, 3)
    got = small_cube_connectivity(fac, dirs)
    label = _bfs_labels(fac, dirs)
    mask = direction_mask(fac.ctx.space, dirs)
    expect = {}
    for u in range(1 << 10):
        expect.setdefault(u & ~mask, set()).add(label[u])
    assert got == {i: len(s) == 1 for i, s in expect.items()}


# -- subset algebra ----------------------------------------------------------------


def test_decomposition_of_span():
    dec = decomposition_of(CTX7, [1, 2, 3])
    assert dec.subspace.dim == 2
    assert dec.label_width == 1
    assert set(dec.subspace.spanning_input) <= {1, 2, 3}
    assert dec.subspace.contains(3)
    full = decomposition_of(CTX7, CTX7.space.directions)
    assert full.subspace.dim == CTX7.k
    assert full.label_width == 0


def test_tf_context_masks():
    tfc = tf_context(CTX7, [1, 2, 3])
    assert tfc.masks == (0b1111000,)
    assert tfc.n_labels == 1
    # directions 4..7 sit in the one nonzero coset of span{1,2,3}
    assert tf_label(tfc, 0) == tf_label(tfc, 0b0000111)
    assert tf_label(tfc, 0b0001000).bits == 1
    assert tf_label(tfc, 0b0001000).psi == 1
    assert tf_label(tfc, 0b0011000).bits == 0


def test_tf_label_constant_on_small_cubes():
    rng = random.Random(0)
    for _ in range(20):
        dirs = sorted(rng.sample(CTX7.space.directions, rng.randint(1, 6)))
        tfc = tf_context(CTX7, dirs)
        for _ in range(20):
            u = rng.randrange(1 << 7)
            w = u
            for x in dirs:
                if rng.random() < 0.5:
                    w ^= CTX7.space.bit_of(x)
            assert tf_label(tfc, u) == tf_label(tfc, w)


def test_tf_label_constant_exhaustive():
    # every vertex of every small cube, for a few fixed subsets
    for dirs in ([1, 2, 3], [2, 7], [1, 2, 3, 4, 7]):
        tfc = tf_context(CTX7, dirs)
        span = [0]
        for x in dirs:
            span += [w ^ CTX7.space.bit_of(x) for w in span]
        for u in range(1 << 7):
            base = tf_label(tfc, u)
            assert all(tf_label(tfc, u ^ s) == base for s in span)


def test_tf_class_sizes_example():
    assert tf_class_sizes(tf_context(CTX7, [1, 2, 3])) == {0: 64, 1: 64}


def test_tf_class_sizes_general_formula():
    # realised classes: one per pattern over the cosets that hold a direction
    rng = random.Random(1)
    cases = [(9, (3,)), (9, (1, 3)), (7, (1,)), (10, (2, 5, 8))]
    for _ in range(16):
        d = rng.choice([7, 9, 10, 12])
        ctx = build_context(d)
        dirs = tuple(sorted(rng.sample(ctx.space.directions, rng.randint(1, d))))
        cases.append((d, dirs))
    for d, dirs in cases:
        ctx = build_context(d)
        tfc = tf_context(ctx, dirs)
        nonempty = sum(1 for m in tfc.masks if m)
        sizes = tf_class_sizes(tfc)
        assert len(sizes) == 1 << nonempty
        assert set(sizes.values()) == {1 << (d - nonempty)}


def test_tf_class_sizes_all_even_subset_has_empty_cosets():
    # span{3} at d=9 misses the odd directions, so some cosets hold none
    ctx = build_context(9)
    tfc = tf_context(ctx, (3,))
    assert tfc.n_labels == 7
    assert sum(1 for m in tfc.masks if m) == 4
    sizes = tf_class_sizes(tfc)
    assert len(sizes) == 16
    assert set(sizes.values()) == {32}


def test_tf_class_sizes_with_odd_direction_fills_every_coset():
    # an odd-weight direction makes every coset active, giving the maximum
    for d, dirs in ((9, (1, 3)), (7, (1,)), (12, (5, 6))):
        ctx = build_context(d)
        tfc = tf_context(ctx, dirs)
        assert all(m for m in tfc.masks)
        ell = decomposition_of(ctx, dirs).subspace.dim
        n_classes = 1 << ((1 << (ctx.k - ell)) - 1)
        sizes = tf_class_sizes(tfc)
        assert len(sizes) == n_classes
        assert set(sizes.values()) == {(1 << d) // n_classes}


def test_tf_connectivity_directional():
    got = tf_connectivity(FAC7, [1, 2, 3])
    assert got == {0: False, 1: False}
    assert tf_connectivity(FAC7, CTX7.space.directions) == {0: True}


# -- code meets small cubes ---------------------------------------------------------


def test_code_intersections_spanning_subset():
    got = code_intersections(CTX7, [1, 2, 4])
    assert len(got) == 16
    assert set(got.values()) == {1}


def test_code_intersections_full_subset():
    got = code_intersections(CTX7, CTX7.space.directions)
    assert got == {0: code_size(CTX7)}


def test_code_intersections_match_scalar_and_psi():
    rng = random.Random(2)
    for d in (7, 9):
        ctx = build_context(d)
        for _ in range(10):
            dirs = tuple(sorted(rng.sample(ctx.space.directions, rng.randint(1, d))))
            ell = decomposition_of(ctx, dirs).subspace.dim
            expected_nonzero = 1 << (len(dirs) - ell)
            got = code_intersections(ctx, dirs)
            assert sum(got.values()) == code_size(ctx)
            for cube_id, count in got.items():
                assert count in (0, expected_nonzero)
                assert count == code_intersection(ctx, dirs, cube_id)
                assert (count > 0) == psi_criterion(ctx, dirs, cube_id)


def test_cube_id_validation():
    with pytest.raises(ValueError, match="zero on the subset"):
        code_intersection(CTX7, [1, 2], 0b0000001)
    with pytest.raises(ValueError, match="zero on the subset"):
        psi_criterion(CTX7, [1, 2], 1 << 7)
    assert psi_criterion(CTX7, CTX7.space.directions, 0)


# -- parallel paths ----------------------------------------------------------------


def test_directional_paths_all_untouched():
    for w in (0, 0b0000111):
        for y in (1, 4, 7):
            assert untouched_parallel_paths(FAC7, edge_at(CTX7.space, w, y)) == 6
    assert untouched_path_histogram(FAC7) == {0: 112}


def test_paths_require_code_endpoint():
    with pytest.raises(ValueError, match="no endpoint in the code"):
        untouched_parallel_paths(FAC7, Edge(1, 2))


def test_square_swap_disturbs_nearby_parallel_paths():
    sq = _crafted_square(CTX7, 0, 1, 2)
    # edge {0,1}: only the x=2 path crosses rewritten slots
    assert untouched_parallel_paths(sq, edge_at(CTX7.space, 0, 1)) == 5
    # edge {0,64}: both the x=1 and x=2 paths start at rewritten slots
    assert untouched_parallel_paths(sq, edge_at(CTX7.space, 0, 7)) == 4


def test_cube_swap_path_histogram_frozen():
    # pg=0.05 at d=7 yields exactly one 6-cube swap for these seeds
    for seed in (5, 7, 9):
        fac = build_explicit(CTX7, ConstructionParams(pg=0.05), RandomTape(seed))
        hist = untouched_path_histogram(fac)
        assert hist == {1: 48, 5: 48, 6: 16}
        assert sum(hist.values()) == 7 * code_size(CTX7)
        assert max(hist) <= fac.params.cube_dim


# -- minimum connecting subset size ---------------------------------------------------


def test_r_of_directional_needs_all_factors():
    for d in (3, 4, 5):
        fac = directional(build_context(d))
        r, timings = r_scan(fac)
        assert r == d
        assert set(timings) == set(range(1, d + 1))


def test_r_of_greedy_frozen():
    ctx = build_context(4)
    got = [
        r_of(random_greedy_factorisation(ctx, RandomTape(s))) for s in (7, 8, 9)
    ]
    assert got == [4, 4, 3]


def test_r_of_dimension_guard():
    fac = directional(build_context(11))
    with pytest.raises(ValueError, match="guarded to d <= 10"):
        r_of(fac)
    with pytest.raises(ValueError, match="guarded to d <= 4"):
        r_of(directional(build_context(5)), max_d=4)


def test_r_of_swapped_construction():
    # all d factors always connect, so r_of <= d; this seed needs only 7
    ctx = build_context(8)
    fac = build_explicit(ctx, SCALED, RandomTape(2))
    assert touched_edge_count(fac) == 64
    assert r_of(fac) == 7


def test_r_of_supersets_stay_connected():
    # connectivity is monotone in the subset: every size >= r_of connects
    fac = random_greedy_factorisation(build_context(6), RandomTape(11))
    r = r_of(fac)
    for size in range(r, 7):
        for sub in combinations(fac.directions, size):
            assert union_components(fac, sub).count == 1


def test_r_of_definition_spot_check():
    # r_of == 3: some 2-subset union is disconnected, every 3-subset connects
    ctx = build_context(4)
    fac = random_greedy_factorisation(ctx, RandomTape(9))
    assert any(
        union_components(fac, sub).count > 1
        for sub in combinations(ctx.space.directions, 2)
    )
    assert all(
        union_components(fac, sub).count == 1
        for sub in combinations(ctx.space.directions, 3)
    )


# -- fast connectivity engine ----------------------------------------------------------


def test_is_connected_matches_union_find():
    rng = random.Random(3)
    facs = [
        directional(build_context(5)),
        random_greedy_factorisation(build_context(5), RandomTape(4)),
        random_greedy_factorisation(build_context(4), RandomTape(5)),
        _crafted_square(CTX7, 0, 3, 6),
    ]
    for fac in facs:
        for _ in range(8):
            dirs = rng.sample(fac.directions, rng.randint(1, fac.d))
            assert is_connected(fac, dirs) == (union_components(fac, dirs).count == 1)


def test_min_connecting_prefix_directional():
    fac = directional(build_context(5))
    assert min_connecting_prefix(fac, [3, 1, 7, 2, 4]) == 5


def test_min_connecting_prefix_is_minimal():
    fac = random_greedy_factorisation(build_context(4), RandomTape(3))
    rng = random.Random(4)
    for _ in range(5):
        order = rng.sample(fac.directions, 4)
        p = min_connecting_prefix(fac, order)
        assert is_connected(fac, order[:p])
        if p > 1:
            assert not is_connected(fac, order[: p - 1])


def test_min_connecting_prefix_needs_permutation():
    fac = directional(build_context(4))
    with pytest.raises(ValueError, match="permutation"):
        min_connecting_prefix(fac, [1, 2])
    with pytest.raises(ValueError, match="permutation"):
        min_connecting_prefix(fac, [1, 1, 2, 4])


def test_connectivity_profile_directional_and_deterministic():
    fac = directional(build_context(4))
    a = connectivity_profile(fac, 6, random.Random(7))
    b = connectivity_profile(fac, 6, random.Random(7))
    assert a == b
    assert a == [4] * 6
    g = random_greedy_factorisation(build_context(4), RandomTape(8))
    prof = connectivity_profile(g, 10, random.Random(8))
    assert len(prof) == 10
    assert all(1 <= p <= 4 for p in prof)
