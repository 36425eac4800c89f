import itertools
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdiff import LatticeConfig
from qdiff.diagrams import (
    build_chain_graph,
    collapse_parallel_bridges,
    configuration_classes,
    covariance_bruteforce,
    covariance_table,
    covariance_via_lumpings,
    edge_product_expectation,
    enumerate_pairings,
    enumerate_skeletons,
    expand_skeleton,
    j_indicator,
    lumping_decomposition,
    lumping_of_labels,
    orbit_partition,
    q_indicator,
    r_value,
    r_value_naive,
    two_thirds_bound,
)
from qdiff.diagrams.bounds import aggregated_pairing_check, coeff_sum_cutoff, pairing_bound_check, path_matrix
from qdiff.diagrams.covariance import covariance_monte_carlo, set_partitions
from qdiff.diagrams.orbits import touch_pattern
from qdiff.diagrams.pairings import (
    Pairing,
    adjacency_violations,
    chain_tuples,
    has_parallel_bridges,
    skeleton_by_id,
)
from qdiff.diagrams.values import r_signature
from qdiff.errors import ConfigError, ResourceLimitError

CFG = LatticeConfig(d=1, n=5, w=2)
O = CFG.origin_index

# Skeleton counts and orbit statistics frozen from a separate prototype that
# filters on black-vertex adjacency instead of admissibility.
SKELETON_L_COUNTS = {
    1: {0: 4},
    2: {0: 25, 1: 13},
    3: {0: 288, 1: 132, 2: 16},
    4: {0: 3062, 1: 2334, 2: 301, 3: 9},
}


# ---------------------------------------------------------------- chains


def test_chain_graph_layout():
    g = build_chain_graph(2, 1, 1, 2)
    assert (g.L1, g.L2, g.n_vertices, g.n_edges) == (3, 3, 6, 6)
    assert g.roots == (0, 3)
    assert g.summits == (2, 4)
    assert g.edges[2] == (2, 0) and g.edges[5] == (5, 3)
    assert g.white == frozenset({0, 2, 3, 4})
    assert [g.path_of(e) for e in range(6)] == [0, 0, 1, 2, 3, 3]


def test_q_indicator_pins_and_forbids_backtracking():
    g = build_chain_graph(2, 1, 1, 1)
    # chain 1: 0 -> 1 -> 2(summit) -> 0 ; chain 2: 3 -> 4(summit) -> 3
    assert q_indicator(g, (0, 1, 2, 0, 4), 2, 4) == 1
    assert q_indicator(g, (0, 1, 0, 0, 4), 0, 4) == 0  # black vertex 1 backtracks
    assert q_indicator(g, (0, 1, 2, 1, 4), 2, 4) == 0  # second root unpinned


def test_lumping_and_j_indicator():
    g = build_chain_graph(1, 1, 1, 1)
    x = (0, 1, 0, 1)
    lump = lumping_of_labels(g, x)
    assert lump == ((0, 1, 2, 3),)
    assert j_indicator(g, (0, 1), x) == 1
    assert j_indicator(g, (0, 2), x) == 0


# ---------------------------------------------------------------- expectations


def test_edge_expectation_basic_moments():
    s = Fraction(1, CFG.M - 1)
    assert edge_product_expectation(CFG, [(0, 1)]) == 0
    assert edge_product_expectation(CFG, [(0, 1), (1, 0)]) == s
    assert edge_product_expectation(CFG, [(0, 1), (0, 1)]) == 0
    assert edge_product_expectation(CFG, [(0, 1), (1, 0), (1, 0), (0, 1)]) == s**2
    assert edge_product_expectation(CFG, [(0, 0), (0, 0)]) == 0
    assert edge_product_expectation(CFG, []) == 1


def test_edge_expectation_against_sampling():
    from qdiff.sampler import SeedSpec, sample_band_matrix

    edges = [(0, 1), (1, 2), (2, 0), (0, 2), (2, 1), (1, 0)]
    acc = 0j
    R = 4000
    for r in range(R):
        H = sample_band_matrix(CFG, SeedSpec(17, r)).dense()
        acc += np.prod([H[u, v] for u, v in edges])
    assert abs(acc / R - float(edge_product_expectation(CFG, edges))) < 5 / (27 * np.sqrt(R))


def test_set_partitions_are_bell_numbers():
    assert [sum(1 for _ in set_partitions(range(k))) for k in range(1, 7)] == [1, 2, 5, 15, 52, 203]


# ---------------------------------------------------------------- covariance


def test_covariance_golden_two_two_two_two():
    tab = covariance_table(CFG, build_chain_graph(2, 2, 2, 2))
    assert tab.unit == Fraction(1, 81)
    expect = np.diag([6, 6, 0, 6, 6])
    assert np.array_equal(tab.counts, expect)
    assert tab.value(1, 1) == Fraction(2, 27)
    assert tab.value(O, O) == 0


def test_covariance_golden_three_zero_two_one():
    # y1 is pinned to the origin by the empty second path; y2 is free
    tab = covariance_table(CFG, build_chain_graph(3, 0, 2, 1))
    expect = np.zeros((5, 5), dtype=int)
    expect[O] = [3, 3, 0, 3, 3]
    assert np.array_equal(tab.counts, expect)
    assert tab.value(O, 1) == Fraction(1, 9)


def test_odd_edge_count_vanishes():
    assert not covariance_table(CFG, build_chain_graph(2, 1, 1, 1)).counts.any()


@given(st.sampled_from([n for t in (2, 4, 6) for n in chain_tuples(t)]))
@settings(max_examples=25, deadline=None)
def test_lumping_route_equals_labeling_route(n):
    g = build_chain_graph(*n)
    tab = covariance_table(CFG, g)
    dec = lumping_decomposition(CFG, g)
    assert dec.odd_rows_nonzero == 0
    for y1, y2 in itertools.product(range(CFG.volume), repeat=2):
        assert dec.connected_sum(y1, y2) == tab.value(y1, y2)
        assert dec.complement_sum(y1, y2) == 0


def test_bruteforce_and_lumpings_single_entry():
    g = build_chain_graph(2, 1, 1, 2)
    assert covariance_bruteforce(CFG, g, 1, 1) == covariance_via_lumpings(CFG, g, 1, 1) == Fraction(1, 9)


def test_monte_carlo_covariance_small_run():
    g = build_chain_graph(2, 1, 1, 2)
    res = covariance_monte_carlo(CFG, g, 1, 1, 20000, 3)
    assert res.within(1 / 9)


# ---------------------------------------------------------------- pairings


def test_pairing_counts():
    g = build_chain_graph(1, 1, 1, 1)
    assert len(enumerate_pairings(g, connected_only=False)) == 3
    assert len(enumerate_pairings(g)) == 2
    assert len(enumerate_pairings(build_chain_graph(2, 1, 2, 1), connected_only=False)) == 15
    assert enumerate_pairings(build_chain_graph(1, 1, 1, 0)) == []


def test_pairing_rejects_non_matching():
    g = build_chain_graph(1, 1, 1, 1)
    with pytest.raises(ConfigError):
        Pairing(g, ((0, 1), (1, 2)))


def test_parallel_bridges_detected_and_collapsed():
    # two 2-cycles; pairing edges in opposite order makes a ladder through
    # the black vertices 1 and 3, pairing them in equal order does not
    g = build_chain_graph(2, 0, 2, 0)
    assert not has_parallel_bridges(Pairing(g, ((0, 2), (1, 3))))
    q = Pairing(g, ((0, 3), (1, 2)))
    assert has_parallel_bridges(q)
    sigma, l = collapse_parallel_bridges(q)
    assert sigma.size == 1 and l == (2,)
    assert expand_skeleton(sigma, l) == q


@given(st.sampled_from([n for t in (2, 4, 6, 8) for n in chain_tuples(t)]), st.data())
@settings(max_examples=60, deadline=None)
def test_collapse_expand_round_trip(n, data):
    pairings = enumerate_pairings(build_chain_graph(*n))
    if not pairings:
        return
    p = data.draw(st.sampled_from(pairings))
    sigma, l = collapse_parallel_bridges(p)
    assert not has_parallel_bridges(sigma)
    assert sum(l) == p.size
    assert expand_skeleton(sigma, l) == p


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_skeleton_orbit_statistics(m):
    sk = enumerate_skeletons(m)
    assert Counter(orbit_partition(s).L for s in sk) == SKELETON_L_COUNTS[m]
    assert len({s.key() for s in sk}) == len(sk)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_skeletons_satisfy_adjacency_and_two_thirds(m):
    for s in enumerate_skeletons(m):
        assert adjacency_violations(s) == []
        assert orbit_partition(s).L <= two_thirds_bound(m)


def test_skeleton_limits():
    with pytest.raises(ResourceLimitError):
        enumerate_skeletons(6)
    with pytest.raises(ConfigError):
        enumerate_skeletons(0)
    with pytest.raises(ConfigError):
        skeleton_by_id(2, 38)


def test_orbit_partition_of_simple_loop():
    sigma = skeleton_by_id(1, 0)
    op = orbit_partition(sigma)
    assert sorted(v for o in op.orbits for v in o) == list(range(sigma.graph.n_vertices))
    assert op.L == 0


def test_touch_patterns_single_bridge():
    assert {touch_pattern(s) for s in enumerate_skeletons(1)} == {((1, 3),)}


def test_configuration_classes_two_bridges():
    cls = configuration_classes(2)
    assert len(cls) == 4
    assert sum(n for n, _ in cls.values()) == 38
    assert cls[((1, 2), (1, 3))] == (24, 12)


# ---------------------------------------------------------------- R values


R_CFG = LatticeConfig(d=1, n=10, w=2)


def test_r_value_golden():
    sigma = skeleton_by_id(2, 3)
    assert r_value(R_CFG, sigma, (2, 1)) == pytest.approx(16 / 27, rel=1e-14)
    assert r_value(R_CFG, sigma, (1, 1)) == 0.0


@given(st.integers(1, 3), st.data())
@settings(max_examples=20, deadline=None)
def test_r_value_einsum_equals_naive(m, data):
    cfg = LatticeConfig(d=1, n=6, w=2)
    sk = enumerate_skeletons(m)
    sigma = sk[data.draw(st.integers(0, len(sk) - 1))]
    if cfg.volume ** (sigma.graph.n_vertices - 2) > 2 * 10**6:
        return
    l = tuple(data.draw(st.lists(st.integers(1, 3), min_size=m, max_size=m)))
    assert r_value(cfg, sigma, l) == pytest.approx(r_value_naive(cfg, sigma, l), rel=1e-12, abs=1e-15)


def test_r_signature_shares_values():
    groups = {}
    for sigma in enumerate_skeletons(2):
        for l in itertools.product((1, 2), repeat=2):
            groups.setdefault(r_signature(sigma, l), []).append(r_value(R_CFG, sigma, l))
    for vals in groups.values():
        assert max(vals) - min(vals) < 1e-12


def test_r_value_rejects_bad_multiplicities():
    with pytest.raises(ConfigError):
        r_value(R_CFG, skeleton_by_id(2, 3), (1,))
    with pytest.raises(ConfigError):
        r_value(R_CFG, skeleton_by_id(2, 3), (0, 1))


# ---------------------------------------------------------------- bounds


def test_pairing_bound_at_zero_time():
    rep = pairing_bound_check(CFG, 0.0)
    assert np.all(rep.lhs == 0) and np.all(rep.rhs == 0)
    assert rep.passed


def test_pairing_bound_origin_pair():
    rep = pairing_bound_check(CFG, 0.5)
    lhs, rhs = rep.at(O, O)
    assert lhs <= rhs + rep.coeff_tail


def test_aggregated_pairing_identity():
    res = aggregated_pairing_check(CFG, 0.3)
    assert res["pass"]
    assert res["max_identity_error"] < 1e-12


def test_cutoff_sum_basic_cases():
    sigma = enumerate_skeletons(3)[0]
    assert coeff_sum_cutoff(sigma, 0.0, 1000, 0.3) == 0.0
    # M^mu = 50^0.25 ~ 2.66 admits no l with three entries >= 1
    assert coeff_sum_cutoff(sigma, 2.0, 50, 0.25) == 0.0
    assert coeff_sum_cutoff(sigma, 2.0, 1000, 0.3) > 0
    with pytest.raises(ConfigError):
        coeff_sum_cutoff(enumerate_skeletons(2)[0], 2.0, 1000, 0.3)
    with pytest.raises(ResourceLimitError):
        coeff_sum_cutoff(sigma, 2.0, 10**6, 0.3)


def test_path_matrix_reproduces_chain_lengths():
    for sigma in enumerate_skeletons(3)[:50]:
        C = path_matrix(sigma)
        assert tuple(C.sum(axis=1)) == sigma.graph.n
