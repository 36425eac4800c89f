import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdiff.errors import ConfigError, ResourceLimitError
from qdiff.lattice import BandProfile, LatticeConfig, band_count, band_offsets, periodic_distance, s_power_checks


def _count_by_scan(d, w):
    rng = range(-w, w + 1)
    return sum(1 for x in itertools.product(rng, repeat=d) if 1 <= sum(c * c for c in x) <= w * w)


@pytest.mark.parametrize("d,w", [(1, 2), (1, 8), (2, 2), (2, 5), (3, 2)])
def test_band_count_matches_scan(d, w):
    assert band_count(d, w) == _count_by_scan(d, w)


def test_band_count_known_values():
    assert band_count(1, 8) == 16
    assert band_count(2, 2) == 12
    assert band_count(3, 2) == 32


def test_offsets_are_symmetric_and_exclude_origin():
    off = band_offsets(2, 3)
    assert not np.any(np.all(off == 0, axis=1))
    assert {tuple(o) for o in off} == {tuple(-o) for o in off}


def test_periodic_distance_wraps():
    cfg = LatticeConfig(d=2, n=8, w=2)
    assert periodic_distance(cfg, (3, 3), (-4, -4)) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert periodic_distance(cfg, (0, 0), (0, 0)) == 0


def test_config_validation():
    with pytest.raises(ConfigError):
        LatticeConfig(d=1, n=4, w=2)
    with pytest.raises(ConfigError):
        LatticeConfig(d=0, n=5, w=2)
    with pytest.raises(ConfigError):
        LatticeConfig(d=1, n=5, w=1)


def test_config_round_trip():
    cfg = LatticeConfig(d=2, n=7, w=3)
    assert LatticeConfig.from_dict(cfg.to_dict()) == cfg


@given(st.integers(1, 2), st.integers(2, 3), st.data())
@settings(max_examples=40, deadline=None)
def test_index_site_bijection(d, w, data):
    n = data.draw(st.integers(2 * w + 1, 2 * w + 4))
    cfg = LatticeConfig(d=d, n=n, w=w)
    i = data.draw(st.integers(0, cfg.volume - 1))
    assert cfg.index(cfg.site(i)) == i
    x = cfg.site(i)
    assert cfg.canonical(tuple(c + 3 * n for c in x)) == x


def test_neighbor_table_rows_have_M_distinct_entries():
    cfg = LatticeConfig(d=2, n=6, w=2)
    nbr = cfg.neighbor_table()
    assert nbr.shape == (cfg.volume, cfg.M)
    for i in range(cfg.volume):
        assert len(set(nbr[i])) == cfg.M
        assert i not in nbr[i]


def test_band_profile_entries():
    cfg = LatticeConfig(d=1, n=12, w=2)
    S = BandProfile(cfg)
    assert S.value == Fraction(1, 3)
    assert S.s_entry((0,), (2,)) == Fraction(1, 3)
    assert S.s_entry((0,), (3,)) == 0
    assert S.s_entry((0,), (0,)) == 0
    dense = S.dense()
    np.testing.assert_allclose(dense, dense.T)
    np.testing.assert_allclose(dense.sum(axis=1), cfg.M / (cfg.M - 1))


def test_s_squared_row_sum_against_explicit_matrix():
    cfg = LatticeConfig(d=1, n=12, w=2)
    S2 = BandProfile(cfg).dense_power(2)
    np.testing.assert_allclose(S2.sum(axis=1), 16 / 9, rtol=0, atol=1e-14)


@pytest.mark.parametrize("d,n,w", [(1, 40, 4), (2, 20, 3)])
@pytest.mark.parametrize("l", [1, 2, 3, 4])
def test_s_power_checks_agree_with_dense_power(d, n, w, l):
    cfg = LatticeConfig(d=d, n=n, w=w)
    prof = BandProfile(cfg)
    rep = s_power_checks(prof, l)
    assert rep.passed
    if cfg.volume <= 1600:
        row0 = prof.dense_power(l)[cfg.origin_index]
        assert row0.max() == pytest.approx(rep.sup_entry, rel=1e-12)


def test_dense_mask_refused_on_large_lattice():
    with pytest.raises(ResourceLimitError):
        BandProfile(LatticeConfig(d=2, n=70, w=2)).band_mask()
