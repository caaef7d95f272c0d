import random

import pytest
from hypothesis import given, strategies as st

from bisamplerz.basesampler import (FALCON_REFERENCE_RCDT, RCDT, RCDT_SHA256, BaseSampler,
                                    comparison_bits, export_json, generate_rcdt, import_json,
                                    rcdt_pmf, sample_pair, skewed_table, table_checksum,
                                    validate_table, z0_counter, z0_scan)

TOP = (1 << 72) - 1


def boundary_points():
    pts = {0, TOP}
    for t in RCDT:
        pts.update((t - 1, t, t + 1))
    return sorted(p for p in pts if 0 <= p <= TOP)


def test_embedded_table_checksum():
    assert table_checksum(RCDT) == RCDT_SHA256
    validate_table(RCDT)


def test_table_regenerates_exactly():
    assert generate_rcdt() == RCDT


def test_reference_table_close():
    # the Falcon table sits a few units above the exact floor values
    for ours, ref in zip(RCDT, FALCON_REFERENCE_RCDT):
        assert 0 <= ours - ref <= 16


def test_extreme_inputs():
    assert RCDT[0] < 1 << 72 and RCDT[-1] > 0
    assert z0_counter(TOP) == 0
    assert z0_counter(0) == 18
    assert z0_counter(RCDT[0]) == 0
    assert z0_counter(RCDT[0] - 1) == 1
    assert z0_scan(TOP) == 0
    assert z0_scan(0) == 18


def test_scan_equals_counter_on_boundaries():
    pts = boundary_points()
    assert len(pts) >= 37
    for u in pts:
        assert z0_scan(u) == z0_counter(u) == BaseSampler().z0(u)


@given(st.integers(0, TOP))
def test_scan_equals_counter_property(u):
    bits = comparison_bits(u)
    assert sum(a > b for a, b in zip(bits, bits[1:])) <= 1
    assert sorted(bits, reverse=True) == bits
    assert z0_scan(u) == z0_counter(u) == BaseSampler().z0(u)


def test_sample_pair():
    assert sample_pair(0) == (18, 18)
    assert sample_pair((1 << 144) - 1) == (0, 0)
    assert sample_pair(TOP << 72) == (18, 0)
    bs = BaseSampler()
    assert bs.sample_pair(TOP) == (0, 18)


def test_pmf_sums_to_one():
    pmf = rcdt_pmf()
    assert len(pmf) == 19
    assert sum(pmf) == pytest.approx(1.0, abs=1e-15)
    assert pmf[0] == max(pmf)


def test_json_round_trip():
    text = export_json()
    assert import_json(text) == RCDT
    with pytest.raises(ValueError):
        import_json("[1, 2]")
    with pytest.raises(ValueError):
        import_json('["5", "6"]')


def test_validation_rejects_bad_tables():
    t = list(RCDT)
    t[3] = t[2]
    with pytest.raises(ValueError):
        validate_table(t)
    with pytest.raises(ValueError):
        validate_table([1 << 72] + list(RCDT[1:]))


def test_skewed_table_is_valid_and_different():
    t = skewed_table()
    validate_table(t)
    assert t != RCDT and sum(a != b for a, b in zip(t, RCDT)) == 1


def test_fast_sampler_random():
    rng = random.Random(17)
    bs = BaseSampler()
    for _ in range(50_000):
        u = rng.getrandbits(72)
        assert bs.z0(u) == z0_counter(u)
