import math
import random

import numpy as np
import pytest

from bisamplerz.basesampler import RCDT, rcdt_pmf, skewed_table
from bisamplerz.campaigns import base_samples, failure_campaign
from bisamplerz.fsm import DualPathSampler, Policy, SyntheticEngine
from bisamplerz.kernel import SampleTask
from bisamplerz.perf import RejectionModel
from bisamplerz.stats import (InsufficientData, base_report, chi_square, dist_report,
                              failure_histogram, histogram_from_retries, merge_bins,
                              assisted_success_rate, renyi_divergence, target_pmf)


def draw(rng, mu, sigma, n):
    """Reference sampler: inverse CDF on the truncated discrete Gaussian."""
    ks, pmf = target_pmf(mu, sigma)
    return rng.choice(ks, size=n, p=pmf)


def test_target_pmf_shape():
    ks, pmf = target_pmf(0.0, 1.5)
    assert len(ks) == 61 and pmf.sum() == pytest.approx(1.0)
    i0 = int(np.where(ks == 0)[0][0])
    assert pmf[i0 + 3] == pytest.approx(pmf[i0 - 3])
    assert pmf[i0 + 1] / pmf[i0] == pytest.approx(math.exp(-1 / (2 * 1.5 ** 2)))
    ks, pmf = target_pmf(0.5, 1.5)
    i0 = int(np.where(ks == 0)[0][0])
    assert pmf[i0] == pytest.approx(pmf[i0 + 1])
    with pytest.raises(ValueError):
        target_pmf(0.0, 1.5, range(-5, 6))


def test_exactly_proportional_counts():
    _, pmf = target_pmf(-7.3, 1.7)
    cs = chi_square(pmf * 1e6, pmf)
    assert cs.statistic == pytest.approx(0.0, abs=1e-9)
    assert cs.p_value == pytest.approx(1.0)


def test_merge_bins():
    o, e = merge_bins([1, 1, 10, 1, 1], [1.0, 4.0, 10.0, 1.0, 1.0])
    assert list(e) == [5.0, 12.0]
    assert list(o) == [2.0, 12.0]
    o, e = merge_bins([3], [3.0])
    assert len(o) == 1


def test_degenerate_inputs():
    with pytest.raises(ValueError):
        chi_square([20_000], [1.0])
    with pytest.raises(ValueError):
        chi_square([1, 2], [0.5, 0.25, 0.25])
    with pytest.raises(InsufficientData):
        chi_square([10, 10], [0.5, 0.5])


@pytest.mark.parametrize("mu,sigma", [(0.0, 1.3), (0.5, 1.5), (-7.3, 1.8)])
def test_correct_sampler_passes(mu, sigma):
    rng = np.random.default_rng(12)
    rep = dist_report(draw(rng, mu, sigma, 100_000), mu, sigma)
    assert rep.passed() and rep.n == 100_000
    assert rep.renyi2 == pytest.approx(1.0, abs=1e-3)
    d = rep.to_dict()
    assert d["passed"] is True and len(d["support"]) == 61


def test_false_rejection_rate_is_near_alpha():
    rng = np.random.default_rng(5)
    fails = sum(not dist_report(draw(rng, 0.25, 1.5, 20_000), 0.25, 1.5).passed()
                for _ in range(200))
    # alpha = 0.01; 200 repetitions give a mean of 2
    assert fails <= 8


def test_power_against_wrong_sigma():
    rng = np.random.default_rng(7)
    rep = dist_report(draw(rng, 0.0, 1.65, 100_000), 0.0, 1.5)
    assert not rep.passed() and rep.p_value < 1e-10


def test_power_against_shifted_center():
    rng = np.random.default_rng(8)
    assert not dist_report(draw(rng, 0.1, 1.5, 100_000), 0.0, 1.5).passed()


def test_base_report():
    z0 = base_samples("0f" * 32, 200_000)
    assert base_report(z0).passed()
    rep = base_report(z0, skewed_table())
    assert not rep.passed()
    assert rep.target == pytest.approx(rcdt_pmf(skewed_table()))
    assert base_report(z0, RCDT).label == "base_z0"


def test_renyi():
    p = np.array([0.5, 0.5])
    assert renyi_divergence(p, p) == pytest.approx(1.0)
    assert renyi_divergence(np.array([0.6, 0.4]), p) > 1.0
    assert renyi_divergence(np.array([0.5, 0.5]), np.array([1.0, 0.0])) == math.inf


def test_histogram_render_and_ratios():
    h = histogram_from_retries([0, 0, 1, 2, 9, 6, 0, 3])
    assert h.counts == [3, 1, 1, 1, 0, 0, 2] and h.total == 8
    assert sum(h.ratios) == pytest.approx(1.0)
    lines = h.render().splitlines()
    assert len(lines) == 3
    assert lines[0].split("|")[0].strip() == "# Failures"
    assert lines[1].split("|")[-1].strip() == "8"
    assert lines[2].split("|")[1].strip() == "37.50"
    assert len({len(l) for l in lines}) == 1
    assert h.to_dict()["bins"][-1] == ">=6"


def test_failure_campaign_geometric():
    h = failure_histogram(failure_campaign(20_000, 0.5, seed=3))
    assert h.total == 20_000
    for k, r in enumerate(h.ratios[:6]):
        assert r == pytest.approx(0.5 ** (k + 1), abs=0.012)


def _synthetic(p, n):
    fsm = DualPathSampler(SyntheticEngine(RejectionModel(p), random.Random(4)),
                          loop_model="min")
    return [fsm.run_task(SampleTask(0.0, 0.0, 1.5))[2] for _ in range(n)]


def test_assisted_rate_synthetic():
    # with one sample left and both paths trying, success is 1 - (1 - p)^2
    rate = assisted_success_rate(_synthetic(0.5, 60_000))
    assert rate == pytest.approx(0.75, abs=0.01)


def test_assisted_rate_needs_rounds():
    with pytest.raises(InsufficientData):
        assisted_success_rate(_synthetic(0.5, 100))
    # p = 1 never reaches ALOOP
    with pytest.raises(InsufficientData):
        assisted_success_rate(_synthetic(1.0, 1000))
    assert assisted_success_rate(_synthetic(0.9, 3000), min_rounds=100) == pytest.approx(0.99, abs=0.015)
