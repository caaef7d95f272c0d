import json
import random

import numpy as np
import pytest

from bisamplerz.campaigns import random_tasks
from bisamplerz.fsm import CycleCosts, DualPathSampler, Policy
from bisamplerz.perf import (FAILURE_COUNTS, P_ACCEPT, RejectionModel, SequentialCosts,
                             analytic_cycles_bi, expected_cycles_bi, expected_cycles_falconsign,
                             latency_table, outcome_probabilities, table_csv, table_json,
                             table_rows)
from bisamplerz.stats import nloop_acceptance


def test_outcome_probabilities():
    both, none, one = outcome_probabilities(P_ACCEPT)
    assert both == pytest.approx(0.332, abs=1e-3)
    assert none == pytest.approx(0.180, abs=1e-3)
    assert one == pytest.approx(0.489, abs=1e-3)
    assert both + none + one == pytest.approx(1.0)
    assert outcome_probabilities(1.0) == (1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        outcome_probabilities(1.5)


def test_rejection_free_is_exact():
    rep = expected_cycles_bi(model=RejectionModel(1.0), trials=20_000, loop_model="min")
    assert rep.expected_cycles == 59 and rep.std == 0 and rep.half_width == 0
    assert rep.cycles_wo_rejection == 59
    rep = expected_cycles_bi(Policy.WITHOUT_ASSIST, RejectionModel(1.0), 5000, loop_model="min")
    assert rep.expected_cycles == 59


def test_sequential_rejection_free():
    assert SequentialCosts().rejection_free == 137
    rep = expected_cycles_falconsign(RejectionModel(1.0), 2000, berexp_model="min")
    assert rep.expected_cycles == 2 * (11 + 16 + 40)
    assert rep.cycles_wo_rejection == 137


@pytest.mark.parametrize("policy", list(Policy))
def test_simulation_matches_closed_form(policy):
    for p in (0.3, P_ACCEPT, 0.9):
        rep = expected_cycles_bi(policy, RejectionModel(p), 60_000, seed=3)
        want = analytic_cycles_bi(p, policy)
        assert abs(rep.expected_cycles - want) < 4 * rep.half_width + 1e-9


def test_latency_decreases_with_p():
    ps = [0.2, 0.35, 0.5, 0.65, 0.8, 0.95]
    vals = [expected_cycles_bi(model=RejectionModel(p), trials=20_000, seed=5).expected_cycles
            for p in ps]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_sequential_linear_in_inverse_p():
    ps = np.array([0.25, 0.4, 0.55, 0.7, 0.85, 1.0])
    vals = np.array([expected_cycles_falconsign(RejectionModel(p), 40_000, seed=9)
                     .expected_cycles for p in ps])
    slope, icpt = np.polyfit(1 / ps, vals, 1)
    assert slope == pytest.approx(2 * (16 + 43.5), rel=0.02)
    assert icpt == pytest.approx(22, abs=3)
    resid = vals - (slope / ps + icpt)
    assert np.max(np.abs(resid)) < 1.5


def test_assist_pays_off_below_crossover():
    for p in (0.3, P_ACCEPT, 0.7):
        assert analytic_cycles_bi(p) < analytic_cycles_bi(p, Policy.WITHOUT_ASSIST)
    # near-certain acceptance: the switch overhead outweighs the shared retries
    assert analytic_cycles_bi(0.8) > analytic_cycles_bi(0.8, Policy.WITHOUT_ASSIST)
    assert analytic_cycles_bi(1.0) == analytic_cycles_bi(1.0, Policy.WITHOUT_ASSIST)


def test_empirical_model_reproduces_histogram():
    m = RejectionModel(mode="empirical")
    rng = random.Random(2)
    counts = [0] * 7
    n = 100_000
    for _ in range(n):
        k = 0
        while not m.accept(rng, k):
            k += 1
        counts[min(k, 6)] += 1
    total = sum(FAILURE_COUNTS)
    for c, h in zip(counts[:6], FAILURE_COUNTS[:6]):
        assert abs(c / n - h / total) < 0.005
    assert m.describe() == {"p_accept": P_ACCEPT, "mode": "empirical"}


def test_model_validation():
    with pytest.raises(ValueError):
        RejectionModel(0.0)
    with pytest.raises(ValueError):
        RejectionModel(0.5, "poisson")
    with pytest.raises(ValueError):
        expected_cycles_falconsign(trials=10, berexp_model="slow")


def test_kernel_driven_agrees_with_synthetic():
    fsm = DualPathSampler.from_seed("aa" * 32, Policy.WITH_ASSIST, loop_model="band",
                                    model_rng=random.Random(1))
    traces = [fsm.run_task(t)[2] for t in random_tasks(random.Random(6), 6000)]
    p_hat = nloop_acceptance(traces)
    mean = sum(t.total_cycles for t in traces) / len(traces)
    synth = expected_cycles_bi(model=RejectionModel(p_hat), trials=60_000, seed=8)
    assert abs(mean - synth.expected_cycles) / synth.expected_cycles < 0.03


def test_table_formats_agree():
    reps = latency_table(trials=3000)
    rows = table_rows(reps)
    assert [r["design"] for r in rows] == ["bi_with_assist", "bi_without_assist",
                                           "falconsign_model"]
    assert rows[0]["normalized_latency"] == 1.0
    assert [r["cycles_wo_rejection"] for r in rows] == [59, 59, 137]
    lines = table_csv(rows).splitlines()
    assert lines[0].split(",")[:3] == ["design", "expected_cycles", "cycles_wo_rejection"]
    data = json.loads(table_json(rows, {"seed": 1}))
    for line, row in zip(lines[1:], data["rows"]):
        cells = line.split(",")
        assert cells[0] == row["design"]
        assert float(cells[1]) == row["expected_cycles"]
        assert float(cells[3]) == row["normalized_latency"]
    assert data["meta"] == {"seed": 1}


def test_costs_are_configurable():
    c = CycleCosts(pre=20)
    assert c.rejection_free == 60
    rep = expected_cycles_bi(model=RejectionModel(1.0), trials=100, loop_model="min", costs=c)
    assert rep.expected_cycles == 60
