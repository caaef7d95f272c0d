"""Expected-latency models for the dual-path sampler and a sequential baseline."""
from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import asdict, dataclass, field

from .fsm import CycleCosts, DualPathSampler, Policy, SyntheticEngine
from .kernel import SampleTask

P_ACCEPT = 0.5758
MIN_TRIALS = 100_000

# Executions by number of failures (0..5, >=6) over 102400 SamplerZ runs.
FAILURE_COUNTS = (58957, 24978, 10725, 4465, 1931, 742, 602)

_DUMMY_TASK = SampleTask(0.0, 0.0, 1.5)


class RejectionModel:
    """Per-attempt acceptance law for synthetic campaigns.

    ``geometric``: every attempt accepts with probability ``p_accept``.
    ``empirical``: the k-th attempt of a sample accepts with the hazard
    implied by the failure histogram; past the last explicit bin the
    hazard falls back to ``p_accept``.
    """

    def __init__(self, p_accept: float = P_ACCEPT, mode: str = "geometric",
                 histogram=FAILURE_COUNTS):
        if not 0 < p_accept <= 1:
            raise ValueError("p_accept must be in (0, 1]")
        if mode not in ("geometric", "empirical"):
            raise ValueError(f"unknown rejection model {mode!r}")
        self.p_accept = p_accept
        self.mode = mode
        total = sum(histogram)
        self.ratios = tuple(h / total for h in histogram)
        self.hazard = []
        left = total
        for h in histogram[:-1]:
            self.hazard.append(h / left)
            left -= h

    def accept(self, rng: random.Random, k: int) -> bool:
        if self.mode == "geometric" or k >= len(self.hazard):
            return rng.random() < self.p_accept
        return rng.random() < self.hazard[k]

    def describe(self) -> dict:
        return {"p_accept": self.p_accept, "mode": self.mode}


@dataclass
class LatencyReport:
    design: str
    expected_cycles: float
    cycles_wo_rejection: float
    trials: int
    half_width: float
    std: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _summary(values_sum: float, sq_sum: float, n: int) -> tuple[float, float, float]:
    mean = values_sum / n
    var = max(sq_sum / n - mean * mean, 0.0) * n / (n - 1) if n > 1 else 0.0
    std = math.sqrt(var)
    return mean, std, 1.96 * std / math.sqrt(n)


def outcome_probabilities(p: float) -> tuple[float, float, float]:
    """(both accept, neither accepts, exactly one accepts) for two paths."""
    if not 0 <= p <= 1:
        raise ValueError("p must be in [0, 1]")
    q = 1 - p
    return p * p, q * q, 2 * p * q


def analytic_cycles_bi(p: float, policy=Policy.WITH_ASSIST, costs: CycleCosts | None = None,
                       mean_loop: float | None = None) -> float:
    """Closed-form expectation under geometric rejections."""
    c = costs or CycleCosts()
    loop = (c.loop_base + c.loop_max) / 2 if mean_loop is None else mean_loop
    fixed = c.pre + c.nreg + c.f_add
    q = 1 - p
    pair = 1 - q * q
    if Policy(policy) is Policy.WITH_ASSIST:
        p_switch = 2 * p * q / pair
        rounds = (1 + p_switch) / pair
        return fixed + rounds * loop + p_switch * c.switch
    # rounds until both independent geometrics have succeeded
    rounds = 2 / p - 1 / pair
    return fixed + rounds * loop


def expected_cycles_bi(policy=Policy.WITH_ASSIST, model: RejectionModel | None = None,
                       trials: int = 1_000_000, seed: int = 1, loop_model: str = "band",
                       costs: CycleCosts | None = None) -> LatencyReport:
    model = model or RejectionModel()
    costs = costs or CycleCosts()
    rng = random.Random(seed)
    eng = SyntheticEngine(model, rng)
    fsm = DualPathSampler(eng, policy, costs, loop_model, model_rng=rng)
    tot = sq = 0
    switches = aloop = aloop_ok = 0
    run = fsm.run_task
    for _ in range(trials):
        _, _, tr = run(_DUMMY_TASK)
        t = tr.total_cycles
        tot += t
        sq += t * t
        switches += tr.switches
        aloop += tr.aloop_rounds
        aloop_ok += tr.aloop_success
    mean, std, hw = _summary(tot, sq, trials)
    policy = Policy(policy)
    return LatencyReport(
        f"bi_{policy.value}", mean, costs.rejection_free, trials, hw, std,
        {"p_accept": model.p_accept, "model": model.mode, "loop_model": loop_model,
         "switch_rate": switches / trials, "aloop_rounds": aloop,
         "aloop_success": aloop_ok, "seed": seed})


@dataclass(frozen=True)
class SequentialCosts:
    """Single-datapath baseline: Pre_samp, Samp_loop and a 40..47 BerExp."""

    pre: int = 11
    loop: int = 16
    berexp_min: int = 40
    berexp_max: int = 47
    # BerExp cost that makes the rejection-free pair of samplings 137 cycles
    berexp_rejection_free: float = 41.5

    @property
    def rejection_free(self) -> float:
        return 2 * (self.pre + self.loop + self.berexp_rejection_free)


def expected_cycles_falconsign(model: RejectionModel | None = None, trials: int = 1_000_000,
                               seed: int = 2, berexp_model: str = "band",
                               costs: SequentialCosts | None = None) -> LatencyReport:
    """Two sequential loop-until-accept samplings on one datapath."""
    model = model or RejectionModel()
    c = costs or SequentialCosts()
    rng = random.Random(seed)
    rand = rng.random
    accept = model.accept

    if berexp_model == "band":
        def berexp():
            return rng.randint(c.berexp_min, c.berexp_max)
    elif berexp_model == "tie":
        def berexp():
            n = 0
            while n < c.berexp_max - c.berexp_min and rand() < 1 / 256:
                n += 1
            return c.berexp_min + n
    elif berexp_model == "min":
        def berexp():
            return c.berexp_min
    else:
        raise ValueError(f"unknown BerExp cost model {berexp_model!r}")

    tot = sq = 0
    for _ in range(trials):
        t = 0
        for _s in range(2):
            t += c.pre
            k = 0
            while True:
                t += c.loop + berexp()
                if accept(rng, k):
                    break
                k += 1
                if k > 10_000:
                    raise RuntimeError("sequential model iteration cap reached")
        tot += t
        sq += t * t
    mean, std, hw = _summary(tot, sq, trials)
    return LatencyReport(
        "falconsign_model", mean, c.rejection_free, trials, hw, std,
        {"p_accept": model.p_accept, "model": model.mode, "berexp_model": berexp_model,
         "berexp_rejection_free": c.berexp_rejection_free, "seed": seed})


def latency_table(p: float = P_ACCEPT, trials: int = 1_000_000, seed: int = 1,
                  mode: str = "geometric", loop_model: str = "band") -> list[LatencyReport]:
    model = RejectionModel(p, mode)
    return [
        expected_cycles_bi(Policy.WITH_ASSIST, model, trials, seed, loop_model),
        expected_cycles_bi(Policy.WITHOUT_ASSIST, model, trials, seed + 1, loop_model),
        expected_cycles_falconsign(model, trials, seed + 2),
    ]


TABLE_COLUMNS = ("design", "expected_cycles", "cycles_wo_rejection", "normalized_latency",
                 "half_width", "trials")


def table_rows(reports: list[LatencyReport]) -> list[dict]:
    """Rows normalized to the first report (the assisted dual-path design)."""
    ref = reports[0].expected_cycles
    rows = []
    for r in reports:
        rows.append({
            "design": r.design,
            "expected_cycles": round(r.expected_cycles, 6),
            "cycles_wo_rejection": r.cycles_wo_rejection,
            "normalized_latency": round(r.expected_cycles / ref, 6),
            "half_width": round(r.half_width, 6),
            "trials": r.trials,
        })
    return rows


def table_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    w = csv.DictWriter(out, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return out.getvalue()


def table_json(rows: list[dict], meta: dict | None = None) -> str:
    return json.dumps({"meta": meta or {}, "rows": rows}, indent=2, sort_keys=True)
