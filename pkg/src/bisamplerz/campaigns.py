"""Task generators and the standard campaigns shared by the CLI and tests."""
from __future__ import annotations

import hashlib
import random

from .basesampler import RCDT
from .fsm import DualPathSampler, Policy, SyntheticEngine
from .kernel import Kernel, SampleTask, sample_many
from .params import FALCON512, SamplerParams
from .perf import P_ACCEPT, RejectionModel
from .randomness import RefillBuffer, parse_seed
from .stats import MIN_ALOOP_ROUNDS

MU_GRID = (0.0, 0.5, -7.3)


def derived_rng(seed, label: str) -> random.Random:
    """Python RNG for task/model draws, derived from the ChaCha seed."""
    h = hashlib.sha256(label.encode() + parse_seed(seed)).digest()
    return random.Random(int.from_bytes(h[:8], "little"))


def parse_mu_dist(text: str):
    """``uniform`` or ``fixed:a,b``; returns a callable rng -> (mu_l, mu_r)."""
    if text == "uniform":
        return lambda rng: (rng.randrange(-64, 64) + rng.random(),
                            rng.randrange(-64, 64) + rng.random())
    if text.startswith("fixed:"):
        try:
            a, b = (float(v) for v in text[6:].split(","))
        except ValueError:
            raise ValueError(f"bad --mu-dist {text!r}; expected fixed:a,b") from None
        return lambda rng: (a, b)
    raise ValueError(f"bad --mu-dist {text!r}")


def random_tasks(rng: random.Random, count: int, params: SamplerParams = FALCON512,
                 mu_dist: str = "uniform", sigma: float | None = None) -> list[SampleTask]:
    draw = parse_mu_dist(mu_dist)
    if sigma is not None:
        params.check_sigma(sigma)
    out = []
    for _ in range(count):
        mu_l, mu_r = draw(rng)
        s = sigma if sigma is not None else rng.uniform(params.sigma_min, params.sigma_max)
        out.append(SampleTask(mu_l, mu_r, s))
    return out


def sigma_grid(params: SamplerParams = FALCON512) -> tuple[float, float, float]:
    return params.sigma_min, 1.5, params.sigma_max


def failure_campaign(executions: int = 102_400, p: float = P_ACCEPT, seed: int = 7):
    """Synthetic geometric campaign without assistance: two executions per task."""
    rng = random.Random(seed)
    fsm = DualPathSampler(SyntheticEngine(RejectionModel(p), rng), Policy.WITHOUT_ASSIST,
                          loop_model="min")
    task = SampleTask(0.0, 0.0, 1.5)
    return [fsm.run_task(task)[2] for _ in range((executions + 1) // 2)]


def assist_campaign(seed, params: SamplerParams = FALCON512, min_rounds: int = MIN_ALOOP_ROUNDS,
                    kernel: Kernel | None = None, batch: int = 1000):
    """Kernel-driven assisted campaign, run until ``min_rounds`` ALOOP rounds."""
    fsm = DualPathSampler.from_seed(seed, Policy.WITH_ASSIST, kernel or Kernel(params))
    rng = derived_rng(seed, "assist")
    traces = []
    rounds = 0
    while rounds < min_rounds:
        for t in random_tasks(rng, batch, params):
            tr = fsm.run_task(t)[2]
            traces.append(tr)
            rounds += tr.aloop_rounds
    return traces


def base_samples(seed, count: int, table=RCDT) -> list[int]:
    from .basesampler import BaseSampler

    base = BaseSampler(table)
    lane = RefillBuffer(seed).left
    return [base.z0(lane.u72()) for _ in range(count)]


def grid_samples(seed, mu: float, sigma: float, count: int, kernel: Kernel | None = None):
    label = f"grid:{mu!r}:{sigma!r}"
    h = hashlib.sha256(label.encode() + parse_seed(seed)).digest()
    lane = RefillBuffer(h).left
    return sample_many(mu, sigma, lane, count, kernel)
