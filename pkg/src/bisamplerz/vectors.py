"""Golden-vector files.

One vector per line, whitespace separated::

    <seed hex> <mu_l> <mu_r> <sigma'> <z_l> <z_r> <bytes_l> <bytes_r>

Each vector is a single assisted task run on a freshly seeded sampler; the
byte counts are what each lane consumed, including the INIT candidate and
the candidate prefetched after the last CMP.  Lines starting with ``#`` are
comments.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .fsm import DualPathSampler, Policy
from .kernel import Kernel, SampleTask
from .params import FALCON512, SamplerParams


@dataclass(frozen=True)
class GoldenVector:
    seed: str
    mu_l: float
    mu_r: float
    sigma_prime: float
    z_l: int
    z_r: int
    bytes_l: int
    bytes_r: int

    def line(self) -> str:
        return (f"{self.seed} {self.mu_l!r} {self.mu_r!r} {self.sigma_prime!r} "
                f"{self.z_l} {self.z_r} {self.bytes_l} {self.bytes_r}")

    @classmethod
    def parse(cls, line: str) -> "GoldenVector":
        f = line.split()
        if len(f) != 8:
            raise ValueError(f"golden vector needs 8 fields, got {len(f)}")
        return cls(f[0].lower(), float(f[1]), float(f[2]), float(f[3]),
                   int(f[4]), int(f[5]), int(f[6]), int(f[7]))


def compute_vector(seed: str, mu_l: float, mu_r: float, sigma_prime: float,
                   policy=Policy.WITH_ASSIST, kernel: Kernel | None = None) -> GoldenVector:
    fsm = DualPathSampler.from_seed(seed, policy, kernel)
    z_l, z_r, _ = fsm.run_task(SampleTask(mu_l, mu_r, sigma_prime))
    lanes = fsm.buffer.lanes
    return GoldenVector(fsm.seed, mu_l, mu_r, sigma_prime, int(z_l), int(z_r),
                        lanes[0].consumed, lanes[1].consumed)


def generate(count: int, rng_seed: int = 0, params: SamplerParams = FALCON512) -> list[GoldenVector]:
    rng = random.Random(rng_seed)
    kernel = Kernel(params)
    out = []
    for _ in range(count):
        seed = rng.randbytes(32).hex()
        mu_l = rng.randrange(-64, 64) + rng.random()
        mu_r = rng.randrange(-64, 64) + rng.random()
        sig = rng.uniform(params.sigma_min, params.sigma_max)
        out.append(compute_vector(seed, mu_l, mu_r, sig, kernel=kernel))
    return out


def dumps(vectors) -> str:
    head = "# seed mu_l mu_r sigma' z_l z_r bytes_l bytes_r\n"
    return head + "".join(v.line() + "\n" for v in vectors)


def loads(text: str) -> list[GoldenVector]:
    return [GoldenVector.parse(ln) for ln in text.splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")]


def check(vectors, kernel: Kernel | None = None) -> list[tuple[int, GoldenVector, GoldenVector]]:
    """Recompute every vector; returns (index, expected, got) for mismatches."""
    kernel = kernel or Kernel()
    bad = []
    for i, v in enumerate(vectors):
        got = compute_vector(v.seed, v.mu_l, v.mu_r, v.sigma_prime, kernel=kernel)
        if got != v:
            bad.append((i, v, got))
    return bad
