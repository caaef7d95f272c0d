"""Double-precision SamplerZ used as the correctness oracle.

Straight transcription of the textbook SamplerZ / BerExp / ApproxExp with
IEEE doubles.  It shares nothing with the fixed-point pipeline except the
constant tables and the byte-lane interface.
"""
from __future__ import annotations

import math

from .basesampler import RCDT
from .kernel import EXP_COEFFS, MAX_ITERATIONS, SamplerDiagnostic
from .params import FALCON512, SamplerParams

LN2 = math.log(2)


def approxexp(x: float, ccs: float) -> int:
    y = EXP_COEFFS[0]
    z = int(x * (1 << 63))
    for c in EXP_COEFFS[1:]:
        y = c - ((z * y) >> 63)
    z = int(ccs * (1 << 63))
    return (z * y) >> 63


def berexp(x: float, ccs: float, lane) -> bool:
    s = int(x / LN2)
    r = x - s * LN2
    s = min(s, 63)
    z = (2 * approxexp(r, ccs) - 1) >> s
    i = 64
    while True:
        i -= 8
        w = lane.byte() - ((z >> i) & 0xFF)
        if w or i == 0:
            return w < 0


def basesampler(lane, table=RCDT) -> int:
    u = int.from_bytes(lane.take(9), "little")
    z0 = 0
    for t in table:
        z0 += u < t
    return z0


def samplerz_oracle(mu: float, sigma_prime: float, lane,
                    params: SamplerParams = FALCON512, table=RCDT,
                    trace: list | None = None) -> int:
    params.check_sigma(sigma_prime)
    s = math.floor(mu)
    r = mu - s
    if r >= 1.0:
        s, r = s + 1, 0.0
    dss = 1 / (2 * sigma_prime * sigma_prime)
    inv_2sigmax2 = 1 / (2 * params.sigma_max * params.sigma_max)
    ccs = params.sigma_min / sigma_prime
    for _ in range(MAX_ITERATIONS):
        z0 = basesampler(lane, table)
        b = lane.byte() & 1
        z = b + (2 * b - 1) * z0
        x = ((z - r) ** 2) * dss - (z0 ** 2) * inv_2sigmax2
        ok = berexp(x, ccs, lane)
        if trace is not None:
            trace.append((z0, b, ok))
        if ok:
            return z + s
    raise SamplerDiagnostic("oracle iteration cap reached")
