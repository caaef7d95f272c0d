"""Fixed-point SamplerZ pipeline: Pre_samp, Bef_loop, For_loop, CMP, Fpr_adder.

Every stage has a public function working on :class:`Fxp81` values and a
``*_raw`` twin on plain integers that the datapath simulator calls in its
inner loop.  Both share one implementation.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

from .basesampler import RCDT, BaseSampler
from .fxp81 import (FRAC_BITS, INV_LN2_RAW, LN2_RAW, Fxp81, from_double_raw,
                    mul_raw, sub_raw)
from .params import FALCON512, SamplerParams

# Coefficients of the degree-12 polynomial used by ApproxExp, in Horner
# order: 2^63 * exp(-x) ~ C[12] - x*(C[11] - x*(C[10] - ...)).
EXP_COEFFS = (
    0x00000004741183A3,
    0x00000036548CFC06,
    0x0000024FDCBF140A,
    0x0000171D939DE045,
    0x0000D00CF58F6F84,
    0x000680681CF796E3,
    0x002D82D8305B0FEA,
    0x011111110E066FD0,
    0x0555555555070F00,
    0x155555555581FF00,
    0x400000000002B400,
    0x7FFFFFFFFFFF4800,
    0x8000000000000000,
)

MAX_SQUARE_RAW = 361 << FRAC_BITS
MAX_ITERATIONS = 10_000
Z_MIN, Z_MAX = -18, 19


class SamplerDiagnostic(RuntimeError):
    """Iteration cap hit; indicates a defect rather than bad luck."""


@dataclass(frozen=True)
class SampleTask:
    mu_l: float
    mu_r: float
    sigma_prime: float

    def __post_init__(self):
        if not (math.isfinite(self.mu_l) and math.isfinite(self.mu_r)):
            raise ValueError("centers must be finite")
        if not math.isfinite(self.sigma_prime):
            raise ValueError("sigma' must be finite")

    def mu(self, lane: int) -> float:
        return self.mu_r if lane else self.mu_l


def split_center(mu: float) -> tuple[int, float]:
    """(floor(mu), mu - floor(mu)) with the fraction guaranteed < 1."""
    fl = math.floor(mu)
    r = mu - fl
    if r >= 1.0:
        # mu in (-2^-53, 0): the double subtraction rounds up to 1.0
        fl += 1
        r = 0.0
    return fl, r


@dataclass(frozen=True)
class PreComputed:
    r_l: Fxp81
    r_r: Fxp81
    ccs: Fxp81
    inv_2sigma2: Fxp81
    floor_mu_l: int
    floor_mu_r: int

    def r(self, lane: int) -> Fxp81:
        return self.r_r if lane else self.r_l

    def floor_mu(self, lane: int) -> int:
        return self.floor_mu_r if lane else self.floor_mu_l


def pre_samp(task: SampleTask, params: SamplerParams = FALCON512) -> PreComputed:
    params.check_sigma(task.sigma_prime)
    fl, rl = split_center(task.mu_l)
    fr, rr = split_center(task.mu_r)
    sig = task.sigma_prime
    ccs = Fxp81.from_double(params.sigma_min / sig)
    # 1/sigma'^2 then an exact halving (the ">> 1" of the hardware)
    inv = Fxp81.from_double(1.0 / (sig * sig)).shr(1)
    return PreComputed(Fxp81.from_double(rl), Fxp81.from_double(rr), ccs, inv, fl, fr)


class GaussLut:
    """T[z0] = z0^2 / (2 sigma_max^2) in Fxp81, and Zf[z] = float(z)."""

    def __init__(self, sigma_max: float = FALCON512.sigma_max):
        self.sigma_max = sigma_max
        self.inv_2sigmax2_raw = from_double_raw(1.0 / (2.0 * sigma_max * sigma_max))
        self.t_raw = tuple(z0 * z0 * self.inv_2sigmax2_raw for z0 in range(19))
        self.zf = {z: float(z) for z in range(Z_MIN, Z_MAX + 1)}

    def T(self, z0: int) -> Fxp81:
        return Fxp81(self.t_raw[z0])

    def Zf(self, z: int) -> float:
        return self.zf[z]


@dataclass
class PathState:
    z0: int
    b: int
    z: int
    x: Fxp81
    s: int
    res: Fxp81
    z_int: int
    y: int
    accepted: bool = False


def bef_loop_raw(z0: int, b: int, r_raw: int, inv_raw: int, t_raw) -> tuple:
    """Returns (z, x_raw, s, res_raw); s already clamped to 63."""
    if b:
        z = z0 + 1
        d = (z << FRAC_BITS) - r_raw
    else:
        z = -z0
        d = (z0 << FRAC_BITS) + r_raw
    sq = mul_raw(d, d)
    if sq > MAX_SQUARE_RAW:
        raise AssertionError("(z - r)^2 exceeds 361")
    x = sub_raw(mul_raw(sq, inv_raw), t_raw[z0])
    s = mul_raw(x, INV_LN2_RAW) >> FRAC_BITS
    res = x - s * LN2_RAW
    # the truncated 1/ln2 can only undershoot s
    while res >= LN2_RAW:
        res -= LN2_RAW
        s += 1
    if s > 63:
        s = 63
    return z, x, s, res


def bef_loop(z0: int, b: int, pre: PreComputed, lut: GaussLut, lane: int = 0) -> PathState:
    if not 0 <= z0 <= 18:
        raise ValueError("z0 must be in [0, 18]")
    z, x, s, res = bef_loop_raw(z0, b & 1, pre.r(lane).raw, pre.inv_2sigma2.raw, lut.t_raw)
    return PathState(z0, b & 1, z, Fxp81(x), s, Fxp81(res), res >> 9, EXP_COEFFS[0])


def approx_exp_raw(z_int: int, ccs63: int, coeffs=EXP_COEFFS) -> int:
    y = coeffs[0]
    for c in coeffs[1:]:
        y = c - ((z_int * y) >> 63)
    return (ccs63 * y) >> 63


def for_loop(state: PathState, ccs: Fxp81, coeffs=EXP_COEFFS) -> int:
    """12 Horner steps then the ccs scaling; about 2^63 * ccs * exp(-res)."""
    y = approx_exp_raw(state.res.raw >> 9, ccs.raw >> 9, coeffs)
    state.y = y
    return y


def cmp_raw(y: int, s: int, lane) -> tuple[bool, int]:
    """Bernoulli byte comparison.  Returns (accepted, bytes drawn)."""
    z = ((y << 1) - 1) >> s
    i = 56
    n = 0
    while True:
        n += 1
        w = lane.byte() - ((z >> i) & 0xFF)
        if w or not i:
            return w < 0, n
        i -= 8


def cmp(y: int, s: int, lane) -> bool:
    if not 0 <= s <= 63:
        raise ValueError("s must be in [0, 63]")
    return cmp_raw(y, s, lane)[0]


def fpr_add(z: int, floor_mu: int, lut: GaussLut) -> float:
    return lut.Zf(z) + float(floor_mu)


class Kernel:
    """Bundles parameters, LUTs and the base table for one sampler instance."""

    def __init__(self, params: SamplerParams = FALCON512, table=RCDT, coeffs=EXP_COEFFS):
        self.params = params
        self.lut = GaussLut(params.sigma_max)
        self.base = BaseSampler(table)
        self.coeffs = tuple(coeffs)

    def pre_samp(self, task: SampleTask) -> PreComputed:
        return pre_samp(task, self.params)

    def candidate(self, lane) -> tuple[int, int]:
        """Draw (z0, b): 72 bits for the base sample, then one byte for b."""
        z0 = self.base.z0(lane.u72())
        return z0, lane.byte() & 1

    def attempt(self, z0: int, b: int, r_raw: int, inv_raw: int, ccs63: int, lane):
        """One rejection round for a prepared candidate.

        Returns (accepted, z, cmp_bytes).
        """
        z, _, s, res = bef_loop_raw(z0, b, r_raw, inv_raw, self.lut.t_raw)
        y = approx_exp_raw(res >> 9, ccs63, self.coeffs)
        ok, n = cmp_raw(y, s, lane)
        return ok, z, n


def sample_many(mu: float, sigma_prime: float, lane, count: int,
                kernel: Kernel | None = None) -> list[int]:
    """``count`` successive samplerz_fixed outputs, inlined for throughput.

    Same arithmetic and byte order as :func:`samplerz_fixed`; the test
    suite checks the two agree sample for sample.
    """
    k = kernel or Kernel()
    pre = k.pre_samp(SampleTask(mu, mu, sigma_prime))
    r_raw, inv_raw, ccs63 = pre.r_l.raw, pre.inv_2sigma2.raw, pre.ccs.raw >> 9
    fl = pre.floor_mu_l
    t_raw = k.lut.t_raw
    coeffs = k.coeffs
    c0, rest = coeffs[0], coeffs[1:]
    neg = k.base._neg
    take, byte = lane.take, lane.byte
    from_bytes = int.from_bytes
    one = 1 << FRAC_BITS
    out = []
    append = out.append
    for _ in range(count):
        for _it in range(MAX_ITERATIONS):
            z0 = bisect_left(neg, -from_bytes(take(9), "little"))
            if byte() & 1:
                z = z0 + 1
                d = z * one - r_raw
            else:
                z = -z0
                d = z0 * one + r_raw
            sq = (d * d) >> FRAC_BITS
            if sq > MAX_SQUARE_RAW:
                raise AssertionError("(z - r)^2 exceeds 361")
            x = ((sq * inv_raw) >> FRAC_BITS) - t_raw[z0]
            if x < 0:
                raise AssertionError("x < 0")
            s = (x * INV_LN2_RAW) >> (2 * FRAC_BITS)
            res = x - s * LN2_RAW
            while res >= LN2_RAW:
                res -= LN2_RAW
                s += 1
            if s > 63:
                s = 63
            zi = res >> 9
            y = c0
            for c in rest:
                y = c - ((zi * y) >> 63)
            zc = (((ccs63 * y) >> 63) * 2 - 1) >> s
            i = 56
            while True:
                w = byte() - ((zc >> i) & 0xFF)
                if w or not i:
                    break
                i -= 8
            if w < 0:
                append(z + fl)
                break
        else:
            raise SamplerDiagnostic("SamplerZ iteration cap reached")
    return out


def samplerz_fixed(mu: float, sigma_prime: float, lane, kernel: Kernel | None = None,
                   trace: list | None = None) -> int:
    """Single-datapath fixed-point SamplerZ, loop-until-accept.

    Byte order per attempt matches the double-precision oracle: 9 bytes base
    sample, 1 byte sign, then the comparison bytes.
    """
    k = kernel or Kernel()
    pre = k.pre_samp(SampleTask(mu, mu, sigma_prime))
    r_raw, inv_raw, ccs63 = pre.r_l.raw, pre.inv_2sigma2.raw, pre.ccs.raw >> 9
    for _ in range(MAX_ITERATIONS):
        z0, b = k.candidate(lane)
        ok, z, _ = k.attempt(z0, b, r_raw, inv_raw, ccs63, lane)
        if trace is not None:
            trace.append((z0, b, ok))
        if ok:
            return z + pre.floor_mu_l
    raise SamplerDiagnostic("SamplerZ iteration cap reached")
