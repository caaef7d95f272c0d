"""RCDT half-Gaussian base sampler.

Two equivalent forms are provided: ``z0_counter`` sums the 18 comparison
bits, ``z0_scan`` locates the single 1->0 transition in the comparison
vector the way a priority encoder would.
"""
from __future__ import annotations

import hashlib
import json
from bisect import bisect_left

RCDT_BITS = 72
RCDT_LEN = 18

# floor(2**72 * P(Z >= i + 1)) for the half-Gaussian Z over {0, 1, ...}
# with weights exp(-z^2 / (2 * 1.8205^2)); regenerate with generate_rcdt().
RCDT = (
    3024686241123004913674,
    1564742784480091954057,
    636254429462080897542,
    199560484645026482922,
    47667343854657281909,
    8595902006365044068,
    1163297957344668393,
    117656387352093662,
    8867391802663980,
    496969357462636,
    20680885154302,
    638331848993,
    14602316185,
    247426748,
    3104126,
    28824,
    198,
    1,
)

RCDT_SHA256 = "7f70e7f3f663f46799f7ca81a0aa91e3ed6576bacc4e964e9ec0636baec1b149"

# Table shipped with the Falcon reference implementation, kept for
# cross-checking only.  It sits 0..8 units above RCDT.
FALCON_REFERENCE_RCDT = (
    3024686241123004913666,
    1564742784480091954050,
    636254429462080897535,
    199560484645026482916,
    47667343854657281903,
    8595902006365044063,
    1163297957344668388,
    117656387352093658,
    8867391802663976,
    496969357462633,
    20680885154299,
    638331848991,
    14602316184,
    247426747,
    3104126,
    28824,
    198,
    1,
)


def table_checksum(table) -> str:
    return hashlib.sha256(",".join(str(v) for v in table).encode()).hexdigest()


def validate_table(table):
    if len(table) != RCDT_LEN:
        raise ValueError(f"RCDT must have {RCDT_LEN} entries")
    if not table[0] < 1 << RCDT_BITS:
        raise ValueError("RCDT[0] must be below 2^72")
    if table[-1] <= 0:
        raise ValueError("RCDT entries must be positive")
    if any(a <= b for a, b in zip(table, table[1:])):
        raise ValueError("RCDT must be strictly decreasing")


def generate_rcdt(sigma_max: str | float = "1.8205", prec: int = 320, terms: int = 60):
    """Recompute the table with mpmath (slow; used by tests and tooling)."""
    import mpmath as mp

    with mp.workprec(prec):
        s = mp.mpf(sigma_max)
        w = [mp.exp(-mp.mpf(z) ** 2 / (2 * s * s)) for z in range(terms)]
        total = mp.fsum(w)
        out = []
        for i in range(RCDT_LEN):
            tail = mp.fsum(w[i + 1:]) / total
            out.append(int(mp.floor(tail * 2 ** RCDT_BITS)))
    return tuple(out)


def z0_counter(u: int, table=RCDT) -> int:
    z0 = 0
    for t in table:
        z0 += u < t
    return z0


def comparison_bits(u: int, table=RCDT) -> list[int]:
    return [int(u < t) for t in table]


def z0_scan(u: int, table=RCDT) -> int:
    """Index of the 1->0 transition in the comparison bits.

    The bits are extended with a sentinel 1 on the left and 0 on the right,
    so exactly one adjacent pair (c[i-1], c[i]) reads (1, 0) and its index i
    is the run length.
    """
    bits = [1] + comparison_bits(u, table) + [0]
    hit = -1
    for i in range(1, len(bits)):
        if bits[i - 1] & (bits[i] ^ 1):
            if hit >= 0:
                raise AssertionError("comparison bits are not monotone")
            hit = i - 1
    return hit


class BaseSampler:
    """Fast base sampler for the hot path (bisection over the sorted table)."""

    __slots__ = ("table", "_neg")

    def __init__(self, table=RCDT):
        validate_table(table)
        self.table = tuple(table)
        # count(u < t) over a decreasing table == count(-t < -u) over an increasing one
        self._neg = [-t for t in table]

    def z0(self, u: int) -> int:
        return bisect_left(self._neg, -u)

    def sample_pair(self, u: int) -> tuple[int, int]:
        return sample_pair(u, self.table)


def sample_pair(u: int, table=RCDT) -> tuple[int, int]:
    ul = u & ((1 << RCDT_BITS) - 1)
    ur = (u >> RCDT_BITS) & ((1 << RCDT_BITS) - 1)
    return z0_scan(ul, table), z0_scan(ur, table)


def rcdt_pmf(table=RCDT) -> list[float]:
    """PMF of z0 implied by the table, p(i) = (t[i-1] - t[i]) / 2^72."""
    ext = [1 << RCDT_BITS, *table, 0]
    return [(ext[i] - ext[i + 1]) / 2 ** RCDT_BITS for i in range(RCDT_LEN + 1)]


def export_json(table=RCDT) -> str:
    return json.dumps([str(v) for v in table])


def import_json(text: str) -> tuple[int, ...]:
    values = json.loads(text)
    if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
        raise ValueError("RCDT JSON must be an array of decimal strings")
    table = tuple(int(v, 10) for v in values)
    validate_table(table)
    return table


def skewed_table(table=RCDT, index: int = 1, factor: float = 1.05):
    """Perturb one entry (fault-injection hook); stays strictly decreasing."""
    t = list(table)
    t[index] = int(t[index] * factor)
    t[index] = max(min(t[index], t[index - 1] - 1 if index else (1 << RCDT_BITS) - 1),
                   (t[index + 1] + 1) if index + 1 < len(t) else 1)
    validate_table(t)
    return tuple(t)

