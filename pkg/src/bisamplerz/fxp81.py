"""81-bit unsigned fixed-point arithmetic (9 integer bits, 72 fractional bits).

Values are stored as a raw integer ``raw`` with ``value = raw / 2**72``.
All rounding is truncation toward zero (floor, since the format is
unsigned).  The pipeline hot path works on raw integers through the
``*_raw`` helpers; :class:`Fxp81` wraps them for the public API.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import total_ordering

FRAC_BITS = 72
INT_BITS = 9
WIDTH = FRAC_BITS + INT_BITS
SCALE = 1 << FRAC_BITS
LIMIT = 1 << WIDTH
HEX_DIGITS = 21

# Set to False to skip the product-magnitude check in mul_raw.
CHECK_OVERFLOW = True


class FxpError(ArithmeticError):
    pass


class FxpRangeError(FxpError, ValueError):
    """Input outside the representable range [0, 512)."""


class FxpUnderflowError(FxpError):
    """Subtraction would produce a negative value."""


class FxpOverflowError(FxpError):
    """A product or sum reached 2**9 or more."""


def from_double_raw(v: float) -> int:
    if not isinstance(v, (float, int)) or isinstance(v, bool):
        raise FxpRangeError(f"expected a float, got {type(v).__name__}")
    v = float(v)
    if math.isnan(v) or math.isinf(v) or v < 0.0 or v >= 512.0:
        raise FxpRangeError(f"value {v!r} outside [0, 512)")
    # ldexp is exact here; int() truncates, which is floor for v >= 0.
    return int(math.ldexp(v, FRAC_BITS))


def mul_raw(a: int, b: int) -> int:
    """Middle 81 bits of the 162-bit product: drop 72 LSBs, keep the rest."""
    p = a * b
    if CHECK_OVERFLOW and p >> (WIDTH + FRAC_BITS):
        raise FxpOverflowError("fixed-point product >= 512")
    return p >> FRAC_BITS


def sub_raw(a: int, b: int) -> int:
    if a < b:
        raise FxpUnderflowError("fixed-point subtraction underflow")
    return a - b


def add_raw(a: int, b: int) -> int:
    s = a + b
    if s >= LIMIT:
        raise FxpOverflowError("fixed-point sum >= 512")
    return s


@total_ordering
class Fxp81:
    """Unsigned 81-bit fixed-point number with scale 2**72."""

    __slots__ = ("raw",)

    def __init__(self, raw: int):
        if not isinstance(raw, int) or isinstance(raw, bool):
            raise TypeError("raw must be an int")
        if raw < 0 or raw >= LIMIT:
            raise FxpRangeError(f"raw value {raw} does not fit in 81 bits")
        self.raw = raw

    @classmethod
    def from_double(cls, v: float) -> "Fxp81":
        return cls(from_double_raw(v))

    @classmethod
    def from_int(cls, n: int) -> "Fxp81":
        if n < 0 or n >= 1 << INT_BITS:
            raise FxpRangeError(f"integer {n} outside [0, 512)")
        return cls(n << FRAC_BITS)

    @classmethod
    def from_fraction(cls, q: Fraction) -> "Fxp81":
        """floor(q * 2**72); used for constants."""
        q = Fraction(q)
        if q < 0 or q >= 512:
            raise FxpRangeError(f"value {q} outside [0, 512)")
        return cls(math.floor(q * SCALE))

    @classmethod
    def from_hex(cls, text: str) -> "Fxp81":
        text = text.strip()
        if len(text) != HEX_DIGITS:
            raise ValueError(f"expected {HEX_DIGITS} hex digits, got {len(text)}")
        return cls(int(text, 16))

    def to_double(self) -> float:
        # int / int is correctly rounded in CPython.
        return self.raw / SCALE

    def to_fraction(self) -> Fraction:
        return Fraction(self.raw, SCALE)

    def hex(self) -> str:
        return format(self.raw, f"0{HEX_DIGITS}x")

    def mul(self, other: "Fxp81") -> "Fxp81":
        return Fxp81(mul_raw(self.raw, other.raw))

    def sub(self, other: "Fxp81") -> "Fxp81":
        return Fxp81(sub_raw(self.raw, other.raw))

    def add(self, other: "Fxp81") -> "Fxp81":
        return Fxp81(add_raw(self.raw, other.raw))

    def shr(self, k: int) -> "Fxp81":
        if not 0 <= k <= WIDTH - 1:
            raise ValueError("shift amount must be in [0, 80]")
        return Fxp81(self.raw >> k)

    __mul__ = mul
    __sub__ = sub
    __add__ = add
    __rshift__ = shr

    def floor_int(self) -> int:
        return self.raw >> FRAC_BITS

    def __eq__(self, other):
        if isinstance(other, Fxp81):
            return self.raw == other.raw
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, Fxp81):
            return self.raw < other.raw
        return NotImplemented

    def __hash__(self):
        return hash(("Fxp81", self.raw))

    def __repr__(self):
        return f"Fxp81(0x{self.hex()} ~ {self.to_double()!r})"


# ln(2) and 1/ln(2) truncated to 72 fractional bits (checked against
# mpmath in the tests).
LN2_RAW = 0xB17217F7D1CF79ABC9
INV_LN2_RAW = 0x171547652B82FE1777D

LN2 = Fxp81(LN2_RAW)
INV_LN2 = Fxp81(INV_LN2_RAW)
ZERO = Fxp81(0)
ONE = Fxp81(SCALE)
