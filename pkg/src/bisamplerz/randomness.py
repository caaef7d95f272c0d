"""ChaCha20 keystream source with per-datapath refill buffers.

Keystream blocks are assigned to the two datapath lanes alternately:
block 2k feeds the left lane and block 2k+1 the right lane, so each lane's
byte sequence depends only on the seed, never on how the other lane is
consumed.  Multi-byte draws are assembled little-endian.
"""
from __future__ import annotations

import struct

try:
    from cryptography.hazmat.primitives.ciphers import Cipher, algorithms
except ImportError:  # pragma: no cover - pure-Python fallback
    Cipher = None

BLOCK_BYTES = 64
SEED_BYTES = 32
WATERMARK = 32
LEFT, RIGHT = 0, 1
LANE_NAMES = ("left", "right")

_SIGMA = struct.unpack("<4I", b"expand 32-byte k")
_M32 = 0xFFFFFFFF


class RandomnessExhausted(RuntimeError):
    """A scripted byte source ran out of bytes."""


def lane_index(lane) -> int:
    if lane in (LEFT, RIGHT):
        return lane
    try:
        return LANE_NAMES.index(lane)
    except ValueError:
        raise ValueError(f"unknown lane {lane!r}") from None


def _rotl(v, n):
    return ((v << n) & _M32) | (v >> (32 - n))


def _quarter(x, a, b, c, d):
    x[a] = (x[a] + x[b]) & _M32
    x[d] = _rotl(x[d] ^ x[a], 16)
    x[c] = (x[c] + x[d]) & _M32
    x[b] = _rotl(x[b] ^ x[c], 12)
    x[a] = (x[a] + x[b]) & _M32
    x[d] = _rotl(x[d] ^ x[a], 8)
    x[c] = (x[c] + x[d]) & _M32
    x[b] = _rotl(x[b] ^ x[c], 7)


def _block_from_words(key_words, w12, w13, w14, w15) -> bytes:
    state = [*_SIGMA, *key_words, w12, w13, w14, w15]
    x = state[:]
    for _ in range(10):
        _quarter(x, 0, 4, 8, 12)
        _quarter(x, 1, 5, 9, 13)
        _quarter(x, 2, 6, 10, 14)
        _quarter(x, 3, 7, 11, 15)
        _quarter(x, 0, 5, 10, 15)
        _quarter(x, 1, 6, 11, 12)
        _quarter(x, 2, 7, 8, 13)
        _quarter(x, 3, 4, 9, 14)
    return struct.pack("<16I", *((a + b) & _M32 for a, b in zip(x, state)))


def chacha20_block(key: bytes, counter: int, nonce: bytes = bytes(12)) -> bytes:
    """RFC 7539 block function: 32-bit counter, 96-bit nonce."""
    if len(key) != 32 or len(nonce) != 12:
        raise ValueError("key must be 32 bytes and nonce 12 bytes")
    kw = struct.unpack("<8I", key)
    n = struct.unpack("<3I", nonce)
    return _block_from_words(kw, counter & _M32, *n)


def parse_seed(seed) -> bytes:
    """Accept 32 raw bytes or a 64-character hex string."""
    if isinstance(seed, (bytes, bytearray)):
        seed = bytes(seed)
    elif isinstance(seed, str):
        text = seed.strip().lower()
        if len(text) != 2 * SEED_BYTES:
            raise ValueError("seed must be 64 hex characters")
        seed = bytes.fromhex(text)
    else:
        raise TypeError("seed must be bytes or a hex string")
    if len(seed) != SEED_BYTES:
        raise ValueError("seed must be 32 bytes")
    return seed


class PrngCore:
    """ChaCha20 keystream with zero nonce and a 64-bit block counter."""

    def __init__(self, seed, use_backend: bool = True):
        self.key = parse_seed(seed)
        self._key_words = struct.unpack("<8I", self.key)
        self.use_backend = use_backend and Cipher is not None
        self.counter = 0
        self._block = b""
        self.position = 0
        self.blocks_generated = 0

    def seed_hex(self) -> str:
        return self.key.hex()

    def reference_block(self, n: int) -> bytes:
        return _block_from_words(self._key_words, n & _M32, (n >> 32) & _M32, 0, 0)

    def blocks(self, first: int, count: int) -> bytes:
        """Keystream for blocks [first, first + count)."""
        self.blocks_generated += count
        if self.use_backend:
            out = []
            while count:
                # the backend will not carry out of the low 32 counter bits
                n = min(count, (1 << 32) - (first & _M32))
                nonce = first.to_bytes(8, "little") + bytes(8)
                enc = Cipher(algorithms.ChaCha20(self.key, nonce), mode=None).encryptor()
                out.append(enc.update(bytes(BLOCK_BYTES * n)))
                first += n
                count -= n
            return b"".join(out)
        return b"".join(self.reference_block(first + i) for i in range(count))

    def block(self, n: int) -> bytes:
        return self.blocks(n, 1)

    def read(self, n: int) -> bytes:
        """Sequential keystream bytes from block 0 onward."""
        out = bytearray()
        while n > 0:
            if self.position == len(self._block):
                self._block = self.block(self.counter)
                self.counter += 1
                self.position = 0
            k = min(n, len(self._block) - self.position)
            out += self._block[self.position:self.position + k]
            self.position += k
            n -= k
        return bytes(out)


class LaneStream:
    """Refill buffer for one datapath lane.

    When fewer than ``watermark`` bytes remain, ``batch`` more lane blocks are
    appended.  Byte values do not depend on ``batch``; only the refill
    statistics do.
    """

    __slots__ = ("core", "lane", "watermark", "batch", "buf", "pos",
                 "next_block", "dropped", "generated", "refills")

    def __init__(self, core: PrngCore, lane: int, watermark: int = WATERMARK,
                 batch: int = 16):
        self.core = core
        self.lane = lane
        self.watermark = watermark
        self.batch = batch
        self.buf = b""
        self.pos = 0
        self.next_block = 0  # lane-local block index k -> core block 2k + lane
        self.dropped = 0
        self.generated = 0
        self.refills = 0

    def _refill(self):
        chunk = self.core.blocks(2 * self.next_block, 2 * self.batch)
        mine = b"".join(
            chunk[(2 * i + self.lane) * BLOCK_BYTES:(2 * i + self.lane + 1) * BLOCK_BYTES]
            for i in range(self.batch))
        self.next_block += self.batch
        self.generated += len(mine)
        self.refills += 1
        self.dropped += self.pos
        self.buf = self.buf[self.pos:] + mine
        self.pos = 0

    def byte(self) -> int:
        if len(self.buf) - self.pos < self.watermark:
            self._refill()
        b = self.buf[self.pos]
        self.pos += 1
        return b

    def take(self, n: int) -> bytes:
        while len(self.buf) - self.pos < max(n, self.watermark):
            self._refill()
        p = self.pos
        self.pos = p + n
        return self.buf[p:p + n]

    def u72(self) -> int:
        return int.from_bytes(self.take(9), "little")

    @property
    def consumed(self) -> int:
        return self.dropped + self.pos

    @property
    def buffered(self) -> int:
        return len(self.buf) - self.pos


class ScriptedLane:
    """Byte lane replaying a fixed byte sequence (test and golden-vector use)."""

    __slots__ = ("data", "pos")

    def __init__(self, data=b""):
        self.data = bytes(data)
        self.pos = 0

    def byte(self) -> int:
        if self.pos >= len(self.data):
            raise RandomnessExhausted("scripted lane exhausted")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise RandomnessExhausted("scripted lane exhausted")
        p = self.pos
        self.pos += n
        return self.data[p:p + n]

    def u72(self) -> int:
        return int.from_bytes(self.take(9), "little")

    @property
    def consumed(self) -> int:
        return self.pos


def assemble_u144(data: bytes) -> int:
    """18 bytes to a 144-bit integer, byte 0 holding bits [7:0]."""
    if len(data) != 18:
        raise ValueError("need exactly 18 bytes")
    return int.from_bytes(data, "little")


def split_u144(u: int) -> tuple[int, int]:
    """(u[0:71], u[72:143])."""
    return u & ((1 << 72) - 1), u >> 72


class RefillBuffer:
    """The two refill_control units fed from one ChaCha20 core."""

    def __init__(self, seed, watermark: int = WATERMARK, batch: int = 16,
                 use_backend: bool = True):
        self.core = seed if isinstance(seed, PrngCore) else PrngCore(seed, use_backend)
        self.lanes = (LaneStream(self.core, LEFT, watermark, batch),
                      LaneStream(self.core, RIGHT, watermark, batch))

    @property
    def left(self) -> LaneStream:
        return self.lanes[LEFT]

    @property
    def right(self) -> LaneStream:
        return self.lanes[RIGHT]

    def lane(self, lane) -> LaneStream:
        return self.lanes[lane_index(lane)]

    def uniform_bits8(self, lane) -> int:
        return self.lanes[lane_index(lane)].byte()

    def uniform_u144(self) -> int:
        # Low half from the left lane, high half from the right lane.
        return assemble_u144(self.lanes[LEFT].take(9) + self.lanes[RIGHT].take(9))

    def accounting(self) -> dict:
        return {
            name: {"generated": ln.generated, "consumed": ln.consumed,
                   "buffered": ln.buffered, "refills": ln.refills}
            for name, ln in zip(LANE_NAMES, self.lanes)
        }


def scripted_pair(left=b"", right=b"") -> tuple[ScriptedLane, ScriptedLane]:
    return ScriptedLane(left), ScriptedLane(right)
