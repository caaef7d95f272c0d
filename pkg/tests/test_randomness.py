import random

import numpy as np
import pytest
from scipy import stats as sps

from bisamplerz.randomness import (LEFT, RIGHT, LaneStream, PrngCore, RandomnessExhausted,
                                   RefillBuffer, ScriptedLane, assemble_u144, chacha20_block,
                                   parse_seed, split_u144)

ZERO = "00" * 32

# RFC 7539 appendix A.1, test vectors 1 and 2 (zero key, zero nonce).
ZERO_BLOCK0 = bytes.fromhex(
    "76b8e0ada0f13d90405d6ae55386bd28bdd219b8a08ded1aa836efcc8b770dc7"
    "da41597c5157488d7724e03fb8d84a376a43b8f41518a11cc387b669b2ee6586")
ZERO_BLOCK1 = bytes.fromhex(
    "9f07e7be5551387a98ba977c732d080dcb0f29a048e3656912c6533e32ee7aed"
    "29b721769ce64e43d57133b074d839d531ed1f28510afb45ace10a1f4b794d6f")


def test_rfc_block_function():
    key = bytes(range(32))
    nonce = bytes.fromhex("000000090000004a00000000")
    blk = chacha20_block(key, 1, nonce)
    assert blk[:16].hex() == "10f1e7e4d13b5915500fdd1fa32071c4"
    assert blk[-16:].hex() == "b5129cd1de164eb9cbd083e8a2503c4e"


@pytest.mark.parametrize("backend", [True, False])
def test_zero_key_vectors(backend):
    core = PrngCore(ZERO, use_backend=backend)
    assert core.block(0) == ZERO_BLOCK0
    assert core.block(1) == ZERO_BLOCK1


def test_backend_matches_reference_across_counter_wrap():
    seed = bytes(range(1, 33))
    fast, ref = PrngCore(seed), PrngCore(seed, use_backend=False)
    for n in (0, 5, (1 << 32) - 1, 1 << 32, (1 << 40) + 3):
        assert fast.blocks(n, 2) == ref.blocks(n, 2)


def test_sequential_read():
    core = PrngCore(ZERO)
    assert core.read(100) == (ZERO_BLOCK0 + ZERO_BLOCK1)[:100]


def test_seed_parsing():
    assert parse_seed("AB" * 32) == b"\xab" * 32
    with pytest.raises(ValueError):
        parse_seed("00" * 31)
    with pytest.raises(ValueError):
        parse_seed(b"\x00" * 16)
    with pytest.raises(TypeError):
        parse_seed(123)


def test_lane_block_alternation():
    buf = RefillBuffer(ZERO)
    assert buf.left.take(64) == ZERO_BLOCK0
    assert buf.right.take(64) == ZERO_BLOCK1
    core = PrngCore(ZERO)
    assert buf.left.take(64) == core.block(2)
    assert buf.right.take(64) == core.block(3)


def test_first_bytes_frozen():
    buf = RefillBuffer(ZERO)
    assert buf.uniform_bits8(LEFT) == 0x76
    assert buf.uniform_bits8("right") == 0x9F
    buf = RefillBuffer(ZERO)
    u = buf.uniform_u144()
    assert u == int.from_bytes(ZERO_BLOCK0[:9] + ZERO_BLOCK1[:9], "little")
    assert split_u144(u) == (int.from_bytes(ZERO_BLOCK0[:9], "little"),
                             int.from_bytes(ZERO_BLOCK1[:9], "little"))


def test_determinism_and_seed_sensitivity():
    a, b = RefillBuffer(ZERO), RefillBuffer(ZERO)
    assert a.left.take(500) == b.left.take(500)
    rng = random.Random(5)
    for _ in range(100):
        s1, s2 = rng.randbytes(32), rng.randbytes(32)
        if s1 != s2:
            assert RefillBuffer(s1).left.take(64) != RefillBuffer(s2).left.take(64)


def test_lane_isolation_under_interleaving():
    a, b = RefillBuffer(ZERO), RefillBuffer(ZERO)
    rng = random.Random(9)
    got_l, got_r = bytearray(), bytearray()
    for _ in range(2000):
        if rng.random() < 0.3:
            got_l += a.left.take(rng.randint(1, 9))
        else:
            got_r.append(a.right.byte())
    assert bytes(got_l) == b.left.take(len(got_l))
    assert bytes(got_r) == b.right.take(len(got_r))


@pytest.mark.parametrize("batch", [1, 3, 16])
def test_batch_size_does_not_change_bytes(batch):
    core = PrngCore(ZERO)
    lane = LaneStream(core, RIGHT, batch=batch)
    ref = RefillBuffer(ZERO).right
    assert lane.take(1000) == ref.take(1000)


def test_byte_accounting():
    buf = RefillBuffer(ZERO, watermark=32, batch=2)
    for _ in range(5000):
        buf.left.u72()
        buf.right.byte()
    for name, acc in buf.accounting().items():
        assert acc["generated"] == acc["consumed"] + acc["buffered"]
        assert acc["buffered"] >= 32 - 9
    assert buf.left.consumed == 45000
    assert buf.right.consumed == 5000


def test_u72_is_atomic_nine_bytes():
    lane = ScriptedLane(bytes(range(20)))
    assert lane.u72() == int.from_bytes(bytes(range(9)), "little")
    assert lane.consumed == 9
    lane.take(9)
    with pytest.raises(RandomnessExhausted):
        lane.u72()
    assert lane.consumed == 18


def test_u144_assembly():
    u = assemble_u144(b"\x01" + bytes(17))
    assert u == 1 and split_u144(u) == (1, 0)
    u = assemble_u144(b"\xff" * 18)
    assert split_u144(u) == ((1 << 72) - 1, (1 << 72) - 1)
    with pytest.raises(ValueError):
        assemble_u144(bytes(17))


def test_byte_frequencies_uniform():
    data = RefillBuffer("5a" * 32).left.take(1_000_000)
    counts = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=256)
    exp = len(data) / 256
    assert np.all(np.abs(counts - exp) < 5 * np.sqrt(exp))
    assert sps.chisquare(counts).pvalue > 1e-4
