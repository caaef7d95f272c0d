"""Cycle-level model of the dual-datapath SamplerZ controller.

Two samples (mu_l, mu_r) share one Pre_samp stage and are attempted on two
datapaths in parallel.  When exactly one path accepts, the accepting path
switches over to the remaining sample (SWITCHL / SWITCHR) and both paths
retry it in ALOOP until either accepts.

Accept/reject decisions come from an *engine*: :class:`KernelEngine` runs
the real fixed-point pipeline on ChaCha20 lanes, :class:`SyntheticEngine`
draws Bernoulli outcomes from a rejection model for latency studies.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum

from .kernel import MAX_ITERATIONS, Kernel, SampleTask, SamplerDiagnostic, fpr_add
from .randomness import LEFT, RIGHT, RefillBuffer


class FsmState(str, Enum):
    INIT = "INIT"
    IDLE = "IDLE"
    PRE = "PRE"
    NREG = "NREG"
    NLOOP = "NLOOP"
    SWITCHL = "SWITCHL"
    SWITCHR = "SWITCHR"
    ALOOP = "ALOOP"
    F_ADD = "F_ADD"


S = FsmState

MODULES = ("Pre_samp", "Bef_l", "Bef_r", "For_l", "For_r", "Cmp_l", "Cmp_r",
           "Fpr_adder", "Base", "ChaCha", "Refill_l", "Refill_r")

_LOOP_SET = frozenset({"Bef_l", "Bef_r", "For_l", "For_r", "Cmp_l", "Cmp_r",
                       "Base", "Refill_l", "Refill_r"})

# Module enable map per controller state.
ACTIVATION = {
    S.INIT: frozenset({"Base", "ChaCha", "Refill_l", "Refill_r"}),
    S.IDLE: frozenset(),
    S.PRE: frozenset({"Pre_samp", "Bef_l", "Bef_r", "Refill_l", "Refill_r"}),
    S.NREG: frozenset(),
    S.NLOOP: _LOOP_SET,
    S.ALOOP: _LOOP_SET,
    S.SWITCHL: frozenset({"Bef_r"}),
    S.SWITCHR: frozenset({"Bef_l"}),
    S.F_ADD: frozenset({"Fpr_adder"}),
}

TRANSITIONS = {
    S.INIT: {S.IDLE},
    S.IDLE: {S.PRE},
    S.PRE: {S.NREG},
    S.NREG: {S.NLOOP},
    S.NLOOP: {S.F_ADD, S.SWITCHL, S.SWITCHR, S.NLOOP},
    S.SWITCHL: {S.ALOOP},
    S.SWITCHR: {S.ALOOP},
    S.ALOOP: {S.F_ADD, S.ALOOP},
    S.F_ADD: {S.IDLE, S.PRE},
}

_BEF = ("Bef_l", "Bef_r")
_FOR = ("For_l", "For_r")
_CMP = ("Cmp_l", "Cmp_r")
_REFILL = ("Refill_l", "Refill_r")


def activation_set(state) -> frozenset:
    return ACTIVATION[FsmState(state)]


def check_transitions(states) -> None:
    """Raise ValueError unless ``states`` is a legal per-task walk."""
    states = [FsmState(s) for s in states]
    if not states or states[0] is not S.PRE or states[-1] is not S.F_ADD:
        raise ValueError("a task trace must start at PRE and end at F_ADD")
    for a, b in zip(states, states[1:]):
        if b not in TRANSITIONS[a]:
            raise ValueError(f"illegal transition {a.value} -> {b.value}")


class Policy(str, Enum):
    WITH_ASSIST = "with_assist"
    WITHOUT_ASSIST = "without_assist"


@dataclass(frozen=True)
class CycleCosts:
    pre: int = 19
    nreg: int = 1
    loop_base: int = 34
    loop_max: int = 41
    switch: int = 9
    f_add: int = 5

    def __post_init__(self):
        if self.loop_max < self.loop_base:
            raise ValueError("loop_max < loop_base")

    @property
    def rejection_free(self) -> int:
        return self.pre + self.nreg + self.loop_base + self.f_add


# --- loop-round cost models -------------------------------------------------

class LoopCostModel:
    """Cycles for one NLOOP/ALOOP round given the CMP byte counts."""

    name = "base"

    def __init__(self, costs: CycleCosts, rng: random.Random | None = None):
        self.costs = costs
        self.rng = rng or random.Random(0)

    def cost(self, max_bytes: int) -> int:
        raise NotImplementedError


class MinLoopCost(LoopCostModel):
    name = "min"

    def cost(self, max_bytes):
        return self.costs.loop_base


class TieLoopCost(LoopCostModel):
    """Base cost plus one cycle per extra CMP byte (only on byte ties)."""

    name = "tie"

    def cost(self, max_bytes):
        c = self.costs
        return min(c.loop_base + max_bytes - 1, c.loop_max)


class BandLoopCost(LoopCostModel):
    """Uniform over [loop_base, loop_max], independent of the CMP bytes."""

    name = "band"

    def cost(self, max_bytes):
        return self.rng.randint(self.costs.loop_base, self.costs.loop_max)


LOOP_MODELS = {m.name: m for m in (MinLoopCost, TieLoopCost, BandLoopCost)}


def make_loop_model(name: str, costs: CycleCosts, rng=None) -> LoopCostModel:
    try:
        return LOOP_MODELS[name](costs, rng)
    except KeyError:
        raise ValueError(f"unknown loop model {name!r}") from None


# --- traces -----------------------------------------------------------------

@dataclass(frozen=True)
class StateRecord:
    state: FsmState
    entry: int
    cycles: int
    active: frozenset
    used: frozenset | None = None


@dataclass
class FsmTrace:
    task_id: int = 0
    seed: str = ""
    records: list = field(default_factory=list)
    retries_l: int = 0
    retries_r: int = 0
    switches: int = 0
    total_cycles: int = 0
    aloop_rounds: int = 0
    aloop_success: int = 0
    nloop_attempts: int = 0
    nloop_accepts: int = 0
    # path whose ALOOP result was kept, if the task went through ALOOP
    aloop_winner: int | None = None

    def add(self, state: FsmState, cycles: int, used=None):
        self.records.append(StateRecord(state, self.total_cycles, cycles,
                                        ACTIVATION[state], used))
        self.total_cycles += cycles

    @property
    def states(self) -> list[FsmState]:
        return [r.state for r in self.records]

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "seed": self.seed,
            "states": [{"name": r.state.value, "cycles": r.cycles} for r in self.records],
            "total_cycles": self.total_cycles,
            "retries_l": self.retries_l,
            "retries_r": self.retries_r,
            "switches": self.switches,
        }


def write_jsonl(traces, fh) -> None:
    for t in traces:
        fh.write(json.dumps(t.to_json(), sort_keys=True) + "\n")


def aloop_round(remaining, results: tuple[bool, bool]) -> tuple[FsmState, int | None]:
    """Next state after an ALOOP round and the path whose result is kept.

    ``remaining`` is not needed for the decision; it is accepted so callers
    can pass the round context verbatim.  The left result wins a tie.
    """
    ok_l, ok_r = results
    if ok_l:
        return S.F_ADD, LEFT
    if ok_r:
        return S.F_ADD, RIGHT
    return S.ALOOP, None


# --- engines ----------------------------------------------------------------

class KernelEngine:
    """Fixed-point arithmetic on the two refill lanes.

    Each path keeps one prefetched (z0, b) candidate.  An attempt consumes
    it, runs For_loop + CMP, then draws the next candidate from the same
    lane, so a lane's byte order is candidate, CMP bytes, candidate, ...
    exactly as in a sequential single-path sampler.
    """

    def __init__(self, lanes, kernel: Kernel | None = None, audit: bool = False):
        self.lanes = lanes
        self.kernel = kernel or Kernel()
        self.cand = [None, None]
        self.audit = audit
        self.pre = None

    def init(self):
        """INIT: first BaseSampler run on both paths."""
        for p in (LEFT, RIGHT):
            self.cand[p] = self.kernel.candidate(self.lanes[p])
        return {"Base", "Refill_l", "Refill_r", "ChaCha"}

    def begin(self, task: SampleTask):
        pre = self.kernel.pre_samp(task)
        self.pre = pre
        self._r = (pre.r_l.raw, pre.r_r.raw)
        self._floor = (pre.floor_mu_l, pre.floor_mu_r)
        self._inv = pre.inv_2sigma2.raw
        self._ccs63 = pre.ccs.raw >> 9
        return {"Pre_samp", "Bef_l", "Bef_r"}

    def attempt(self, path: int, sample: int):
        lane = self.lanes[path]
        z0, b = self.cand[path]
        ok, z, n = self.kernel.attempt(z0, b, self._r[sample], self._inv, self._ccs63, lane)
        self.cand[path] = self.kernel.candidate(lane)
        return ok, z, n

    def switch(self, path: int, sample: int):
        # Bef_loop recomputed for the other sample's center; the kernel
        # evaluates Bef_loop lazily at attempt time, so nothing to draw.
        return {_BEF[path]}

    def finish(self, z_l: int, z_r: int):
        lut = self.kernel.lut
        return fpr_add(z_l, self._floor[0], lut), fpr_add(z_r, self._floor[1], lut)


class SyntheticEngine:
    """Bernoulli accept/reject draws; no arithmetic, z values are 0."""

    def __init__(self, model, rng: random.Random, tie_prob: float = 1 / 256):
        self.model = model
        self.rng = rng
        self.tie_prob = tie_prob
        self.audit = False
        self._tries = [0, 0]

    def init(self):
        return {"Base", "Refill_l", "Refill_r", "ChaCha"}

    def begin(self, task):
        self._tries = [0, 0]
        return {"Pre_samp", "Bef_l", "Bef_r"}

    def attempt(self, path, sample):
        k = self._tries[sample]
        self._tries[sample] = k + 1
        ok = self.model.accept(self.rng, k)
        n = 1
        r = self.rng.random
        while n < 8 and r() < self.tie_prob:
            n += 1
        return ok, 0, n

    def switch(self, path, sample):
        return {_BEF[path]}

    def finish(self, z_l, z_r):
        return float(z_l), float(z_r)


# --- controller -------------------------------------------------------------

class DualPathSampler:
    def __init__(self, engine, policy: Policy | str = Policy.WITH_ASSIST,
                 costs: CycleCosts | None = None, loop_model: str | LoopCostModel = "tie",
                 seed: str = "", model_rng: random.Random | None = None):
        self.engine = engine
        self.policy = Policy(policy)
        self.costs = costs or CycleCosts()
        if isinstance(loop_model, str):
            loop_model = make_loop_model(loop_model, self.costs, model_rng)
        self.loop = loop_model
        self.seed = seed
        self.task_count = 0
        self.init_trace = FsmTrace(task_id=-1, seed=seed)
        used = engine.init()
        self.init_trace.add(S.INIT, 0, frozenset(used) if engine.audit else None)
        self.init_trace.add(S.IDLE, 0, frozenset() if engine.audit else None)

    @classmethod
    def from_seed(cls, seed, policy=Policy.WITH_ASSIST, kernel: Kernel | None = None,
                  audit: bool = False, **kw):
        buf = RefillBuffer(seed)
        eng = KernelEngine(buf.lanes, kernel, audit)
        sampler = cls(eng, policy, seed=buf.core.seed_hex(), **kw)
        sampler.buffer = buf
        return sampler

    def run_task(self, task: SampleTask):
        """Run one two-sample task.  Returns (z_l, z_r, trace)."""
        eng = self.engine
        c = self.costs
        audit = eng.audit
        tr = FsmTrace(task_id=self.task_count, seed=self.seed)
        self.task_count += 1

        used = eng.begin(task)
        tr.add(S.PRE, c.pre, frozenset(used | {"Refill_l", "Refill_r"}) if audit else None)
        tr.add(S.NREG, c.nreg, frozenset() if audit else None)

        z = [None, None]
        pending = [LEFT, RIGHT]
        retries = [0, 0]
        assist = self.policy is Policy.WITH_ASSIST
        rounds = 0
        while True:
            rounds += 1
            if rounds > MAX_ITERATIONS:
                raise SamplerDiagnostic("FSM round cap reached")
            nmax = 0
            still = []
            for p in pending:
                ok, zz, n = eng.attempt(p, p)
                if n > nmax:
                    nmax = n
                if ok:
                    z[p] = zz
                else:
                    still.append(p)
                    retries[p] += 1
            tr.add(S.NLOOP, self.loop.cost(nmax), self._loop_used(pending) if audit else None)
            tr.nloop_attempts += len(pending)
            tr.nloop_accepts += len(pending) - len(still)
            if not still:
                break
            if assist and len(pending) == 2 and len(still) == 1:
                rem = still[0]
                helper = 1 - rem
                st = S.SWITCHL if rem == LEFT else S.SWITCHR
                used = eng.switch(helper, rem)
                tr.add(st, c.switch, frozenset(used) if audit else None)
                tr.switches += 1
                while True:
                    rounds += 1
                    if rounds > MAX_ITERATIONS:
                        raise SamplerDiagnostic("FSM round cap reached")
                    ok_l, z_l, n_l = eng.attempt(LEFT, rem)
                    ok_r, z_r, n_r = eng.attempt(RIGHT, rem)
                    tr.add(S.ALOOP, self.loop.cost(max(n_l, n_r)),
                           self._loop_used((LEFT, RIGHT)) if audit else None)
                    tr.aloop_rounds += 1
                    nxt, winner = aloop_round(rem, (ok_l, ok_r))
                    if nxt is S.F_ADD:
                        tr.aloop_success += 1
                        z[rem] = z_l if winner == LEFT else z_r
                        tr.aloop_winner = winner
                        break
                    retries[rem] += 1
                break
            pending = still

        out_l, out_r = eng.finish(z[0], z[1])
        tr.add(S.F_ADD, c.f_add, frozenset({"Fpr_adder"}) if audit else None)
        tr.retries_l, tr.retries_r = retries
        return out_l, out_r, tr

    @staticmethod
    def _loop_used(paths) -> frozenset:
        used = {"Base"}
        for p in paths:
            used.update((_BEF[p], _FOR[p], _CMP[p], _REFILL[p]))
        return frozenset(used)

    def run(self, tasks):
        """Run a task sequence; yields (z_l, z_r, trace)."""
        for t in tasks:
            yield self.run_task(t)
