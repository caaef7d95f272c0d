"""Statistical checks: goodness of fit, failure histograms, assist success rate."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps

from .basesampler import RCDT, rcdt_pmf

SUPPORT_HALF_WIDTH = 30
ALPHA = 0.01
MIN_SAMPLES = 10_000
MIN_ALOOP_ROUNDS = 10_000


class InsufficientData(ValueError):
    pass


def target_pmf(mu: float, sigma_prime: float, support: range | None = None):
    """Discrete Gaussian D_{Z,mu,sigma'} normalized over ``support``.

    Returns (ks, pmf) as numpy arrays.
    """
    fl = math.floor(mu)
    if support is None:
        support = range(fl - SUPPORT_HALF_WIDTH, fl + SUPPORT_HALF_WIDTH + 1)
    if support.start > fl - SUPPORT_HALF_WIDTH or support.stop <= fl + SUPPORT_HALF_WIDTH:
        raise ValueError("support must cover floor(mu) +- 30")
    ks = np.arange(support.start, support.stop, dtype=np.int64)
    logw = -((ks - mu) ** 2) / (2.0 * sigma_prime * sigma_prime)
    w = np.exp(logw - logw.max())
    return ks, w / w.sum()


def merge_bins(observed, expected, min_expected: float = 5.0):
    """Greedy left-to-right merge until every bin expects >= min_expected.

    A short remainder at the right end is folded into the last full bin.
    """
    obs_out, exp_out = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_out:
            obs_out[-1] += o_acc
            exp_out[-1] += e_acc
        else:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
    return np.asarray(obs_out, float), np.asarray(exp_out, float)


@dataclass
class ChiSquare:
    statistic: float
    dof: int
    p_value: float
    bins: int


def chi_square(observed, probs, min_samples: int = MIN_SAMPLES) -> ChiSquare:
    """Pearson test of counts against a PMF (scaled by the sample total)."""
    observed = np.asarray(observed, float)
    probs = np.asarray(probs, float)
    if observed.shape != probs.shape:
        raise ValueError("observed and probs differ in length")
    n = observed.sum()
    if n < min_samples:
        raise InsufficientData(f"need at least {min_samples} samples, got {int(n)}")
    o, e = merge_bins(observed, probs / probs.sum() * n)
    if len(o) < 2:
        raise ValueError("fewer than 2 bins after merging")
    stat = float(((o - e) ** 2 / e).sum())
    dof = len(o) - 1
    return ChiSquare(stat, dof, float(sps.chi2.sf(stat, dof)), len(o))


@dataclass
class DistReport:
    label: str
    support: list
    empirical: list
    target: list
    statistic: float
    dof: int
    p_value: float
    n: int
    renyi2: float = float("nan")

    def passed(self, alpha: float = ALPHA) -> bool:
        return self.p_value > alpha

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed()
        return d


def renyi_divergence(emp, target, order: float = 2.0) -> float:
    """R_a(emp || target), informational only."""
    emp = np.asarray(emp, float)
    target = np.asarray(target, float)
    m = emp > 0
    if np.any(target[m] <= 0):
        return float("inf")
    s = np.sum(emp[m] ** order / target[m] ** (order - 1))
    return float(s ** (1.0 / (order - 1)))


def _counts(samples, lo: int, hi: int):
    """Histogram over [lo, hi]; values outside are folded into the edge bins."""
    a = np.clip(np.asarray(samples, dtype=np.int64), lo, hi) - lo
    return np.bincount(a, minlength=hi - lo + 1)


def dist_report(samples, mu: float, sigma_prime: float, label: str = "",
                min_samples: int = MIN_SAMPLES) -> DistReport:
    ks, pmf = target_pmf(mu, sigma_prime)
    counts = _counts(samples, int(ks[0]), int(ks[-1]))
    n = int(counts.sum())
    cs = chi_square(counts, pmf, min_samples)
    emp = counts / n
    return DistReport(label or f"mu={mu},sigma={sigma_prime}", ks.tolist(), emp.tolist(),
                      pmf.tolist(), cs.statistic, cs.dof, cs.p_value, n,
                      renyi_divergence(emp, pmf))


def base_report(z0_samples, reference=RCDT, min_samples: int = MIN_SAMPLES) -> DistReport:
    """z0 counts against the PMF implied by ``reference``."""
    pmf = np.asarray(rcdt_pmf(reference))
    counts = _counts(z0_samples, 0, len(pmf) - 1)
    n = int(counts.sum())
    cs = chi_square(counts, pmf, min_samples)
    emp = counts / n
    return DistReport("base_z0", list(range(len(pmf))), emp.tolist(), pmf.tolist(),
                      cs.statistic, cs.dof, cs.p_value, n, renyi_divergence(emp, pmf))


FAILURE_BINS = ("0", "1", "2", "3", "4", "5", ">=6")


@dataclass
class FailureHistogram:
    counts: list
    total: int

    @property
    def ratios(self) -> list[float]:
        return [c / self.total for c in self.counts] if self.total else [0.0] * 7

    def to_dict(self) -> dict:
        return {"bins": list(FAILURE_BINS), "counts": self.counts, "total": self.total,
                "ratios": self.ratios}

    def render(self) -> str:
        """Aligned text table: failures, executions, ratio (%)."""
        head = ["# Failures", *FAILURE_BINS, "Total"]
        execs = ["Executions", *map(str, self.counts), str(self.total)]
        ratio = ["Ratio (%)", *(f"{100 * r:.2f}" for r in self.ratios), "100.00"]
        widths = [max(len(a), len(b), len(c)) for a, b, c in zip(head, execs, ratio)]
        return "\n".join(" | ".join(cell.rjust(w) for cell, w in zip(row, widths))
                         for row in (head, execs, ratio))


def histogram_from_retries(retries) -> FailureHistogram:
    counts = [0] * 7
    n = 0
    for r in retries:
        counts[min(r, 6)] += 1
        n += 1
    return FailureHistogram(counts, n)


def failure_histogram(traces) -> FailureHistogram:
    """Each trace contributes two single-sample executions."""
    def gen():
        for t in traces:
            yield t.retries_l
            yield t.retries_r
    return histogram_from_retries(gen())


def assisted_success_rate(traces, min_rounds: int = MIN_ALOOP_ROUNDS) -> float:
    rounds = ok = 0
    for t in traces:
        rounds += t.aloop_rounds
        ok += t.aloop_success
    if rounds < min_rounds:
        raise InsufficientData(f"only {rounds} ALOOP rounds (< {min_rounds})")
    return ok / rounds


def nloop_acceptance(traces) -> float:
    """Per-attempt acceptance rate measured over NLOOP rounds."""
    att = acc = 0
    for t in traces:
        att += t.nloop_attempts
        acc += t.nloop_accepts
    if not att:
        raise InsufficientData("no NLOOP attempts recorded")
    return acc / att
