"""Command-line front end: sample, latency, verify, vectors.

Exit codes: 0 success, 1 failed check or I/O error, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

from . import __version__
from .basesampler import RCDT, skewed_table
from .campaigns import (MU_GRID, assist_campaign, base_samples, derived_rng,
                        failure_campaign, grid_samples, random_tasks, sigma_grid)
from .fsm import DualPathSampler, Policy, write_jsonl
from .kernel import Kernel
from .oracle import samplerz_oracle
from .params import get_params
from .perf import (MIN_TRIALS, P_ACCEPT, table_csv, table_json, table_rows,
                   expected_cycles_bi, expected_cycles_falconsign, RejectionModel)
from .randomness import RefillBuffer, parse_seed
from . import stats, vectors

DEFAULTS = {
    "seed": "00" * 32,
    "params": "falcon512",
    "sigma_min": None,
    "sigma_max": None,
    "trials": None,
    "out": ".",
    "format": "csv",
    "policy": "with_assist",
    "tasks": 1000,
    "mu_dist": "uniform",
    "sigma": None,
    "engine": "fsm",
    "p": P_ACCEPT,
    "loop_model": "band",
    "model": "geometric",
    "quick": False,
    "fault": None,
    "emit_gnuplot": False,
    "count": 16,
    "file": None,
}

# Failure-histogram gates (zero and one rejection ratios) and tolerances.
TABLE_ZERO, TABLE_ONE = 0.5758, 0.2439
ASSIST_TARGET = 0.823


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", help="64 hex characters (ChaCha20 key)")
    g.add_argument("--params", choices=["falcon512", "falcon1024", "custom"])
    g.add_argument("--sigma-min", type=float)
    g.add_argument("--sigma-max", type=float)
    g.add_argument("--trials", type=int)
    g.add_argument("--out", help="output directory")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--config", help="JSON config file (CLI flags take precedence)")
    g.add_argument("--policy", choices=[p.value for p in Policy])
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="bisamplerz", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", parents=[common], help="draw (z_l, z_r) pairs")
    sp.add_argument("--tasks", type=int)
    sp.add_argument("--mu-dist", help="uniform | fixed:a,b")
    sp.add_argument("--sigma", type=float, help="fixed sigma' (default: uniform)")
    sp.add_argument("--engine", choices=["fsm", "oracle"])

    lp = sub.add_parser("latency", parents=[common], help="expected-cycle table")
    lp.add_argument("--p", type=float, help="per-attempt acceptance probability")
    lp.add_argument("--loop-model", choices=["band", "tie", "min"])
    lp.add_argument("--model", choices=["geometric", "empirical"])
    lp.add_argument("--emit-gnuplot", action="store_true", default=None)

    vp = sub.add_parser("verify", parents=[common], help="statistical checks")
    vp.add_argument("--quick", action="store_true", default=None,
                    help="10^4 samples per check, informational only")
    vp.add_argument("--fault", choices=["skew-rcdt"])

    gp = sub.add_parser("vectors", parents=[common], help="golden vectors")
    gp.add_argument("action", choices=["emit", "check"])
    gp.add_argument("--count", type=int)
    gp.add_argument("--file", help="vector file (default <out>/golden_vectors.txt)")
    return ap


def resolve_config(args: argparse.Namespace) -> dict:
    """defaults < config file < command-line flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    for k, v in vars(args).items():
        if k in cfg and v is not None:
            cfg[k] = v
    cfg["command"] = args.command
    if args.command == "vectors":
        cfg["action"] = args.action
    try:
        cfg["seed"] = parse_seed(cfg["seed"]).hex()
        params = get_params(cfg["params"], cfg["sigma_min"], cfg["sigma_max"])
        Policy(cfg["policy"])
    except (ValueError, TypeError) as e:
        raise UsageError(str(e)) from None
    cfg["sigma_min"], cfg["sigma_max"] = params.sigma_min, params.sigma_max
    return cfg


# Output locations do not affect results, so they stay out of the hash.
_UNHASHED = ("out", "file")


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k not in _UNHASHED}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


def _meta(cfg: dict) -> dict:
    return {"seed": cfg["seed"], "config_hash": config_hash(cfg), "version": __version__,
            "command": cfg["command"]}


def _params(cfg):
    return get_params(cfg["params"], cfg["sigma_min"], cfg["sigma_max"])


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _emit_rows(cfg, name: str, rows: list[dict], columns, extra: dict | None = None) -> Path:
    """Write rows as CSV (meta in '#' comment lines) or JSON; returns the path."""
    out = Path(cfg["out"])
    meta = _meta(cfg)
    if extra:
        meta.update(extra)
    if cfg["format"] == "json":
        path = out / f"{name}.json"
        _write(path, json.dumps({"meta": meta, "rows": rows}, indent=2, sort_keys=True) + "\n")
    else:
        buf = io.StringIO()
        for k in sorted(meta):
            buf.write(f"# {k}={meta[k]}\n")
        w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        path = out / f"{name}.csv"
        _write(path, buf.getvalue())
    return path


# --- commands ---------------------------------------------------------------

SAMPLE_COLUMNS = ("task_id", "mu_l", "mu_r", "sigma", "z_l", "z_r", "total_cycles",
                  "retries_l", "retries_r", "switches")


def cmd_sample(cfg) -> int:
    params = _params(cfg)
    n = cfg["trials"] if cfg["trials"] is not None else cfg["tasks"]
    if n < 1:
        raise UsageError("task count must be positive")
    try:
        tasks = random_tasks(derived_rng(cfg["seed"], "tasks"), n, params,
                             cfg["mu_dist"], cfg["sigma"])
    except ValueError as e:
        raise UsageError(str(e)) from None
    kernel = Kernel(params)
    rows = []
    if cfg["engine"] == "oracle":
        buf = RefillBuffer(cfg["seed"])
        for i, t in enumerate(tasks):
            z_l = samplerz_oracle(t.mu_l, t.sigma_prime, buf.left, params)
            z_r = samplerz_oracle(t.mu_r, t.sigma_prime, buf.right, params)
            rows.append({"task_id": i, "mu_l": repr(t.mu_l), "mu_r": repr(t.mu_r),
                         "sigma": repr(t.sigma_prime), "z_l": z_l, "z_r": z_r,
                         "total_cycles": "", "retries_l": "", "retries_r": "", "switches": ""})
    else:
        fsm = DualPathSampler.from_seed(cfg["seed"], cfg["policy"], kernel)
        traces = []
        for t in tasks:
            z_l, z_r, tr = fsm.run_task(t)
            traces.append(tr)
            rows.append({"task_id": tr.task_id, "mu_l": repr(t.mu_l), "mu_r": repr(t.mu_r),
                         "sigma": repr(t.sigma_prime), "z_l": int(z_l), "z_r": int(z_r),
                         "total_cycles": tr.total_cycles, "retries_l": tr.retries_l,
                         "retries_r": tr.retries_r, "switches": tr.switches})
        tpath = Path(cfg["out"]) / "traces.jsonl"
        tpath.parent.mkdir(parents=True, exist_ok=True)
        with open(tpath, "w") as fh:
            write_jsonl(traces, fh)
    path = _emit_rows(cfg, "samples", rows, SAMPLE_COLUMNS)
    print(f"wrote {len(rows)} pairs to {path}")
    return 0


def cmd_latency(cfg) -> int:
    trials = cfg["trials"] if cfg["trials"] is not None else 1_000_000
    if trials < 2:
        raise UsageError("--trials must be at least 2")
    if trials < MIN_TRIALS:
        print(f"warning: {trials} trials < {MIN_TRIALS}; confidence intervals will be wide",
              file=sys.stderr)
    try:
        model = RejectionModel(cfg["p"], cfg["model"])
    except ValueError as e:
        raise UsageError(str(e)) from None
    reports = [
        expected_cycles_bi(Policy.WITH_ASSIST, model, trials, 1, cfg["loop_model"]),
        expected_cycles_bi(Policy.WITHOUT_ASSIST, model, trials, 2, cfg["loop_model"]),
        expected_cycles_falconsign(model, trials, 3),
    ]
    rows = table_rows(reports)
    extra = {"p_accept": cfg["p"], "model": cfg["model"], "loop_model": cfg["loop_model"],
             "falconsign_berexp_rejection_free": reports[2].extra["berexp_rejection_free"]}
    out = Path(cfg["out"])
    if cfg["format"] == "json":
        meta = {**_meta(cfg), **extra}
        path = out / "latency.json"
        _write(path, table_json(rows, meta) + "\n")
    else:
        meta = {**_meta(cfg), **extra}
        head = "".join(f"# {k}={meta[k]}\n" for k in sorted(meta))
        path = out / "latency.csv"
        _write(path, head + table_csv(rows))
    if cfg["emit_gnuplot"]:
        lines = ["# idx design expected_cycles cycles_wo_rejection normalized_latency"]
        for i, r in enumerate(rows):
            lines.append(f"{i} {r['design']} {r['expected_cycles']} "
                         f"{r['cycles_wo_rejection']} {r['normalized_latency']}")
        _write(out / "latency.dat", "\n".join(lines) + "\n")
    for r in rows:
        print(f"{r['design']:<24} {r['expected_cycles']:>10.2f} {r['cycles_wo_rejection']:>8} "
              f"{r['normalized_latency']:>8.3f}")
    print(f"wrote {path}")
    return 0


def run_verify(cfg) -> tuple[list[tuple[str, bool, str]], dict]:
    """Run every gated check.  Returns ([(name, passed, detail)], report dict)."""
    params = _params(cfg)
    quick = bool(cfg["quick"])
    n = cfg["trials"] or (10_000 if quick else 1_000_000)
    table = skewed_table() if cfg["fault"] == "skew-rcdt" else RCDT
    kernel = Kernel(params, table)
    seed = cfg["seed"]
    checks, report = [], {}

    z0 = base_samples(seed, n, table)
    br = stats.base_report(z0, RCDT)
    report["base_z0"] = br.to_dict()
    checks.append(("base_z0_chi2", br.passed(), f"p={br.p_value:.4g}"))

    report["grid"] = []
    for mu in MU_GRID:
        for sig in sigma_grid(params):
            d = stats.dist_report(grid_samples(seed, mu, sig, n, kernel), mu, sig,
                                  f"mu={mu},sigma={sig:.6g}")
            report["grid"].append(d.to_dict())
            checks.append((f"dist[{d.label}]", d.passed(), f"p={d.p_value:.4g}"))

    hist = stats.failure_histogram(failure_campaign(seed=derived_rng(seed, "hist").getrandbits(32)))
    report["failure_histogram"] = hist.to_dict()
    r0, r1 = hist.ratios[0], hist.ratios[1]
    checks.append(("failure_zero_ratio", abs(r0 - TABLE_ZERO) <= 0.01, f"{100 * r0:.2f}%"))
    checks.append(("failure_one_ratio", abs(r1 - TABLE_ONE) <= 0.015, f"{100 * r1:.2f}%"))

    traces = assist_campaign(seed, params, 1_000 if quick else stats.MIN_ALOOP_ROUNDS, kernel)
    rate = stats.assisted_success_rate(traces, 1_000 if quick else stats.MIN_ALOOP_ROUNDS)
    p_hat = stats.nloop_acceptance(traces)
    predicted = 1 - (1 - p_hat) ** 2
    report["assist"] = {"rate": rate, "p_hat": p_hat, "predicted": predicted,
                        "aloop_rounds": sum(t.aloop_rounds for t in traces)}
    checks.append(("assist_rate", abs(rate - ASSIST_TARGET) <= 0.01
                   and abs(rate - predicted) <= 0.01, f"{rate:.4f} (1-(1-p)^2={predicted:.4f})"))
    checks.append(("acceptance_range", 0.52 <= p_hat <= 0.62, f"p={p_hat:.4f}"))
    return checks, report


def cmd_verify(cfg) -> int:
    checks, report = run_verify(cfg)
    report["meta"] = {**_meta(cfg), "quick": bool(cfg["quick"]), "fault": cfg["fault"]}
    report["checks"] = [{"name": n, "passed": ok, "detail": d} for n, ok, d in checks]
    out = Path(cfg["out"])
    _write(out / "verify.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    if cfg["format"] == "csv":
        _emit_rows(cfg, "verify", report["checks"], ("name", "passed", "detail"))
    print(stats.FailureHistogram(**{k: report["failure_histogram"][k]
                                    for k in ("counts", "total")}).render())
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    failed = [n for n, ok, _ in checks if not ok]
    if cfg["quick"]:
        print("quick mode: checks are informational")
        return 0
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def cmd_vectors(cfg) -> int:
    path = Path(cfg["file"] or Path(cfg["out"]) / "golden_vectors.txt")
    kernel = Kernel(_params(cfg))
    if cfg["action"] == "emit":
        rng_seed = derived_rng(cfg["seed"], "vectors").getrandbits(32)
        vecs = vectors.generate(cfg["count"], rng_seed, _params(cfg))
        _write(path, vectors.dumps(vecs))
        print(f"wrote {len(vecs)} vectors to {path}")
        return 0
    vecs = vectors.loads(path.read_text())
    bad = vectors.check(vecs, kernel)
    for i, want, got in bad:
        print(f"mismatch at vector {i}: expected {want.line()} got {got.line()}", file=sys.stderr)
    print(f"{len(vecs) - len(bad)}/{len(vecs)} vectors match")
    return 1 if bad else 0


COMMANDS = {"sample": cmd_sample, "latency": cmd_latency, "verify": cmd_verify,
            "vectors": cmd_vectors}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
