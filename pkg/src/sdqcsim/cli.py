"""Command-line entry point: every experiment as a subcommand.

Output is JSON lines: zero or more {"type": "record"} lines, then one
{"type": "summary"} line carrying the effective configuration. A short human
summary goes to stderr. Exit codes: 0 success, 1 a --check failed, 2 usage.

Trial i of a stochastic subcommand draws from Seed(seed).child(i), so the
bytes written do not depend on --jobs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources as _res
from pathlib import Path
from typing import Callable

import numpy as np

from .core import Angle, Seed, binomial_stderr

OUTPUT_DIR_ENV = "SDQCSIM_OUTPUT_DIR"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# plumbing

def _jsonable(x):
    if isinstance(x, Angle):
        return x.k
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    if isinstance(x, dict):
        return {str(_jsonable(k)) if not isinstance(k, str) else k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), separators=(",", ":"))


def data_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    packaged = Path(str(_res.files("sdqcsim") / "data" / name))
    if packaged.exists():
        return packaged
    raise UsageError(f"file not found: {name}")


def _prob(name: str, v):
    if v is None:
        return
    if not 0.0 <= v <= 1.0:
        raise UsageError(f"--{name.replace('_', '-')} must lie in [0, 1], got {v}")


def _need_seed(args):
    if args.seed is None:
        raise UsageError(f"{args.cmd} is stochastic: --seed is required")


def _chunks(n: int, jobs: int) -> list[tuple[int, int]]:
    if n <= 0:
        return []
    size = max(1, math.ceil(n / (max(1, jobs) * 4)))
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def _run_chunk(job):
    fn, params, start, stop = job
    return [fn(params, i) for i in range(start, stop)]


def map_trials(fn: Callable, params: dict, n: int, jobs: int) -> list:
    """fn(params, i) for i < n, in index order, optionally across processes."""
    chunks = _chunks(n, jobs)
    if jobs <= 1 or len(chunks) <= 1:
        return [fn(params, i) for i in range(n)]
    out = []
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        for part in ex.map(_run_chunk, [(fn, params, s, e) for s, e in chunks]):
            out.extend(part)
    return out


def _trial_seed(params: dict, i: int) -> Seed:
    return Seed(params["seed"], params.get("path", ())).child(i)


def _pattern(args):
    from .mbqc import load_pattern
    return load_pattern(data_path(args.graph), data_path(args.pattern) if args.pattern else None)


# ---------------------------------------------------------------------------
# trial functions (module level so worker processes can import them)

def _t_plugged(p, i):
    from .plugged_rsp import LeakReconstructingReceiver, run_plugged_rsp
    from .resources import ResourceModel
    rng = _trial_seed(p, i).rng()
    rsp = (ResourceModel.noisy_leaky(p["p_noise"], p["p_leak"]) if p["p_noise"]
           else ResourceModel.leaky(p["p_leak"]))
    rec = LeakReconstructingReceiver(rng)
    run = run_plugged_rsp(Angle(p["theta"]), p["kappa"], rsp, rec, rng)
    return {"trial": i, "leaked": int(run.merged_leak), "valid": run.valid,
            "fidelity": run.fidelity_with(Angle(p["theta"])),
            "reconstructed": None if rec.reconstructed is None else rec.reconstructed.k}


def _t_ubqc(p, i):
    from .mbqc import HonestProver, load_pattern, run_ubqc
    from .resources import ResourceModel
    pat = load_pattern(p["graph"], p["pattern"])
    s = _trial_seed(p, i)
    rsp = ResourceModel.leaky(p["p_leak"]) if p["p_leak"] else ResourceModel.ideal()
    out, tr = run_ubqc(pat, rsp, HonestProver(s.child(2).rng()), s.child(0).rng(), s.child(1).rng())
    deltas = [m.payload for m in tr.of_kind("delta")]
    return {"trial": i, "output": "".join(map(str, out)), "deltas": deltas}


def _protocol_trial(p, i):
    from .mbqc import load_pattern
    from .orchestrator import (RunPlan, make_prover, run_dummyless_sdqc, run_ft_sdqc_level1,
                               run_leak_tolerant_sdqc)
    from .resources import ResourceModel
    from .traps import enumerate_tests
    pat = load_pattern(p["graph"], p["pattern"])
    tests = enumerate_tests(pat.graph)
    plan = RunPlan(p["N"], p["d"], p["w"])
    s = _trial_seed(p, i)
    v_rng, r_rng = s.child(0).rng(), s.child(1).rng()
    prover = make_prover(p["prover"], s.child(2).rng(), p["support"], p["rate"])
    if p["mode"] == "plugged":
        out = run_leak_tolerant_sdqc(pat, plan, tests, p["kappa"], p["p_leak"], prover, v_rng, r_rng,
                                     p_noise=p["p_noise"])
    elif p["mode"] == "level1":
        out = run_ft_sdqc_level1(pat, plan, tests, p["p_c"], prover, v_rng, r_rng)
    else:
        rsp = ResourceModel.leaky(p["p_leak"]) if p["p_leak"] else ResourceModel.ideal()
        out = run_dummyless_sdqc(pat, plan, tests, rsp, prover, v_rng, r_rng)
    rec = {"trial": i}
    rec.update(out.to_record())
    rec["wrong"] = int(out.wrong(p["reference"])) if p["reference"] is not None else None
    rec["corrupted_rounds"] = getattr(prover, "corrupted_rounds", None)
    return rec


def _t_level1(p, i):
    from . import rm15
    from .resources import CompromiseAdversary, LeakOnlyAdversary, PauliAdversary
    rng = _trial_seed(p, i).rng()
    adv = {"none": CompromiseAdversary(), "leak": LeakOnlyAdversary(),
           "x": PauliAdversary("X"), "y": PauliAdversary("Y"), "z": PauliAdversary("Z")}[p["adversary"]]
    theta = Angle(p["theta"]) if p["theta"] is not None else Angle(int(rng.integers(8)))
    run = rm15.level1_safe_rsp(theta, p["p_c"], adv, rng, safe=p["safe"], check=p["verify"])
    leak = run.reconstructed_theta()
    return {"trial": i, "theta": theta.k, "compromised": [list(c) for c in run.compromised],
            "good": run.good, "theta_revealed": leak is not None and leak == theta,
            "accuracy_ok": run.accuracy_ok, "privacy_ok": run.privacy_ok}


def _t_threshold(p, i):
    from .ftanalysis import GadgetShape, exrec_bad_sparse, sample_positions
    rng = _trial_seed(p, i).rng()
    shape = GadgetShape(p["ga"], p["ec"])
    pos = sample_positions(shape, p["k"], p["p_c"], rng)
    bad = pos.shape[0] >= 2 and exrec_bad_sparse(shape, p["k"], pos)
    return {"trial": i, "classification": "bad" if bad else "good", "compromised": int(pos.shape[0])}


# ---------------------------------------------------------------------------
# subcommands: each returns (records, summary, check_ok)

def cmd_plugged_rsp(args):
    _need_seed(args)
    for n in ("p_leak", "p_noise"):
        _prob(n, getattr(args, n))
    if args.kappa < 1:
        raise UsageError("--kappa must be at least 1")
    p = {"seed": args.seed, "theta": args.theta % 8, "kappa": args.kappa, "p_leak": args.p_leak,
         "p_noise": args.p_noise}
    recs = map_trials(_t_plugged, p, args.trials, args.jobs)
    n = len(recs)
    rate = sum(r["leaked"] for r in recs) / n
    valid = sum(r["valid"] for r in recs) / n
    exp = args.p_leak ** args.kappa
    sigma = math.sqrt(exp * (1 - exp) / n)
    worst = min(r["fidelity"] for r in recs if r["valid"]) if any(r["valid"] for r in recs) else None
    ok = abs(rate - exp) <= 5 * sigma + 1e-12 and (args.p_noise > 0 or worst >= 1 - 1e-10)
    summary = {"merged_leak_rate": rate, "expected_merged_leak_rate": exp, "stderr": sigma,
               "valid_rate": valid, "expected_valid_rate": (1 - args.p_noise) ** args.kappa,
               "min_valid_fidelity": worst}
    return (recs if args.records else []), summary, ok


def cmd_tradeoff(args):
    _need_seed(args)
    from .plugged_rsp import tradeoff_bounds
    _prob("p_noise", args.p_noise)
    _prob("p_leak", args.p_leak)
    bounds = tradeoff_bounds(args.p_noise, args.p_leak, args.c)
    rows = []
    for j, kappa in enumerate(args.kappas):
        p = {"seed": args.seed, "path": (j,), "theta": 1, "kappa": kappa, "p_leak": args.p_leak,
             "p_noise": args.p_noise}
        recs = map_trials(_t_plugged, p, args.trials, args.jobs)
        n = len(recs)
        v = sum(r["valid"] for r in recs) / n
        lk = sum(r["leaked"] for r in recs) / n
        ev = (1 - args.p_noise) ** kappa
        rows.append({"kappa": kappa, "valid_rate": v, "expected_valid_rate": ev,
                     "valid_stderr": math.sqrt(ev * (1 - ev) / n), "merged_leak_rate": lk,
                     "expected_merged_leak_rate": args.p_leak ** kappa})
    ok = all(abs(r["valid_rate"] - r["expected_valid_rate"]) <= 5 * r["valid_stderr"] + 1e-12 for r in rows)
    srt = sorted(rows, key=lambda r: r["kappa"])
    ok &= all(a["expected_valid_rate"] >= b["expected_valid_rate"] and
              a["expected_merged_leak_rate"] >= b["expected_merged_leak_rate"] for a, b in zip(srt, srt[1:]))
    extra = {f"valid_k{r['kappa']}": round(r["valid_rate"], 4) for r in srt}
    return rows, {"bounds": bounds, **extra}, ok


def cmd_ubqc_run(args):
    _need_seed(args)
    from .mbqc import exact_output_distribution
    _prob("p_leak", args.p_leak)
    pat = _pattern(args)
    p = {"seed": args.seed, "graph": str(data_path(args.graph)),
         "pattern": str(data_path(args.pattern)) if args.pattern else None, "p_leak": args.p_leak}
    recs = map_trials(_t_ubqc, p, args.trials, args.jobs)
    exact = {"".join(map(str, k)): v for k, v in exact_output_distribution(pat).items() if v > 1e-12}
    n = len(recs)
    freq: dict = {}
    for r in recs:
        freq[r["output"]] = freq.get(r["output"], 0) + 1
    emp = {k: c / n for k, c in sorted(freq.items())}
    ok = all(abs(emp.get(k, 0.0) - exact.get(k, 0.0)) <= 5 * binomial_stderr(exact.get(k, 0.0), n) + 1e-12
             for k in set(emp) | set(exact))
    tvd = 0.5 * sum(abs(emp.get(k, 0.0) - exact.get(k, 0.0)) for k in set(emp) | set(exact))
    return (recs if args.records else []), {"empirical": emp, "exact": exact, "tvd": tvd}, ok


def cmd_traps(args):
    from .mbqc import parse_graph
    from .traps import brute_force_test_sets, enumerate_tests
    g = parse_graph(data_path(args.graph).read_text())
    ts = enumerate_tests(g)
    brute = set(brute_force_test_sets(g))
    recs = [json.loads(t.to_json()) for t in ts.tests]
    subset = all(t.W in brute for t in ts.tests)
    summary = {"tests": len(ts), "brute_force_tests": len(brute), "epsilon": ts.epsilon,
               "subset_of_brute_force": subset}
    return recs, summary, subset and ts.epsilon > 0


def _protocol_params(args, mode):
    from .mbqc import exact_output_distribution
    for n in ("p_leak", "p_noise", "p_c", "rate"):
        _prob(n, getattr(args, n, None))
    pat = _pattern(args)
    dist = exact_output_distribution(pat)
    best = max(dist, key=dist.get)
    ref = best if dist[best] > 1 - 1e-9 else None
    d = args.N // 2 if args.d is None else args.d
    if not 0 <= d <= args.N:
        raise UsageError("need 0 <= d <= N")
    return {"seed": args.seed, "graph": str(data_path(args.graph)),
            "pattern": str(data_path(args.pattern)) if args.pattern else None,
            "N": args.N, "d": d, "w": args.w, "prover": args.prover, "support": tuple(args.support),
            "rate": args.rate, "mode": mode, "kappa": getattr(args, "kappa", 1),
            "p_leak": args.p_leak, "p_noise": getattr(args, "p_noise", 0.0), "p_c": getattr(args, "p_c", 0.0),
            "reference": ref}


def _protocol_summary(recs, p):
    n = len(recs)
    acc = sum(r["accepted"] for r in recs) / n
    wrong = sum(r["wrong"] or 0 for r in recs) / n if p["reference"] is not None else None
    return {"executions": n, "accept_rate": acc, "accepted_wrong_rate": wrong,
            "reference_output": None if p["reference"] is None else "".join(map(str, p["reference"])),
            "mean_failed_tests": sum(r["x"] for r in recs) / n}


def cmd_sdqc(args):
    _need_seed(args)
    mode = "level1" if args.p_c else ("plugged" if args.kappa > 1 else "direct")
    p = _protocol_params(args, mode)
    recs = map_trials(_protocol_trial, p, args.trials, args.jobs)
    summary = _protocol_summary(recs, p)
    ok = summary["accept_rate"] == 1.0 and not summary["accepted_wrong_rate"]
    return recs, summary, ok


def cmd_leak_attack(args):
    _need_seed(args)
    p = _protocol_params(args, "plugged")
    recs = map_trials(_protocol_trial, p, args.trials, args.jobs)
    summary = _protocol_summary(recs, p)
    summary["per_vertex_merged_leak"] = args.p_leak ** args.kappa
    return recs, summary, True


def cmd_rm15_attack(args):
    from . import rm15
    demo = rm15.attack_demo_theta_leak(args.qubit)
    tv = demo["tvd_table"]
    summary = {"qubit": args.qubit, "tvd_0_pi2": float(tv[0, 2]), "max_tvd": float(tv.max()),
               "ml_accuracy": demo["ml_accuracy"], "sigma": rm15.transversal_sign(),
               "syndrome_distribution": {k.k: v for k, v in demo["syndrome_distribution"].items()}}
    recs = [{"theta_a": a, "theta_b": b, "tvd": float(tv[a, b])} for a in range(8) for b in range(8)]
    return (recs if args.records else []), summary, tv[0, 2] > 0.1 and demo["ml_accuracy"] > 1 / 8


def cmd_safe_z(args):
    from . import rm15
    exp = rm15.safe_attack_experiment(args.qubit, args.location, replacement=args.replacement)
    verdict = rm15.accuracy_and_privacy([(args.location, args.qubit)],
                                        _pauli_adversary(args.replacement))
    summary = {"location": [args.location, args.qubit], "replacement": args.replacement,
               "view_max_tvd": float(exp["tvd_table"].max()), "ml_accuracy": exp["ml_accuracy"],
               "accuracy_ok": verdict["accuracy_ok"], "privacy_ok": verdict["privacy_ok"],
               "privacy_distance": verdict["privacy_distance"]}
    ok = verdict["accuracy_ok"] and verdict["privacy_ok"] and exp["tvd_table"].max() <= 1e-8
    if args.trials:
        _need_seed(args)
        g = rm15.guessing_trials(args.trials, Seed(args.seed).rng(), args.qubit, args.location,
                                 replacement=args.replacement)
        summary["sampled_guessing"] = g
        ok &= abs(g["accuracy"] - 1 / 8) <= 5 * math.sqrt(7 / 64 / args.trials)
    return [], summary, ok


def _pauli_adversary(name):
    from .resources import PauliAdversary
    return PauliAdversary(name.upper())


def cmd_level1_rsp(args):
    _need_seed(args)
    _prob("p_c", args.p_c)
    p = {"seed": args.seed, "theta": args.theta, "p_c": args.p_c, "adversary": args.adversary,
         "safe": not args.unsafe, "verify": args.verify}
    recs = map_trials(_t_level1, p, args.trials, args.jobs)
    n = len(recs)
    good = [r for r in recs if r["good"]]
    summary = {"trials": n, "good_rate": len(good) / n,
               "theta_revealed_rate": sum(r["theta_revealed"] for r in recs) / n}
    ok = True
    if args.verify:
        summary["good_accurate_private"] = all(r["accuracy_ok"] and r["privacy_ok"] for r in good)
        ok = summary["good_accurate_private"]
    return recs, summary, ok


def cmd_threshold_mc(args):
    _need_seed(args)
    from .ftanalysis import GadgetShape, exact_level1_bad, doubly_exp_bound
    shape = GadgetShape(args.ga, args.ec)
    p_c = args.p_c if args.p_c is not None else shape.p0 * args.p_c_ratio
    _prob("p_c", p_c)
    if args.k < 1:
        raise UsageError("--k must be at least 1")
    p = {"seed": args.seed, "ga": args.ga, "ec": args.ec, "k": args.k, "p_c": p_c}
    recs = map_trials(_t_threshold, p, args.trials, args.jobs)
    n = len(recs)
    est = sum(r["classification"] == "bad" for r in recs) / n
    se = binomial_stderr(est, n)
    bound = doubly_exp_bound(shape, p_c, args.k)
    summary = {"k": args.k, "p_c": p_c, "p0": shape.p0, "A": shape.pairs, "locations": shape.total,
               "estimate": est, "stderr": se, "doubly_exp_bound": bound}
    ok = p_c >= shape.p0 or est <= bound + 3 * se
    if args.k == 1:
        summary["exact"] = exact_level1_bad(shape, p_c)
        ok &= abs(est - summary["exact"]) <= 3 * max(se, binomial_stderr(summary["exact"], n)) + 1e-12
    return (recs if args.records else []), summary, ok


def cmd_budget(args):
    from .ftanalysis import VacuousBound, budget_rsp_error, budget_sdqc_error, ft_overhead, required_level
    try:
        k = args.k if args.k is not None else required_level(args.N, args.V, args.p_c, args.p_0, args.eta)
        total = budget_sdqc_error(args.N, args.V, k, args.p_c, args.p_0, args.eta)
        summary = {"k": k, "rsp_error": budget_rsp_error(k, args.p_c, args.p_0), "sdqc_error": total,
                   "within_2eta": total <= 2 * args.eta}
    except VacuousBound as e:
        raise UsageError(str(e))
    if args.L is not None:
        summary["ft_overhead"] = ft_overhead(args.L, args.D, args.l, args.d_depth, args.eps0,
                                             args.eps_corr, args.delta)
    return [], summary, summary["within_2eta"]


def cmd_appendixb(args):
    from .appendixb import selectivity_summary, verify_attack_selectivity, verify_table
    rows = verify_attack_selectivity()
    table = verify_table()
    sel = selectivity_summary(rows)
    reachable = [r for r in table if r["ok"] is not None]
    summary = {"table_rows_ok": all(r["ok"] for r in reachable), "reachable": len(reachable),
               "aborted": len(table) - len(reachable),
               "min_fidelity": min(r["fidelity"] for r in reachable), **sel}
    ok = summary["table_rows_ok"] and sel["flips_cases_1_to_4"] and sel["invariant_cases_5_to_8"]
    return rows, summary, ok


# ---------------------------------------------------------------------------
# parser

def _common(sp, seed=True, trials=None, jobs=True):
    sp.add_argument("--config", help="key = value file; flags override it")
    sp.add_argument("--out", help="output file (relative paths resolve against $%s)" % OUTPUT_DIR_ENV)
    sp.add_argument("--check", action="store_true", help="exit 1 if the verification property fails")
    if seed:
        sp.add_argument("--seed", type=int)
    if trials is not None:
        sp.add_argument("--trials", type=int, default=trials)
    if jobs:
        sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--records", action="store_true", help="emit per-trial records where they are optional")


def _protocol_flags(sp, graph, pattern, N, d, w, prover):
    sp.add_argument("--graph", default=graph)
    sp.add_argument("--pattern", default=pattern)
    sp.add_argument("--N", type=int, default=N)
    sp.add_argument("--d", type=int, default=d)
    sp.add_argument("--w", type=int, default=w)
    sp.add_argument("--prover", default=prover, choices=["honest", "constantz", "randomz", "leakadaptive"],
                    type=str.lower)
    sp.add_argument("--support", type=int, nargs="*", default=[])
    sp.add_argument("--rate", type=float, default=0.0)
    sp.add_argument("--p-leak", type=float, default=0.0)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sdqcsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    sp = sub.add_parser("plugged-rsp", help="merged-leak rate of the plugged RSP")
    _common(sp, trials=10000)
    sp.add_argument("--theta", type=int, default=1, help="angle index k (theta = k pi/4)")
    sp.add_argument("--kappa", type=int, default=4)
    sp.add_argument("--p-leak", type=float, default=0.5)
    sp.add_argument("--p-noise", type=float, default=0.0)
    sp.set_defaults(func=cmd_plugged_rsp)

    sp = sub.add_parser("tradeoff", help="validity versus leak over kappa with noisy resources")
    _common(sp, trials=20000)
    sp.add_argument("--p-noise", type=float, default=0.1)
    sp.add_argument("--p-leak", type=float, default=0.1)
    sp.add_argument("--c", type=float, default=0.5, help="required validity")
    sp.add_argument("--kappas", type=int, nargs="+", default=[2, 5, 10])
    sp.set_defaults(func=cmd_tradeoff)

    sp = sub.add_parser("ubqc-run", help="blinded execution versus the exact output distribution")
    _common(sp, trials=1000)
    sp.add_argument("--graph", default="line3.edges")
    sp.add_argument("--pattern", default="quarter.angles")
    sp.add_argument("--p-leak", type=float, default=0.0)
    sp.set_defaults(func=cmd_ubqc_run)

    sp = sub.add_parser("traps", help="enumerate dummyless tests and their detection bound")
    _common(sp, seed=False, jobs=False)
    sp.add_argument("--graph", default="c4.edges")
    sp.set_defaults(func=cmd_traps)

    sp = sub.add_parser("sdqc", help="full protocol executions")
    _common(sp, trials=1)
    _protocol_flags(sp, "c4.edges", "id.angles", 100, None, 5, "honest")
    sp.add_argument("--kappa", type=int, default=1, help="> 1 plugs every RSP call")
    sp.add_argument("--p-noise", type=float, default=0.0)
    sp.add_argument("--p-c", type=float, default=0.0, help="> 0 runs the level-1 FT variant")
    sp.set_defaults(func=cmd_sdqc)

    sp = sub.add_parser("leak-attack", help="leak-adaptive prover against the plugged protocol")
    _common(sp, trials=100)
    _protocol_flags(sp, "line3.edges", "quarter.angles", 20, 10, 3, "leakadaptive")
    sp.set_defaults(p_leak=1.0)
    sp.add_argument("--kappa", type=int, default=1)
    sp.add_argument("--p-noise", type=float, default=0.0)
    sp.set_defaults(func=cmd_leak_attack)

    sp = sub.add_parser("rm15-attack", help="syndrome leak of the unsafe transversal rotation")
    _common(sp, seed=False, jobs=False)
    sp.add_argument("--qubit", type=int, default=0)
    sp.set_defaults(func=cmd_rm15_attack)

    sp = sub.add_parser("safe-z", help="the same compromise through Safe-Z in a good 1-exSafeRec")
    _common(sp, trials=0, jobs=False)
    sp.add_argument("--qubit", type=int, default=0)
    sp.add_argument("--location", default="prep", choices=["prep", "alpha", "beta", "ec1", "ec2"])
    sp.add_argument("--replacement", default="X", choices=["X", "Y", "Z"], type=str.upper)
    sp.set_defaults(func=cmd_safe_z)

    sp = sub.add_parser("level1-rsp", help="level-1 Safe RSP under random compromise")
    _common(sp, trials=100)
    sp.add_argument("--theta", type=int, default=None, help="fixed angle index; random when omitted")
    sp.add_argument("--p-c", type=float, default=0.01)
    sp.add_argument("--adversary", default="x", choices=["none", "leak", "x", "y", "z"], type=str.lower)
    sp.add_argument("--unsafe", action="store_true", help="use the plain transversal rotation")
    sp.add_argument("--verify", action="store_true", help="exact accuracy/privacy verdict per run")
    sp.set_defaults(func=cmd_level1_rsp)

    sp = sub.add_parser("threshold-mc", help="Monte-Carlo probability of a bad level-k exSafeRec")
    _common(sp, trials=100000)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--p-c", type=float, default=None)
    sp.add_argument("--p-c-ratio", type=float, default=0.25, help="p_c as a multiple of p0")
    sp.add_argument("--ga", type=int, default=30, help="locations in the gadget")
    sp.add_argument("--ec", type=int, default=50, help="locations per EC")
    sp.set_defaults(func=cmd_threshold_mc)

    sp = sub.add_parser("budget", help="error budgets and the required concatenation level")
    _common(sp, seed=False, jobs=False)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--V", type=int, required=True)
    sp.add_argument("--p-c", type=float, required=True)
    sp.add_argument("--p-0", type=float, required=True)
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--L", type=float, default=None, help="circuit size for the overhead calculator")
    sp.add_argument("--D", type=float, default=1.0)
    sp.add_argument("--l", type=float, default=2.0)
    sp.add_argument("--d-depth", type=float, default=2.0)
    sp.add_argument("--eps0", type=float, default=1e-2)
    sp.add_argument("--eps-corr", type=float, default=1e-3)
    sp.add_argument("--delta", type=float, default=1e-6)
    sp.set_defaults(func=cmd_budget)

    sp = sub.add_parser("appendixb", help="gadget output table and the selective-flip attack")
    _common(sp, seed=False, jobs=False)
    sp.set_defaults(func=cmd_appendixb)
    return ap


def read_config(path: str) -> dict:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        k, v = line.split("=", 1)
        cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = ap.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = read_config(args.config)
    except OSError as e:
        raise UsageError(f"cannot read config: {e}")
    sub = ap._subparsers._group_actions[0].choices[args.cmd]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for k, v in cfg.items():
        if k not in actions or k in ("config", "help"):
            raise UsageError(f"unknown config key {k!r} for {args.cmd}")
        act = actions[k]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[k] = v.lower() in ("1", "true", "yes", "on")
        elif act.nargs in ("*", "+"):
            conv = act.type or str
            defaults[k] = [conv(x) for x in v.replace(",", " ").split()]
        else:
            defaults[k] = v
    sub.set_defaults(**defaults)
    for k, v in defaults.items():
        act = actions[k]
        if isinstance(v, str) and act.type is not None:
            try:
                defaults[k] = act.type(v)
            except ValueError:
                raise UsageError(f"config value for {k!r} is malformed: {v!r}")
    sub.set_defaults(**defaults)
    return ap.parse_args(argv)


def _effective(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = _apply_config(ap, argv)
        if getattr(args, "trials", 1) is not None and getattr(args, "trials", 1) < 0:
            raise UsageError("--trials must be nonnegative")
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be at least 1")
        if getattr(args, "trials", None) == 0 and args.cmd not in ("safe-z",):
            raise UsageError("--trials must be positive")
        records, summary, ok = args.func(args)
    except UsageError as e:
        print(f"sdqcsim: error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:  # --help
        return int(e.code or 0)
    out = {"type": "summary", "subcommand": args.cmd, "config": _effective(args)}
    out.update(summary)
    out["check_passed"] = bool(ok)
    lines = [_dumps({"type": "record", **r}) for r in records] + [_dumps(out)]
    text = "\n".join(lines) + "\n"
    if args.out and args.out != "-":
        path = Path(args.out)
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base and not path.is_absolute():
            path = Path(base) / path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)
    brief = {k: v for k, v in summary.items() if isinstance(v, (int, float, bool, str)) or v is None}
    print(f"{args.cmd}: " + ", ".join(f"{k}={v}" for k, v in brief.items())
          + f"; check {'passed' if ok else 'FAILED'}", file=sys.stderr)
    if args.check and not ok:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
