"""Command line interface: ``run``, ``check``, ``fit-decay``, ``sweep``, ``resume``.

Exit codes: 0 when every requested assertion passes, 1 when one fails,
2 for usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

from .checks import INJECTIONS, CHECKS, check_suite
from .config import PRESETS, RunConfig, parse_config_text
from .io import read_csv, sidecar_text
from .runner import JSON_NAME, fit_decay, resume, run

ENV_OUTPUT = "STRATIFLOW_OUTPUT_DIR"
DEFAULT_OUTPUT = "runs"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration from flags


def _add_config_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("run configuration (override --preset and --config)")
    g.add_argument("--preset", choices=sorted(PRESETS), default=argparse.SUPPRESS)
    g.add_argument("--config", metavar="FILE", default=argparse.SUPPRESS,
                   help="key = value file; may name a preset")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        kind = {"int": int, "float": float}.get(str(f.type), str)
        kw = dict(type=kind, default=argparse.SUPPRESS, metavar=f.name.upper())
        if f.name == "mode":
            kw["choices"] = ("nonlinear", "linearized", "quasilinear")
            kw.pop("metavar")
        g.add_argument(flag, dest=f.name, **kw)


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = {}
    name = getattr(ns, "preset", None)
    file_values = {}
    if getattr(ns, "config", None):
        file_values = parse_config_text(Path(ns.config).read_text())
        name = name or file_values.pop("preset", None)
        file_values.pop("preset", None)
    if name:
        values.update(PRESETS[name])
    values.update(file_values)
    for f in fields(RunConfig):
        if hasattr(ns, f.name):
            values[f.name] = getattr(ns, f.name)
    return RunConfig.from_dict(values)


def output_root(ns) -> Path:
    return Path(os.environ.get(ENV_OUTPUT) or DEFAULT_OUTPUT)


def run_dir(ns, cfg: RunConfig) -> Path:
    if getattr(ns, "out_dir", None):
        return Path(ns.out_dir)
    return output_root(ns) / f"{cfg.mode}_m{cfg.m}_seed{cfg.seed}"


# ---------------------------------------------------------------------------
# assertions


def select_assertions(spec: str, ledger: dict) -> list:
    spec = (spec or "none").strip()
    if spec == "none":
        return []
    if spec == "all":
        return [k for k, v in ledger.items() if v.get("applicable", True) and v.get("pass") is not None]
    names = [s.strip() for s in spec.split(",") if s.strip()]
    unknown = [n for n in names if n not in ledger]
    if unknown:
        raise UsageError(f"unknown assertion(s) {unknown}; available: {sorted(ledger)}")
    return names


def evaluate(spec: str, ledger: dict):
    names = select_assertions(spec, ledger)
    failed = [n for n in names if ledger[n].get("pass") is not True]
    return names, failed


def _print_assertions(names, failed, ledger, out):
    for n in names:
        e = ledger[n]
        status = "PASS" if n not in failed else "FAIL"
        detail = e.get("error") or f"value={e.get('value')!r} threshold={e.get('threshold')!r}"
        print(f"{status} {n}: {detail}", file=out)


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(ns, out) -> int:
    cfg = config_from_args(ns)
    d = run_dir(ns, cfg)
    res = run(cfg, d)
    print(f"wrote {d}", file=out)
    if res.halted:
        print(f"halted: {res.halted}", file=out)
    names, failed = evaluate(ns.assertions, res.ledger)
    _print_assertions(names, failed, res.ledger, out)
    return 1 if failed else 0


def cmd_resume(ns, out) -> int:
    res = resume(ns.checkpoint, ns.out_dir)
    print(f"wrote {res.out_dir}", file=out)
    if res.halted:
        print(f"halted: {res.halted}", file=out)
    names, failed = evaluate(ns.assertions, res.ledger)
    _print_assertions(names, failed, res.ledger, out)
    return 1 if failed else 0


def cmd_check(ns, out) -> int:
    cfg = config_from_args(ns)
    only = ns.only.split(",") if ns.only else None
    if only:
        bad = [n for n in only if n not in CHECKS]
        if bad:
            raise UsageError(f"unknown check(s) {bad}; available: {sorted(CHECKS)}")
    ledger = check_suite(cfg, inject=ns.inject, only=only)
    d = run_dir(ns, cfg) if (getattr(ns, "out_dir", None) or os.environ.get(ENV_OUTPUT)) else None
    if d is not None:
        d.mkdir(parents=True, exist_ok=True)
        (d / "check.json").write_text(sidecar_text({"cfg": cfg.to_dict(), "ledger": ledger}))
    for name, e in ledger.items():
        status = "PASS" if e["pass"] else "FAIL"
        detail = e.get("error") or f"value={e['value']:.3e} threshold={e['threshold']:.1e}"
        print(f"{status} {name}: {detail}", file=out)
    names, failed = evaluate(ns.assertions, ledger)
    return 1 if failed else 0


def cmd_fit_decay(ns, out) -> int:
    path = Path(ns.csv)
    _, rows = read_csv(path)
    gamma, eps = ns.gamma, ns.epsilon
    side = path.parent / JSON_NAME
    if side.exists() and (gamma is None or eps is None):
        cfg = json.loads(side.read_text())["cfg"]
        gamma = cfg["gamma"] if gamma is None else gamma
        eps = cfg["epsilon"] if eps is None else eps
    gamma = 5.0 if gamma is None else gamma
    eps = 1.0 if not eps else eps
    t = [r["t"] for r in rows]
    v = [r[ns.column] for r in rows]
    envelope, slope = fit_decay(t, v, gamma, eps)
    result = {"column": ns.column, "gamma": gamma, "epsilon": eps, "envelope_constant": envelope,
              "fitted_exponent": slope, "target_exponent": -gamma / 4.0}
    print(json.dumps(result, sort_keys=True), file=out)
    ok = True
    if ns.max_envelope is not None and not envelope <= ns.max_envelope:
        print(f"FAIL envelope {envelope:.4g} > {ns.max_envelope:.4g}", file=out)
        ok = False
    if ns.max_exponent is not None and not slope <= ns.max_exponent:
        print(f"FAIL exponent {slope:.4g} > {ns.max_exponent:.4g}", file=out)
        ok = False
    return 0 if ok else 1


def parse_seeds(text: str) -> list:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise UsageError("no seeds given")
    return seeds


def _sweep_one(args):
    cfg_dict, seed, directory = args
    cfg = RunConfig.from_dict({**cfg_dict, "seed": seed})
    res = run(cfg, directory)
    return seed, res.ledger, res.halted


def cmd_sweep(ns, out) -> int:
    cfg = config_from_args(ns)
    seeds = parse_seeds(ns.seeds)
    root = Path(ns.out_dir) if ns.out_dir else output_root(ns) / f"sweep_{cfg.mode}_m{cfg.m}"
    jobs = [(cfg.to_dict(), s, str(root / f"seed_{s:04d}")) for s in seeds]
    if ns.workers > 1:
        with ProcessPoolExecutor(max_workers=ns.workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    summary = {"cfg": cfg.to_dict(), "seeds": seeds, "runs": {}}
    any_failed = False
    for seed, ledger, halted in results:
        names, failed = evaluate(ns.assertions, ledger)
        any_failed |= bool(failed)
        summary["runs"][str(seed)] = {"halted": halted, "failed": failed,
                                      "ledger": {k: v["pass"] for k, v in ledger.items()}}
        print(f"{'FAIL' if failed else 'PASS'} seed {seed}" + (f": {failed}" if failed else ""), file=out)
    root.mkdir(parents=True, exist_ok=True)
    (root / "summary.json").write_text(sidecar_text(summary))
    print(f"wrote {root / 'summary.json'}", file=out)
    return 1 if any_failed else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stratiflow", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def with_out(p, assert_default):
        p.add_argument("--out-dir", default=None,
                       help=f"output directory (default: ${ENV_OUTPUT} or ./{DEFAULT_OUTPUT})")
        p.add_argument("--assert", dest="assertions", default=assert_default,
                       help="'none', 'all' or comma-separated ledger names")

    p = sub.add_parser("run", help="integrate one trajectory")
    _add_config_flags(p)
    with_out(p, "completed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue a run from a checkpoint")
    p.add_argument("checkpoint")
    with_out(p, "completed")
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("check", help="run the invariant suite")
    _add_config_flags(p)
    with_out(p, "all")
    p.add_argument("--inject", choices=INJECTIONS, default=None, help="corrupt the state first")
    p.add_argument("--only", default=None, help="comma-separated subset of checks")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fit-decay", help="envelope constant and tail exponent of a CSV column")
    p.add_argument("csv")
    p.add_argument("--column", default="u_H4")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-envelope", type=float, default=None)
    p.add_argument("--max-exponent", type=float, default=None)
    p.set_defaults(func=cmd_fit_decay)

    p = sub.add_parser("sweep", help="independent runs over a list of seeds")
    _add_config_flags(p)
    with_out(p, "completed")
    p.add_argument("--seeds", default="0-3", help="e.g. '0-19' or '1,5,9'")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        return ns.func(ns, out)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
