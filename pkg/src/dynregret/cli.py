"""Command line: ``run``, ``audit`` and ``prox-check``.

Exit status: 0 success, 1 config error, 2 audit failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from dynregret.bench import ConfigError, ExperimentConfig, emit_results, run_experiment
from dynregret.oracle import GridSpec, brute_prox
from dynregret.regret import lemma1_audit_ledger, read_ledger_csv, telescope_audit
from dynregret.regularizers import WeightedL1, prox
from dynregret.vecspace import BoxSet

EXIT_OK, EXIT_CONFIG, EXIT_AUDIT, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("dynregret")


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.repetitions is not None:
        over["repetitions"] = args.repetitions
    if args.horizon is not None:
        over["horizon"] = args.horizon
    if args.out is not None:
        over["out"] = args.out
    if over:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **over})
    out = cfg.out or "results"
    art = run_experiment(cfg)
    files = emit_results(art, out)
    for f in files:
        print(f)
    order = art.ordering()
    if "opg_best" in order and not order["opg_best"]:
        print(f"note: {order['best_baseline']} beat OPG at T={order['horizon']} (see summary.json)")
    if art.audit_failed:
        print("audit failure: see summary.json", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


def _summary_near(ledger_path: Path) -> dict | None:
    p = ledger_path.with_name("summary.json")
    if not p.is_file():
        return None
    with open(p) as fh:
        return json.load(fh)


def _cmd_audit(args) -> int:
    path = Path(args.ledger)
    led = read_ledger_csv(path)
    summ = _summary_near(path)
    mu, radius = args.mu, args.radius
    if summ is not None:
        mu = summ["derived"]["mu"] if mu is None else mu
        radius = summ["derived"]["R"] if radius is None else radius
    mu = 0.0 if mu is None else mu
    l1 = lemma1_audit_ledger(led, mu=mu)
    print(f"lemma1: {len(led) - l1.violations}/{len(led)} rounds pass, min slack {float(np.min(l1.slack)):.6g}")
    ok = l1.passed
    if radius is None:
        print("telescope: skipped (no --radius and no summary.json beside the ledger)")
    else:
        try:
            tel = telescope_audit(led, radius)
        except ValueError as exc:
            print(f"telescope: skipped ({exc})")
        else:
            print(f"telescope: {'pass' if tel.passed else 'FAIL'}, slack {float(tel.slack):.6g}")
            ok = ok and tel.passed
    return EXIT_OK if ok else EXIT_AUDIT


def prox_check(instances: int, seed: int = 0, resolution: float = 1e-4, tol: float = 1e-3):
    """Closed-form prox against the grid oracle on random instances in up to 3 dimensions."""
    rng = np.random.default_rng(seed)
    grid = GridSpec(resolution)
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, 4))
        lo = rng.uniform(-2.0, 0.5, n)
        box = BoxSet(lo, lo + rng.uniform(0.1, 2.5, n))
        r = WeightedL1(rng.uniform(0.0, 2.0), rng.uniform(0.05, 1.0, n))
        eta = float(rng.uniform(0.01, 2.0))
        x = rng.uniform(-3.0, 3.0, n)
        err = float(np.max(np.abs(prox(r, eta, x, box) - brute_prox(r, eta, x, box, grid))))
        worst = max(worst, err)
    return worst, worst <= tol


def _cmd_prox_check(args) -> int:
    worst, ok = prox_check(args.instances, args.seed, args.resolution)
    print(f"prox-check: {args.instances} instances, max coordinate error {worst:.3g} "
          f"({'pass' if ok else 'FAIL'} at 1e-3)")
    return EXIT_OK if ok else EXIT_AUDIT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dynregret", description="Dynamic-regret benchmark for online composite optimization.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--repetitions", type=int)
    r.add_argument("--horizon", type=int)
    r.set_defaults(func=_cmd_run)

    a = sub.add_parser("audit", help="re-run the per-round and telescoping audits on an exported ledger")
    a.add_argument("--ledger", required=True)
    a.add_argument("--mu", type=float, help="strong-convexity modulus (default: summary.json, else 0)")
    a.add_argument("--radius", type=float, help="box diameter R (default: summary.json)")
    a.set_defaults(func=_cmd_audit)

    c = sub.add_parser("prox-check", help="closed-form prox against the grid oracle")
    c.add_argument("--instances", type=int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--resolution", type=float, default=1e-4)
    c.set_defaults(func=_cmd_prox_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
