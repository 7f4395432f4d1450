"""Command-line entry point: ``ppclab <subcommand> --config cfg.json``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .channel import concentration_constants, from_config
from .harness import (
    ExperimentConfig,
    build_ensemble,
    emit_results,
    run_error_sim,
    run_mindist_study,
    run_rate_sweep,
    seed_from_env,
    with_blocklength,
    write_csv,
)
from .info import (
    LeakageReport,
    azuma_bound,
    exact_leakage,
    p_a_from_samples,
    sample_info_density,
)
from .polar import build_design, leakage_upper_bound

DEFAULT_CHANNEL = {"kind": "bec", "param": 0.5}


def _load_config(arg: str | None) -> dict:
    if arg is None:
        return {}
    path = Path(arg)
    if path.exists():
        return json.loads(path.read_text())
    return json.loads(arg)


def _seed(args, cfg: dict, key: str = "master_seed") -> int:
    if args.seed is not None:
        return int(args.seed)
    return seed_from_env(cfg.get(key, cfg.get("seed", 0)))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_design(args, cfg):
    ch = from_config(cfg.get("channel", DEFAULT_CHANNEL))
    rng = np.random.default_rng(_seed(args, cfg))
    design = build_design(cfg, ch, rng)
    path = _out_dir(args) / "design.json"
    path.write_text(design.to_json())
    print(f"n={design.n} |F|={len(design.frozen)} |M|={len(design.class_M)} "
          f"|H|={len(design.class_H)} threshold={design.threshold:.6g} "
          f"leakage_bound={leakage_upper_bound(design):.6g} -> {path}")


def _penalty_ensembles(cfg, ch):
    if "ensembles" in cfg:
        return [build_ensemble(e, ch) for e in cfg["ensembles"]]
    family = cfg.get("family", {"h": {"kind": "polar", "beta": 0.25}})
    return [build_ensemble(with_blocklength(family, n), ch) for n in cfg.get("blocklengths", [2, 4, 8])]


def cmd_penalty(args, cfg):
    ch = from_config(cfg.get("channel", DEFAULT_CHANNEL))
    reports = []
    for ens in _penalty_ensembles(cfg, ch):
        leak = exact_leakage(ens)
        rep = LeakageReport(ens.n, ens.r, ens.kind, leak, leak / ens.n)
        design = ens.meta.get("design")
        if design is not None:
            rep.extra["leakage_upper_bound"] = leakage_upper_bound(design)
        reports.append(rep)
        print(f"n={ens.n:4d} r={ens.r:3d} {ens.kind:10s} I(S;Y)={leak:.9f} penalty={leak / ens.n:.9f}")
    out = _out_dir(args)
    write_csv([r.to_row() for r in reports], out / "penalty.csv")
    (out / "penalty.json").write_text(json.dumps([json.loads(r.to_json()) for r in reports], indent=2))


def _experiment(args, cfg) -> ExperimentConfig:
    cfg = dict(cfg)
    cfg["master_seed"] = _seed(args, cfg)
    if args.workers is not None:
        cfg["parallelism"] = args.workers
    return ExperimentConfig.from_dict(cfg)


def cmd_simulate(args, cfg):
    exp = _experiment(args, cfg)
    res = run_error_sim(exp)
    jpath, cpath = emit_results(res, _out_dir(args))
    print(f"n={res.n} M={res.codebook_size} error_rate={res.error_rate:.6g} "
          f"[{res.ci_low:.4g}, {res.ci_high:.4g}] -> {cpath}")


def cmd_sweep(args, cfg):
    base = _experiment(args, cfg.get("base", {}))
    rows = run_rate_sweep(base, cfg.get("rates", []), cfg.get("blocklengths", []))
    path = write_csv(rows, _out_dir(args) / "sweep.csv")
    for row in rows:
        print(f"n={row['n']:4d} R={row['rate']:.4g} error_rate={row['error_rate']:.6g}")
    print(f"-> {path}")


def cmd_mindist(args, cfg):
    ch = from_config(cfg["channel"]) if "channel" in cfg else None
    rng = np.random.default_rng(_seed(args, cfg))
    res = run_mindist_study(int(cfg.get("ell", 4)), float(cfg.get("rate", 0.25)),
                            int(cfg.get("samples", 100)), rng, ch, float(cfg.get("beta", 0.25)))
    out = _out_dir(args)
    (out / "mindist.json").write_text(json.dumps(res, indent=2))
    row = {k: v for k, v in res.items() if k != "ppc_distances"}
    write_csv([row], out / "mindist.csv")
    print(f"polar d_min={res['polar_min_distance']}  PPC mean={res['ppc_mean']:.4g} "
          f"min={res['ppc_min']} max={res['ppc_max']}")


def cmd_bound_check(args, cfg):
    ch = from_config(cfg.get("channel", DEFAULT_CHANNEL))
    ens = build_ensemble(cfg.get("ensemble", {"h": {"kind": "polar", "ell": 3}}), ch)
    d = concentration_constants(ch).d
    trials = int(cfg.get("trials", 100000))
    samples = sample_info_density(ens, trials, np.random.default_rng(_seed(args, cfg)))
    leak = exact_leakage(ens)
    rows = []
    for eps in cfg.get("eps", [0.05, 0.1, 0.2]):
        gamma = leak / ens.n + eps
        est = p_a_from_samples(samples, ens.n, gamma)
        bound = azuma_bound(ens.n, eps, d)
        ok = est.p <= bound + 3 * est.half_width
        rep = LeakageReport(ens.n, ens.r, ens.kind, leak, leak / ens.n, gamma,
                            est.p, est.half_width, bound)
        rows.append(rep.to_row())
        print(f"eps={eps:<5g} P_A={est.p:.5f}±{est.half_width:.5f} bound={bound:.5f} "
              f"{'ok' if ok else 'VIOLATED'}")
    write_csv(rows, _out_dir(args) / "bound_check.csv")


COMMANDS = {
    "design": cmd_design,
    "penalty": cmd_penalty,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "mindist": cmd_mindist,
    "bound-check": cmd_bound_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file or inline JSON")
        p.add_argument("--seed", type=int, help="master seed (overrides PPCLAB_SEED)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _load_config(args.config)
    COMMANDS[args.command](args, cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
