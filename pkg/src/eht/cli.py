"""Command-line driver: simulate, measure, fit, verify, baseline, scan, profile."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .baselines import RankConfig, lrls, pls
from .cft import WeightProfile, profile_table
from .core import entanglement_spectrum, uhlmann_fidelity
from .fitting import fit, fit_with_errors, fitted_density
from .measurements import estimate_fmax_jackknife, sample_dataset

WORKERS_ENV = "EHT_WORKERS"


class CliError(Exception):
    pass


def _config(args) -> io.ExperimentConfig:
    d = json.loads(Path(args.config).read_text()) if args.config else {}
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    if getattr(args, "ansatz", None):
        d.setdefault("ansatz", {})["kind"] = args.ansatz
    if getattr(args, "corrections", None) is not None:
        d.setdefault("ansatz", {})["corrections"] = [c for c in args.corrections.split(",") if c]
    if getattr(args, "n_u", None):
        d.setdefault("budget", {})["n_u"] = args.n_u
    if getattr(args, "n_m", None):
        d.setdefault("budget", {})["n_m"] = args.n_m
    if getattr(args, "time", None) is not None:
        d.setdefault("state", {})["t"] = args.time
    return io.ExperimentConfig.from_dict(d)


def _stamp(cfg: io.ExperimentConfig) -> dict:
    return {"config_hash": cfg.config_hash(), "seed": cfg.seed, "config": cfg.to_dict()}


def cmd_simulate(args):
    cfg = _config(args)
    rho = cfg.reduced_state()
    spec = entanglement_spectrum(rho)
    out = dict(_stamp(cfg), rho=io.density_to_dict(rho), sites=sorted(cfg.subsystem),
               xis=spec.xis.tolist(), schmidt_rank=spec.schmidt_rank, entropy_bits=spec.entropy_bits)
    io.write_json(out, args.out)


def _split_paths(path: str) -> tuple[Path, Path]:
    p = Path(path)
    return p.with_name(p.stem + ".fit" + p.suffix), p.with_name(p.stem + ".verify" + p.suffix)


def cmd_measure(args):
    cfg = _config(args)
    rho = cfg.reduced_state()
    b = cfg.budget
    data = sample_dataset(rho, b.n_u, b.n_m, cfg.seed, b.ensemble, sites=tuple(sorted(cfg.subsystem)))
    n_fit = args.split if args.split is not None else b.n_fit
    if n_fit:
        fit_part, verify_part = data.split(n_fit)
        fit_path, verify_path = _split_paths(args.out)
        io.write_dataset(fit_part, fit_path)
        io.write_dataset(verify_part, verify_path)
        print(f"wrote {fit_path} ({len(fit_part)} settings) and {verify_path} ({len(verify_part)} settings)")
    else:
        io.write_dataset(data, args.out)


def cmd_fit(args):
    cfg = _config(args)
    data = io.read_dataset(args.data)
    if len(data) == 0:
        raise CliError(f"{args.data}: dataset has no records")
    family = cfg.family()
    fit_cfg = cfg.fit_config()
    result = fit_with_errors(data, family, fit_cfg) if args.jackknife else fit(data, family, fit_cfg)
    out = dict(_stamp(cfg), result=io.fit_result_to_dict(result),
               ansatz=io.family_spec(family, cfg.base_model()), dataset=str(args.data),
               record_digests=io.dataset_digests(data))
    io.write_json(out, args.out)


def _load_fit(path):
    doc = json.loads(Path(path).read_text())
    family = io.family_from_spec(doc["ansatz"])
    r = doc["result"]
    from .ansatz import ParamVector, density_matrix_from_params
    rho = density_matrix_from_params(family, ParamVector(r["g"], r["p"]))
    return doc, family, rho


def cmd_verify(args):
    doc, family, rho = _load_fit(args.result)
    data = io.read_dataset(args.data)
    overlap = set(doc["record_digests"]) & set(io.dataset_digests(data))
    if overlap and not args.allow_overlap:
        raise CliError(f"{len(overlap)} verification records were also used in the fit; "
                       "pass --allow-overlap to proceed anyway")
    fmax, err = estimate_fmax_jackknife(data, rho, exact_model_purity=not args.estimate_model_purity)
    out = {"config_hash": doc["config_hash"], "seed": doc["seed"], "fmax": fmax, "fmax_jackknife_error": err,
           "n_settings": len(data), "overlapping_records": len(overlap), "dataset": str(args.data)}
    io.write_json(out, args.out)
    print(f"F_max = {fmax:.4f} +- {err:.4f}")


def _reconstruct(method, data, cfg, rank):
    if method == "pls":
        return pls(data)
    if method == "lrls":
        return lrls(data, RankConfig(rank))
    family = cfg.family()
    return fitted_density(family, fit(data, family, cfg.fit_config()))


def cmd_baseline(args):
    cfg = _config(args)
    data = io.read_dataset(args.data)
    if len(data) == 0:
        raise CliError(f"{args.data}: dataset has no records")
    rec = _reconstruct(args.method, data, cfg, args.rank)
    f = uhlmann_fidelity(cfg.reduced_state(), rec)
    out = dict(_stamp(cfg), method=args.method, fidelity=f, reconstruction=io.density_to_dict(rec))
    io.write_json(out, args.out)
    print(f"{args.method}: fidelity {f:.4f}")


def _scan_point(job):
    cfg_dict, method, rank, n_u, n_m, seed_index = job
    cfg = io.ExperimentConfig.from_dict(cfg_dict)
    rho = cfg.reduced_state()
    ss = np.random.SeedSequence([cfg.seed, n_u, n_m, seed_index])
    data = sample_dataset(rho, n_u, n_m, ss, cfg.budget.ensemble)
    return {"n_u": n_u, "n_m": n_m, "seed": seed_index, "budget": n_u * n_m,
            "fidelity": uhlmann_fidelity(rho, _reconstruct(method, data, cfg, rank))}


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def cmd_scan(args):
    cfg = _config(args)
    grid = [(nu, nm) for nu in _int_list(args.n_u_grid) for nm in _int_list(args.n_m_grid)]
    jobs = [(cfg.to_dict(), args.method, args.rank, nu, nm, s) for nu, nm in grid for s in range(args.seeds)]
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_scan_point, jobs))
    else:
        rows = [_scan_point(j) for j in jobs]
    with open(args.out, "w", newline="") as fh:
        fh.write(f"# config_hash={cfg.config_hash()} seed={cfg.seed} method={args.method}\n")
        writer = csv.DictWriter(fh, fieldnames=["n_u", "n_m", "seed", "budget", "fidelity"])
        writer.writeheader()
        for r in rows:
            writer.writerow(dict(r, fidelity=format(r["fidelity"], ".12g")))


def cmd_profile(args):
    profile = WeightProfile(args.kind, args.l, args.beta0)
    table = profile_table(profile, args.points)
    with open(args.out, "w") as fh:
        fh.write(f"# profile={args.kind} l={args.l} beta0={args.beta0}\n")
        fh.write("x,beta\n")
        for x, b in table:
            fh.write(f"{x:.12g},{b:.12g}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eht", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON experiment configuration")
            p.add_argument("--seed", type=int)
        p.add_argument("--out", required=True)
        return p

    p = common(sub.add_parser("simulate", help="exact reduced state and spectrum"))
    p.add_argument("--time", type=float)
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("measure", help="sample a randomized-measurement dataset"))
    p.add_argument("--n-u", type=int)
    p.add_argument("--n-m", type=int)
    p.add_argument("--time", type=float)
    p.add_argument("--split", type=int, help="write the first N settings and the rest to separate files")
    p.set_defaults(func=cmd_measure)

    p = common(sub.add_parser("fit", help="fit an entanglement-Hamiltonian ansatz"))
    p.add_argument("--data", required=True)
    p.add_argument("--ansatz")
    p.add_argument("--corrections", help="comma-separated subset of K1,K2,K3,K4")
    p.add_argument("--jackknife", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = common(sub.add_parser("verify", help="F_max of a fit against held-out data"), config=False)
    p.add_argument("--result", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--allow-overlap", action="store_true")
    p.add_argument("--estimate-model-purity", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser("baseline", help="reconstruct with eht, pls or lrls"))
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=("eht", "pls", "lrls"), default="pls")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--time", type=float)
    p.set_defaults(func=cmd_baseline)

    p = common(sub.add_parser("scan", help="fidelity over a (N_U, N_M) grid"))
    p.add_argument("--method", choices=("eht", "pls", "lrls"), default="eht")
    p.add_argument("--ansatz")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--n-u-grid", default="1,4,16")
    p.add_argument("--n-m-grid", default="100,1000")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--time", type=float)
    p.set_defaults(func=cmd_scan)

    p = common(sub.add_parser("profile", help="tabulate a BW/CFT weight profile"), config=False)
    p.add_argument("--kind", required=True, choices=("bw_halfline", "parabolic", "short_range", "thermal"))
    p.add_argument("--l", type=float, required=True)
    p.add_argument("--beta0", type=float)
    p.add_argument("--points", type=int, default=101)
    p.set_defaults(func=cmd_profile)
    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"eht {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
