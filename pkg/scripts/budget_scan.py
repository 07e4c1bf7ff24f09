"""Measurement budget N_U * N_M needed for 0.99 fidelity: EHT ansatze against PLS and LRLS.

    python3 scripts/budget_scan.py --n-a 4 --seeds 5
"""
import argparse
import time

from eht.ansatz import build_ansatz
from eht.baselines import RankConfig, lrls, pls
from eht.core import partial_trace
from eht.fitting import FitConfig, measurement_budget_scan
from eht.models import SpinModel, build_hamiltonian, ground_state

N_M = [10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 20_000]
EHT_GRID = [(u, m) for u in (1, 2, 5, 10, 20) for m in N_M]
TOMO_GRID = [(u, m) for u in (256, 1024, 4096, 16384, 65536) for m in (1, 10, 100, 1000)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--n-a", type=int, default=4)
    ap.add_argument("--field", type=float, default=0.88)
    ap.add_argument("--eta", type=float, default=2.5)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--target", type=float, default=0.99)
    ap.add_argument("--lrls-rank", type=int, default=0, help="also scan LRLS at this rank (0: skip)")
    args = ap.parse_args()

    model = SpinModel(args.n, field=args.field, eta=args.eta)
    rho = partial_trace(ground_state(build_hamiltonian(model)), range(args.n_a))
    base = SpinModel(args.n_a, field=args.field, couplings=model.couplings[:args.n_a, :args.n_a])
    methods = {
        "eht_parabolic": dict(family=build_ansatz("parabolic_reduced", args.n_a, base), grid=EHT_GRID),
        "eht_local": dict(family=build_ansatz("deformed_ising_local", args.n_a, base), grid=EHT_GRID),
        "pls": dict(family=None, grid=TOMO_GRID, reconstruct=pls),
    }
    if args.lrls_rank:
        methods["lrls"] = dict(family=None, grid=TOMO_GRID,
                               reconstruct=lambda d: lrls(d, RankConfig(args.lrls_rank)))
    for name, m in methods.items():
        t0 = time.time()
        scan = measurement_budget_scan(rho, m["family"], args.target, m["grid"], n_seeds=args.seeds,
                                       config=FitConfig(restarts=2), reconstruct=m.get("reconstruct"), seed=3)
        where = f"N_U={scan.minimal_point[0]} N_M={scan.minimal_point[1]}" if scan.reached else "not reached"
        print(f"{name:14s} budget {scan.minimal_budget}  ({where}, {time.time() - t0:.0f}s)")


if __name__ == "__main__":
    main()
