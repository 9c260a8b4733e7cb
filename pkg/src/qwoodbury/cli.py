"""Command-line entry point (``qwoodbury`` or ``python -m qwoodbury``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import estimator as est
from . import experiment
from . import simulator as sim
from . import solver


def _load_json(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _cmd_solve(args) -> int:
    problem = solver.WoodburyProblem.from_dict(_load_json(args.problem))
    noise = sim.NoiseModel.from_dict(_load_json(args.noise)) if args.noise else sim.NOISELESS
    mode = args.mode
    mitigation = est.MitigationConfig.from_noise(experiment._mitigation_name(args.mitigation), noise)
    cfg = solver.EstimationConfig(
        mode=mode,
        shots=args.shots,
        noise=noise if mode == "sampled" else sim.NOISELESS,
        mitigation=mitigation,
        seed=args.seed,
        epsilon=args.epsilon,
    )
    report = solver.solve(problem, cfg)
    if args.out:
        est.write_estimates_csv(args.out, report.per_inner_product)
    out = {
        "overlap": [report.overlap.real, report.overlap.imag],
        "std_error": report.std_error,
        "capacitance_condition": report.capacitance_condition,
        "fold_level_values": [[complex(v).real, complex(v).imag] for v in report.fold_level_values],
        "inner_products": len(report.per_inner_product),
    }
    if report.gamma is not None:
        out["gamma"] = [report.gamma.real, report.gamma.imag]
    print(json.dumps(out, indent=2))
    return 0


def _cmd_figure1(args) -> int:
    cfg = experiment.ExperimentConfig.from_dict(_load_json(args.config))
    plot = args.plot_data or str(Path(args.out).with_suffix(".series.json"))
    rows = experiment.run_figure1(cfg, out=args.out, plot_data=plot)
    for r in rows:
        print(f"log2_n={r.log2_n:2d} {r.mitigation:8s} estimate={r.estimate:.6f} "
              f"rel_err={r.relative_error:.3e}")
    return 0


def _cmd_verify(args) -> int:
    report = experiment.verify_conjecture(args.dim_max, args.trials, args.seed)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_oracle(args) -> int:
    report = experiment.oracle_check(args.trials, args.max_qubits, args.max_rank, args.seed)
    print(json.dumps(report.to_dict(), indent=2))
    return 0 if report.max_delta <= 1e-9 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwoodbury", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="estimate <z|x> for a problem file")
    p.add_argument("--problem", required=True)
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--epsilon", type=float, default=None,
                   help="plan per-overlap shots for this precision (rank 1 only)")
    p.add_argument("--mitigation", choices=("none", "mem", "mem+zne"), default="none")
    p.add_argument("--noise", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV of per-inner-product estimates")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("figure1", help="uniform-instance size sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot-data", default=None)
    p.set_defaults(func=_cmd_figure1)

    p = sub.add_parser("verify-conjecture", help="closed-form conditioning vs SVD")
    p.add_argument("--dim-max", type=int, default=1024)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("oracle-check", help="exact solvers vs dense solves")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--max-qubits", type=int, default=6)
    p.add_argument("--max-rank", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
