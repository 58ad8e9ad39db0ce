"""
Command-line entry point: ``python cli.py <subcommand> [options]``.

Exit codes: 0 success, 1 error, 2 infeasible / no solution or validation
failures, 64 usage or parameter errors.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from core_logic import (
    ClusteringService,
    default_params,
    is_failure_status,
    load_graph,
    load_manifest,
    load_solution_document,
)
from sgc_core.config import config
from sgc_core.graph import GeneratorConfig, Graph, generate_random, transform_unit_weights
from sgc_core.model import ClusterParams, ObjectiveKind
from sgc_core.solver import SolveLimits
from sgc_core.utils import ParameterError, SoftClusteringError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_SOLUTION = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- Argument groups ---
def _add_graph_args(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("instance")
    group.add_argument("--input", help="edge-list file ('i j [w]' per line)")
    group.add_argument("--n", type=int, help="generate a random instance with n vertices")
    group.add_argument("--density", type=float, default=0.15)
    group.add_argument("--max-weight", type=int, default=50)
    group.add_argument("--seed", type=int, default=0)
    group.add_argument(
        "--transform",
        action="store_true",
        help="reweight edges as 1 + common neighbours (for unweighted inputs)",
    )


def _add_cluster_args(parser: argparse.ArgumentParser, objectives: List[str]):
    group = parser.add_argument_group("clustering")
    group.add_argument("--k", type=int, help=f"number of clusters (default {config.defaults.k})")
    group.add_argument("--mu", type=float, help="minimum membership proportion")
    group.add_argument("--delta", type=float, help="balance tolerance")
    group.add_argument("--nu", type=float, help="maximum pairwise overlap fraction")
    group.add_argument("--sigma", type=float, help="minimum fraction of vertices clustered")
    group.add_argument("--objective", choices=objectives, default=ObjectiveKind.MIN_CUT.value)
    group.add_argument("--assoc-lb", type=float, help="lower bound on total association")
    group.add_argument("--time-constraints", action="store_true", help="add arrival-time constraints")
    group.add_argument(
        "--min-size",
        choices=["auto", "on", "off"],
        default="auto",
        help="minimum-size row; auto = on for mincut, off for maxassoc",
    )
    group.add_argument(
        "--no-symmetry-breaking",
        action="store_true",
        help="leave out the rows that order clusters by size",
    )


def _add_solver_args(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("solver")
    group.add_argument("--backend", default=None, help=f"cbc or highs (default {config.solver.backend})")
    group.add_argument("--solver-path", default=None, help="backend executable")
    group.add_argument("--time-limit", type=float, default=None)
    group.add_argument("--threads", type=int, default=None)
    group.add_argument("--mip-gap", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sgc", description="Soft graph clustering via mixed-integer programming")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="build, solve and validate one instance")
    _add_graph_args(solve)
    _add_cluster_args(solve, ["mincut", "maxassoc"])
    _add_solver_args(solve)
    solve.add_argument("--lazy-connectivity", action="store_true")
    solve.add_argument("--out", default="out")

    generate = sub.add_parser("generate", help="write a random instance")
    generate.add_argument("--n", type=int, required=True)
    generate.add_argument("--density", type=float, required=True)
    generate.add_argument("--max-weight", type=int, required=True)
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--out", default="out")

    sweep = sub.add_parser("sweep", help="epsilon-constraint sweep between min-cut and max-association")
    _add_graph_args(sweep)
    _add_cluster_args(sweep, ["mincut", "maxassoc"])
    _add_solver_args(sweep)
    sweep.add_argument("--steps", type=int, default=None)
    sweep.add_argument("--anchor-at-w1", action="store_true", help="offset every bound by w1")
    sweep.add_argument("--out", default="out")

    baseline = sub.add_parser("baseline", help="MaxMax or k-clique percolation")
    baseline.add_argument("method", choices=["maxmax", "cpm"])
    _add_graph_args(baseline)
    baseline.add_argument("--k", type=int, default=3, help="clique size for cpm")
    baseline.add_argument("--wstar", type=float, default=0, help="edge weight threshold for cpm")
    baseline.add_argument("--out", default="out")

    batch = sub.add_parser("batch", help="run a manifest of instance classes")
    batch.add_argument("--manifest", required=True, help="JSON manifest of instance classes")
    _add_cluster_args(batch, ["mincut", "maxassoc", "both"])
    _add_solver_args(batch)
    batch.add_argument("--workers", type=int, default=None)
    batch.add_argument("--out", default="out")

    validate = sub.add_parser("validate", help="re-check a stored solution against an instance")
    _add_graph_args(validate)
    validate.add_argument("--solution", required=True, help="solution.json from a solve run")
    validate.add_argument("--out", default="out")
    return parser


# --- Argument conversion ---
def _graph(args) -> Graph:
    if (args.input is None) == (args.n is None):
        raise UsageError("give exactly one of --input or --n")
    if args.input is not None:
        g = load_graph(args.input)
    else:
        g = generate_random(GeneratorConfig(args.n, args.density, args.max_weight, args.seed))
    return transform_unit_weights(g) if args.transform else g


def _params(args, n: Optional[int] = None, objective: Optional[str] = None) -> ClusterParams:
    min_size = {"auto": None, "on": True, "off": False}[args.min_size]
    p = default_params(
        k=args.k,
        mu=args.mu,
        delta=args.delta,
        nu=args.nu,
        sigma=args.sigma,
        objective=ObjectiveKind(objective or args.objective),
        assoc_lower_bound=args.assoc_lb,
        enable_time_constraints=args.time_constraints,
        enable_min_size=min_size,
        break_symmetry=False if args.no_symmetry_breaking else None,
    )
    p.validate(n)
    return p


def _service(args) -> ClusteringService:
    try:
        limits = SolveLimits(
            time_limit=args.time_limit if args.time_limit is not None else config.solver.time_limit,
            mip_gap_target=args.mip_gap if args.mip_gap is not None else config.solver.mip_gap,
            threads=args.threads if args.threads is not None else config.solver.threads,
        )
    except ValueError as e:
        raise UsageError(str(e)) from e
    return ClusteringService(args.backend, limits, args.solver_path)


# --- Subcommands ---
def cmd_solve(args) -> int:
    g = _graph(args)
    p = _params(args, g.n)
    result = _service(args).solve(g, p, args.out, lazy=args.lazy_connectivity)
    _print(result)
    return EXIT_NO_SOLUTION if is_failure_status(result["status"]) else EXIT_OK


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(args.n, args.density, args.max_weight, args.seed)
    result = ClusteringService().generate(cfg, args.out)
    _print(result)
    return EXIT_OK


def cmd_sweep(args) -> int:
    g = _graph(args)
    p = _params(args, g.n)
    result = _service(args).sweep(g, p, args.out, args.steps, args.anchor_at_w1)
    _print(result)
    return EXIT_OK


def cmd_baseline(args) -> int:
    g = _graph(args)
    result = ClusteringService().baseline(
        g, args.method, args.out, args.k, args.wstar
    )
    _print(result)
    return EXIT_OK


def cmd_batch(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.objective == "both":
        objectives = [ObjectiveKind.MIN_CUT, ObjectiveKind.MAX_ASSOCIATION]
        p = _params(args, objective=ObjectiveKind.MIN_CUT.value)
    else:
        objectives = [ObjectiveKind(args.objective)]
        p = _params(args)
    result = _service(args).batch(manifest, p, args.out, objectives, args.workers)
    _print(result)
    return EXIT_OK


def cmd_validate(args) -> int:
    g = _graph(args)
    document = load_solution_document(args.solution)
    result = ClusteringService().validate(g, document, args.out)
    _print(result)
    return EXIT_OK if result["valid"] else EXIT_NO_SOLUTION


COMMANDS = {
    "solve": cmd_solve,
    "generate": cmd_generate,
    "sweep": cmd_sweep,
    "baseline": cmd_baseline,
    "batch": cmd_batch,
    "validate": cmd_validate,
}


def _print(result: dict):
    print(json.dumps(result, indent=2, sort_keys=True, default=str))


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        logging.getLogger().setLevel(args.log_level.upper())
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParameterError) as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SoftClusteringError, ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=config.logging.include_traceback)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
