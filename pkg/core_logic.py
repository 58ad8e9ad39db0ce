import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

from sgc_core.analysis import epsilon_sweep, run_batch, sweep_frame, validate_solution
from sgc_core.baselines import clique_percolation, maxmax
from sgc_core.config import config
from sgc_core.connectivity import solve_with_lazy_connectivity
from sgc_core.graph import (
    GeneratorConfig,
    Graph,
    dump_edge_list,
    generate_random,
    load_edge_list,
)
from sgc_core.model import ClusterParams, ObjectiveKind, build_model, emit_lp
from sgc_core.schemas import BatchManifest, ClusteringDocument, SolutionDocument
from sgc_core.solver import SolveLimits, SolverBackend, SolveStatus, get_backend, solve
from sgc_core.utils import SoftClusteringError, ensure_dir, write_json

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def load_graph(path: PathLike) -> Graph:
    return load_edge_list(Path(path).read_bytes())


class ClusteringService:
    """Runs one command-line operation and writes its artifacts to an output directory."""

    def __init__(
        self,
        backend_name: Optional[str] = None,
        limits: Optional[SolveLimits] = None,
        executable: Optional[str] = None,
    ):
        self.backend_name = backend_name
        self.executable = executable
        self.limits = limits or SolveLimits.from_config()
        self._backend: Optional[SolverBackend] = None

    @property
    def backend(self) -> SolverBackend:
        """Resolved on first use."""
        if self._backend is None:
            self._backend = get_backend(self.backend_name, self.executable)
        return self._backend

    def generate(self, cfg: GeneratorConfig, out_dir: PathLike) -> Dict[str, Any]:
        g = generate_random(cfg)
        target = ensure_dir(out_dir) / f"{cfg.class_name}_{cfg.seed}.txt"
        target.write_text(dump_edge_list(g), encoding="utf-8")
        logger.info(f"Wrote {target}")
        return {"path": str(target), "n": g.n, "m": g.m}

    def solve(
        self, g: Graph, p: ClusterParams, out_dir: PathLike, lazy: bool = False
    ) -> Dict[str, Any]:
        directory = ensure_dir(out_dir)
        result: Dict[str, Any] = {}
        if lazy:
            (directory / "model.lp").write_text(emit_lp(build_model(g, p)), encoding="utf-8")
            lazy_result = solve_with_lazy_connectivity(g, p, self.limits, self.backend)
            solution = lazy_result.solution
            result["rounds_used"] = lazy_result.rounds_used
            result["exhausted"] = lazy_result.exhausted
        else:
            solution = solve(build_model(g, p), self.limits, self.backend, work_dir=directory)

        write_json(
            SolutionDocument.from_solution(solution, g.n, p).model_dump(mode="json"),
            directory / "solution.json",
        )
        result.update(
            {
                "status": solution.status.value,
                "objective": solution.objective,
                "mip_gap": solution.mip_gap,
                "solve_seconds": solution.solve_seconds,
            }
        )
        if solution.has_incumbent:
            report = validate_solution(g, p, solution).to_dict()
            if lazy:
                report["lazy_rounds"] = result["rounds_used"]
            write_json(report, directory / "report.json")
            result["report"] = report
        return result

    def sweep(
        self,
        g: Graph,
        p: ClusterParams,
        out_dir: PathLike,
        steps: Optional[int] = None,
        anchor_at_w1: bool = False,
    ) -> Dict[str, Any]:
        rows = epsilon_sweep(g, p, self.limits, self.backend, steps, anchor_at_w1)
        target = ensure_dir(out_dir) / "sweep.csv"
        sweep_frame(rows).to_csv(target, index=False)
        return {"path": str(target), "rows": len(rows)}

    def baseline(
        self,
        g: Graph,
        method: str,
        out_dir: PathLike,
        clique_size: int = 3,
        w_star: float = 0,
    ) -> Dict[str, Any]:
        if method == "maxmax":
            result = maxmax(g)
            document = ClusteringDocument.from_clustering(result, g.n)
        elif method == "cpm":
            result = clique_percolation(g, clique_size, w_star)
            document = ClusteringDocument.from_clustering(result, g.n, k=clique_size, w_star=w_star)
        else:
            raise SoftClusteringError(f"Unknown baseline method: {method}")
        target = write_json(document.model_dump(mode="json"), ensure_dir(out_dir) / "clustering.json")
        return {"path": str(target), "clusters": document.clusters}

    def batch(
        self,
        manifest: BatchManifest,
        p: ClusterParams,
        out_dir: PathLike,
        objectives: Optional[Sequence[ObjectiveKind]] = None,
        workers: Optional[int] = None,
    ) -> Dict[str, Any]:
        stats = run_batch(manifest.instances(), p, self.limits, self.backend, objectives, workers)
        paths = stats.write(out_dir)
        failed = int((stats.instances["status"] == "error").sum())
        if failed:
            logger.warning(f"{failed} batch instance(s) failed; see instances.csv")
        return {"paths": [str(path) for path in paths], "classes": len(stats.classes), "failed": failed}

    def validate(self, g: Graph, document: SolutionDocument, out_dir: PathLike) -> Dict[str, Any]:
        if document.n != g.n:
            raise SoftClusteringError(
                f"Solution has n={document.n} but the instance has n={g.n}"
            )
        p = document.params.to_params()
        report = validate_solution(g, p, document.to_solution()).to_dict()
        write_json(report, ensure_dir(out_dir) / "validation.json")
        return {"valid": not report["violations"], "report": report}


def load_manifest(path: PathLike) -> BatchManifest:
    return BatchManifest.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))


def load_solution_document(path: PathLike) -> SolutionDocument:
    return SolutionDocument.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))


def default_params(**overrides) -> ClusterParams:
    """ClusterParams from the configured defaults, with ``None`` overrides ignored."""
    values = {
        "k": config.defaults.k,
        "mu": config.defaults.mu,
        "delta": config.defaults.delta,
        "nu": config.defaults.nu,
        "sigma": config.defaults.sigma,
        "break_symmetry": config.defaults.break_symmetry,
    }
    values.update({key: value for key, value in overrides.items() if value is not None})
    return ClusterParams(**values)


def is_failure_status(status: str) -> bool:
    return status in (SolveStatus.INFEASIBLE.value, SolveStatus.UNKNOWN.value)
