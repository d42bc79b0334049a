"""Study orchestration: cells, ground truth, results store.

A study expands into cells (case x algorithm x bins x seed). Every cell
is reproducible from its config and seed alone. Results go to an
append-only CSV next to a manifest of finished cells, so an interrupted
study resumes where it stopped.
"""
from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import geometry as geo
from .geometry import neutrality_cases  # noqa: F401  (re-exported)
from .metrics import diversity_report

STUDIES = ("bin_sweep", "neutrality_sweep", "pareto_distance", "autove_compare")
BIN_GRID = (25, 50, 100, 200, 400)
CASES = ("A", "B", "C", "D", "E")
PRESETS = {
    "desk": {"generations": 256, "solutions": 100},
    "full": {"generations": 1024, "solutions": 400},
}
RESULT_COLUMNS = (
    "study", "case", "algorithm", "bins", "seed",
    "sdnn_gen", "spd_gen", "pd_gen", "sdnn_phen", "spd_phen", "pd_phen",
    "fitness_median", "pareto_px_min_median", "wall_ms",
)
DIVERSITY_KEYS = RESULT_COLUMNS[5:11]
RESULTS_FILE = "results.csv"
MANIFEST_FILE = "manifest.txt"
FAILURES_FILE = "failures.txt"
CELLS_DIR = "cells"
THREADS_ENV = "POLYQD_THREADS"


@dataclass(frozen=True)
class ExperimentConfig:
    """One study.

    ``bounds_case`` is the case used by the bin sweep and the AutoVE
    comparison; ``cases`` drives the neutrality sweep and ``pareto_cases``
    the Pareto study. ``solutions`` is the set size for every study except
    the bin sweep, whose sizes come from ``bins``. With ``record_timing``
    off, ``wall_ms`` is written as 0 and rows are byte-reproducible.
    """

    study: str
    bounds_case: str = "C"
    solutions: int = 400
    generations: int = 1024
    seeds: tuple = (0, 1, 2, 3, 4)
    bins: tuple = BIN_GRID
    cases: tuple = CASES
    pareto_cases: tuple = ("B", "E")
    latent_dims: tuple = (2, 5, 10)
    epochs: int = 350
    record_timing: bool = True

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ValueError(f"unknown study {self.study!r}; expected one of {STUDIES}")
        for name in ("seeds", "bins", "cases", "pareto_cases", "latent_dims"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for case in (self.bounds_case, *self.cases, *self.pareto_cases):
            geo.get_bounds(case)
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if self.solutions < 2 or min(self.bins, default=2) < 2:
            raise ValueError("solution sets need at least two members")
        if self.generations < 2:
            raise ValueError("generations must be >= 2")
        if min(self.latent_dims, default=1) < 1 or self.epochs < 1:
            raise ValueError("latent_dims and epochs must be positive")

    @classmethod
    def preset(cls, name: str, study: str, **overrides) -> "ExperimentConfig":
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; expected one of {tuple(PRESETS)}")
        return cls(study=study, **{**PRESETS[name], **overrides})

    @property
    def replicates(self) -> int:
        return len(self.seeds)

    def eval_budget(self, solutions: int | None = None) -> int:
        """Evaluations per cell: ``solutions * (generations + 1)``."""
        return int(solutions or self.solutions) * (self.generations + 1)

    def cells(self) -> list["Cell"]:
        if self.study == "bin_sweep":
            grid = [(self.bounds_case, alg, b) for b in self.bins
                    for alg in ("ve-genetic", "ve-feature")]
        elif self.study in ("neutrality_sweep", "pareto_distance"):
            cases = self.cases if self.study == "neutrality_sweep" else self.pareto_cases
            grid = [(c, alg, self.solutions) for c in cases
                    for alg in ("ve-feature", "rls", "nsga2")]
        else:
            algs = ["ve-feature"] + [f"autove-{d}" for d in self.latent_dims]
            grid = [(self.bounds_case, alg, self.solutions) for alg in algs]
        return [Cell(self.study, c, alg, int(b), int(s)) for c, alg, b in grid for s in self.seeds]


@dataclass(frozen=True)
class Cell:
    study: str
    case: str
    algorithm: str
    bins: int
    seed: int

    @property
    def key(self) -> str:
        return f"{self.study}/{self.case}/{self.algorithm}/{self.bins}/{self.seed}"

    @property
    def slug(self) -> str:
        return self.key.replace("/", "_")


@dataclass
class RunResult:
    cell: Cell
    diversity: dict
    fitness_median: float
    pareto_errors: np.ndarray
    wall_ms: int
    n_evals: int
    genomes: np.ndarray = field(repr=False)
    fitness: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = [*self.diversity.values(), self.fitness_median]
        if not np.all(np.isfinite(values)):
            raise ValueError(f"non-finite metric in cell {self.cell.key}")

    @property
    def pareto_px_min_median(self) -> float:
        return float(np.median(self.pareto_errors))

    def row(self) -> dict[str, str]:
        c = self.cell
        row = {"study": c.study, "case": c.case, "algorithm": c.algorithm,
               "bins": str(c.bins), "seed": str(c.seed)}
        row.update({k: repr(float(self.diversity[k])) for k in DIVERSITY_KEYS})
        row["fitness_median"] = repr(float(self.fitness_median))
        row["pareto_px_min_median"] = repr(self.pareto_px_min_median)
        row["wall_ms"] = str(int(self.wall_ms))
        return row

    def solutions_csv(self) -> str:
        """Artifact: one line per solution with fitness, Pareto pixel error and genes."""
        header = ["fitness", "pareto_px"] + [f"g{k}" for k in range(geo.N_GENES)]
        lines = [",".join(header)]
        for f, px, g in zip(self.fitness, self.pareto_errors, self.genomes):
            lines.append(",".join([repr(float(f)), str(int(px))] + [repr(float(v)) for v in g]))
        return "\n".join(lines) + "\n"


def pareto_ground_truth(bounds) -> geo.Evaluation:
    """The 100 point-symmetric shapes of a 10 x 10 grid over (r, theta).

    All radial genes share one value and all angular genes another; both
    take ten equidistant values spanning the case's bounds.
    """
    b = geo.get_bounds(bounds)
    radii = np.linspace(b.radial_min, b.radial_max, 10)
    angles = np.linspace(b.angular_min, b.angular_max, 10)
    r, t = np.meshgrid(radii, angles, indexing="ij")
    genomes = np.hstack([np.repeat(r.reshape(-1, 1), geo.N_VERTICES, axis=1),
                         np.repeat(t.reshape(-1, 1), geo.N_VERTICES, axis=1)])
    return geo.evaluate(genomes, b)


def pareto_distance(solutions, truth) -> np.ndarray:
    """Per solution, the smallest pixel count differing from any truth bitmap."""
    s = np.asarray(solutions, dtype=bool).reshape(len(solutions), -1)
    t = np.asarray(truth, dtype=bool).reshape(len(truth), -1)
    if len(t) == 0:
        raise ValueError("truth set is empty")
    if s.shape[1] != t.shape[1]:
        raise ValueError("solution and truth bitmaps differ in size")
    sf, tf = s.astype(np.float64), t.astype(np.float64)
    # |a xor b| = |a| + |b| - 2 a.b
    diff = sf.sum(1)[:, None] + tf.sum(1)[None, :] - 2.0 * (sf @ tf.T)
    return np.rint(diff.min(axis=1)).astype(np.int64)


def make_estimator(cell: Cell, config: ExperimentConfig):
    from .optimizers import NSGA2, RestartedLocalSearch, VoronoiElites

    n, g = cell.bins, config.generations
    alg = cell.algorithm
    if alg in ("ve-genetic", "ve-feature"):
        return VoronoiElites(capacity=n, generations=g, descriptor=alg[3:],
                             bounds=cell.case, random_state=cell.seed)
    if alg == "rls":
        return RestartedLocalSearch(restarts=n, budget=config.eval_budget(n),
                                    bounds=cell.case, random_state=cell.seed)
    if alg == "nsga2":
        return NSGA2(population=n, generations=g, bounds=cell.case, random_state=cell.seed)
    if alg.startswith("autove-"):
        from .autoencoder import AutoVoronoiElites

        return AutoVoronoiElites(capacity=n, generations=g, latent_dim=int(alg[7:]),
                                 epochs=config.epochs, bounds=cell.case,
                                 random_state=cell.seed)
    raise ValueError(f"unknown algorithm {alg!r}")


def run_cell(cell: Cell, config: ExperimentConfig) -> RunResult:
    t0 = time.perf_counter()
    est = make_estimator(cell, config).fit()
    wall = int(round((time.perf_counter() - t0) * 1000)) if config.record_timing else 0
    truth = pareto_ground_truth(cell.case)
    return RunResult(
        cell=cell,
        diversity=diversity_report(est.genomes_, est.bitmaps_),
        fitness_median=float(np.median(est.fitness_)),
        pareto_errors=pareto_distance(est.bitmaps_, truth.bitmaps),
        wall_ms=wall,
        n_evals=int(est.n_evals_),
        genomes=est.genomes_,
        fitness=est.fitness_,
    )


def _run_cell_safe(args):
    cell, config = args
    try:
        return run_cell(cell, config)
    except Exception as exc:  # a failed cell must not stop the study
        return f"{type(exc).__name__}: {exc}"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1")
    return n


def completed_cells(out_dir) -> set[str]:
    path = Path(out_dir) / MANIFEST_FILE
    if not path.exists():
        return set()
    return {line.strip() for line in path.read_text().splitlines() if line.strip()}


@dataclass
class StudyReport:
    results: list
    skipped: list
    failures: dict

    @property
    def ok(self) -> bool:
        return not self.failures


def run_study(config: ExperimentConfig, out_dir, threads: int | None = None,
              progress=None) -> StudyReport:
    """Run every unfinished cell of ``config`` and append rows to ``out_dir``.

    Cells run in worker processes (``threads`` of them, default from
    ``POLYQD_THREADS`` or 1); results are written by this process in cell
    order, so the CSV does not depend on scheduling.
    """
    out = Path(out_dir)
    (out / CELLS_DIR).mkdir(parents=True, exist_ok=True)
    done = completed_cells(out)
    todo = [c for c in config.cells() if c.key not in done]
    skipped = [c for c in config.cells() if c.key in done]
    threads = default_threads() if threads is None else int(threads)

    results_path = out / RESULTS_FILE
    new_file = not results_path.exists() or results_path.stat().st_size == 0
    results, failures = [], {}
    jobs = [(c, config) for c in todo]
    with open(results_path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        if new_file:
            writer.writeheader()
        if threads > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                outcomes = pool.map(_run_cell_safe, jobs)
                _collect(outcomes, todo, out, writer, fh, results, failures, progress)
        else:
            _collect(map(_run_cell_safe, jobs), todo, out, writer, fh, results, failures,
                     progress)
    if failures:
        with open(out / FAILURES_FILE, "a") as fh:
            for key, msg in failures.items():
                fh.write(f"{key}\t{msg}\n")
    return StudyReport(results, skipped, failures)


def _collect(outcomes, cells, out, writer, fh, results, failures, progress):
    for cell, outcome in zip(cells, outcomes):
        if isinstance(outcome, str):
            failures[cell.key] = outcome
        else:
            (out / CELLS_DIR / f"{cell.slug}.csv").write_text(outcome.solutions_csv())
            writer.writerow(outcome.row())
            fh.flush()
            with open(out / MANIFEST_FILE, "a") as mf:
                mf.write(cell.key + "\n")
            results.append(outcome)
        if progress is not None:
            progress(cell, outcome)


def read_results(path) -> list[dict]:
    """Rows of a results CSV with numeric fields converted."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(rows[0]) != set(RESULT_COLUMNS):
        raise ValueError(f"{path} does not have the results schema")
    for row in rows:
        for k in RESULT_COLUMNS[5:]:
            row[k] = float(row[k])
        row["bins"] = int(row["bins"])
        row["seed"] = int(row["seed"])
    return rows


def read_solutions(path) -> tuple[np.ndarray, np.ndarray]:
    """(genomes, fitness) from a cell artifact or an archive CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = rows[0]
    try:
        gcols = [header.index(f"g{k}") for k in range(geo.N_GENES)]
        fcol = header.index("fitness")
    except ValueError:
        raise ValueError(f"{path} has no genome columns") from None
    data = np.array(rows[1:], dtype=float).reshape(-1, len(header))
    return data[:, gcols], data[:, fcol]


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
