"""Backward-Euler mean curvature flow and its conformalized variant.

Each step solves ``(D - tau L) X' = D X`` column-wise. Plain MCF rebuilds
both matrices from the current positions; cMCF rebuilds only the mass
matrix D and keeps the stiffness L of the input surface for good.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fem
from .mesh import (
    InvalidMeshError,
    TriangleMesh,
    _area_centroid,
    _face_areas,
    validate_closed_genus_zero,
)
from .metrics import sphericity_from_arrays
from .solver import DEFAULT_TOL, SolverError, solve_spd

_LOGGER = logging.getLogger(__name__)


class Mode(str, enum.Enum):
    MCF = "mcf"
    CMCF = "cmcf"


class MassScheme(str, enum.Enum):
    GALERKIN = "galerkin"
    LUMPED = "lumped"


class Normalization(str, enum.Enum):
    AREA_CENTER = "area-center"
    AREA = "area"
    NONE = "none"


class Termination(str, enum.Enum):
    SPHERICITY_REACHED = "sphericity_reached"
    MAX_STEPS = "max_steps"
    DEGENERATE = "degenerate"
    SOLVER_FAILED = "solver_failed"


@dataclass(frozen=True)
class FlowConfig:
    mode: Mode = Mode.CMCF
    tau: float = 0.05
    mass_scheme: MassScheme = MassScheme.GALERKIN
    max_steps: int = 200
    stop_sphericity: float = 0.999
    normalization: Normalization = Normalization.AREA_CENTER
    degeneracy_area_ratio: float = 1e-8
    snapshot_every: int = 0
    solver_tol: float = DEFAULT_TOL
    solver_method: str = "auto"
    stop_on_degeneracy: bool = True
    project_sphere: bool = False

    def __post_init__(self):
        for name, kind in (("mode", Mode), ("mass_scheme", MassScheme), ("normalization", Normalization)):
            object.__setattr__(self, name, kind(getattr(self, name)))
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0 < self.stop_sphericity <= 1:
            raise ValueError(f"stop_sphericity must lie in (0, 1], got {self.stop_sphericity}")
        if self.max_steps < 0 or self.snapshot_every < 0:
            raise ValueError("max_steps and snapshot_every must be non-negative")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "tau": self.tau,
            "mass_scheme": self.mass_scheme.value,
            "max_steps": self.max_steps,
            "stop_sphericity": self.stop_sphericity,
            "normalization": self.normalization.value,
            "degeneracy_area_ratio": self.degeneracy_area_ratio,
            "snapshot_every": self.snapshot_every,
            "solver_tol": self.solver_tol,
            "solver_method": self.solver_method,
            "stop_on_degeneracy": self.stop_on_degeneracy,
            "project_sphere": self.project_sphere,
        }


@dataclass
class StepRecord:
    step: int
    sphericity: float
    min_area_ratio: float
    residual: float
    degenerate_faces: int


@dataclass
class FlowState:
    positions: np.ndarray
    faces: np.ndarray
    L0: object
    target_area: float
    step: int = 0
    history: list = field(default_factory=list)

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh, mode=Mode.CMCF) -> FlowState:
        L0 = fem.assemble_stiffness(mesh) if Mode(mode) is Mode.CMCF else None
        return cls(
            positions=np.array(mesh.vertices, dtype=np.float64),
            faces=np.asarray(mesh.faces),
            L0=L0,
            target_area=float(_face_areas(mesh.vertices, mesh.faces).sum()),
        )

    @property
    def mesh(self) -> TriangleMesh:
        return TriangleMesh(self.positions, self.faces)


@dataclass
class DegeneracyReport:
    faces: np.ndarray
    min_ratio: float
    threshold: float

    @property
    def count(self) -> int:
        return int(len(self.faces))

    @property
    def metrics_valid(self) -> bool:
        return self.count == 0


@dataclass
class FlowResult:
    mesh: TriangleMesh
    termination: Termination
    history: list
    initial_sphericity: float
    degeneracy: DegeneracyReport
    sphere_projection: TriangleMesh | None = None
    message: str = ""

    @property
    def steps(self) -> int:
        return len(self.history)

    @property
    def final_sphericity(self) -> float:
        if self.history:
            return self.history[-1].sphericity
        return self.initial_sphericity


def _mass(V, F, scheme):
    if MassScheme(scheme) is MassScheme.LUMPED:
        return fem.lumped_mass_from_arrays(V, F)
    return fem.galerkin_mass_from_arrays(V, F)


def _implicit_step(X, F, L, tau, mass_scheme, tol, method):
    D = _mass(X, F, mass_scheme)
    A = (D - tau * L).tocsc()
    return solve_spd(A, D @ X, tol=tol, method=method)


def mcf_step(state: FlowState, tau: float, mass_scheme=MassScheme.GALERKIN, tol=DEFAULT_TOL, method="auto"):
    """One backward-Euler MCF step; both D and L come from the current positions.

    Returns the SpdSolveResult whose ``x`` holds the new positions.

    Raises
    ------
    fem.DegenerateFaceError
        A face of the current surface has zero area.
    SolverError
        The linear solve broke down.
    """
    L = fem.stiffness_from_arrays(state.positions, state.faces)
    return _implicit_step(state.positions, state.faces, L, tau, mass_scheme, tol, method)


def cmcf_step(state: FlowState, tau: float, mass_scheme=MassScheme.GALERKIN, tol=DEFAULT_TOL, method="auto"):
    """One conformalized step: fresh mass matrix, frozen initial stiffness ``state.L0``."""
    if state.L0 is None:
        raise ValueError("state has no frozen stiffness matrix")
    return _implicit_step(state.positions, state.faces, state.L0, tau, mass_scheme, tol, method)


def normalize(positions, faces, target_area, mode=Normalization.AREA_CENTER) -> np.ndarray:
    """Rescale (and optionally recenter) so the total area equals ``target_area``.

    "area-center" first moves the area-weighted centroid to the origin.

    Raises
    ------
    fem.DegenerateFaceError
        If the current total area is zero.
    """
    mode = Normalization(mode)
    X = np.array(positions, dtype=np.float64)
    if mode is Normalization.NONE:
        return X
    F = np.asarray(faces)
    area = float(_face_areas(X, F).sum())
    if not (area > 0 and np.isfinite(area)):
        raise fem.DegenerateFaceError(np.arange(len(F)))
    if mode is Normalization.AREA_CENTER:
        X -= _area_centroid(X, F)
    X *= np.sqrt(target_area / area)
    return X


def detect_degeneracy(positions, faces, ratio_threshold=1e-8) -> DegeneracyReport:
    """Faces whose area fell below ``ratio_threshold`` times the mean face area.

    Scaling by the current mean keeps the test independent of how the
    surface was normalized.
    """
    F = np.asarray(faces)
    areas = _face_areas(np.asarray(positions), F)
    mean = areas.sum() / max(len(F), 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = areas / mean if mean > 0 else np.zeros_like(areas)
    ratios = np.where(np.isfinite(ratios), ratios, 0.0)
    bad = np.flatnonzero(ratios < ratio_threshold)
    return DegeneracyReport(bad, float(ratios.min()) if len(ratios) else 0.0, ratio_threshold)


def project_to_sphere(mesh: TriangleMesh) -> TriangleMesh:
    """Center on the area centroid and push every vertex onto the unit sphere."""
    X = mesh.vertices - _area_centroid(mesh.vertices, mesh.faces)
    return mesh.with_vertices(X / np.linalg.norm(X, axis=1, keepdims=True))


def _check_input(mesh, cfg):
    report = validate_closed_genus_zero(mesh)
    if cfg.mode is Mode.CMCF:
        if not report.passed:
            raise InvalidMeshError(
                "input is not a closed genus-zero manifold:\n" + "\n".join(report.problems())
            )
    elif not report.closed_manifold:
        problems = [p for p in report.problems() if "Euler" not in p and "components" not in p]
        raise InvalidMeshError("input is not a closed manifold:\n" + "\n".join(problems))
    return report


def run_flow(mesh: TriangleMesh, cfg: FlowConfig | None = None, snapshot_dir=None) -> FlowResult:
    """Iterate step + normalize until the surface is round enough or the flow fails.

    Stops on, in order of checking: a degenerate face or zero area
    (``degenerate``), a solver breakdown or residual above tolerance
    (``solver_failed``), sphericity at least ``cfg.stop_sphericity``, or
    ``cfg.max_steps``. The state at the last completed step is returned in
    every case.

    Raises
    ------
    InvalidMeshError
        The input is refused before any step is taken.
    """
    cfg = cfg or FlowConfig()
    _check_input(mesh, cfg)
    state = FlowState.from_mesh(mesh, cfg.mode)
    F = state.faces
    s0 = sphericity_from_arrays(state.positions, F)
    if snapshot_dir is not None and cfg.snapshot_every:
        snapshot_dir = Path(snapshot_dir)
        snapshot_dir.mkdir(parents=True, exist_ok=True)
    step_fn = cmcf_step if cfg.mode is Mode.CMCF else mcf_step

    termination = Termination.MAX_STEPS
    message = ""
    if s0 >= cfg.stop_sphericity:
        termination = Termination.SPHERICITY_REACHED
        message = "input already meets the sphericity target"

    while termination is Termination.MAX_STEPS and state.step < cfg.max_steps:
        try:
            sol = step_fn(state, cfg.tau, cfg.mass_scheme, cfg.solver_tol, cfg.solver_method)
        except fem.DegenerateFaceError as e:
            termination, message = Termination.DEGENERATE, f"step {state.step + 1}: {e}"
            break
        except SolverError as e:
            termination, message = Termination.SOLVER_FAILED, f"step {state.step + 1}: {e}"
            break
        X = sol.x
        if not sol.ok or not np.all(np.isfinite(X)):
            termination = Termination.SOLVER_FAILED
            message = f"step {state.step + 1}: relative residual {sol.max_residual:.3e} exceeds {cfg.solver_tol:g}"
            break
        try:
            X = normalize(X, F, state.target_area, cfg.normalization)
        except fem.DegenerateFaceError:
            termination, message = Termination.DEGENERATE, f"step {state.step + 1}: total area collapsed to zero"
            break

        state.positions = X
        state.step += 1
        degen = detect_degeneracy(X, F, cfg.degeneracy_area_ratio)
        s = sphericity_from_arrays(X, F)
        state.history.append(StepRecord(state.step, s, degen.min_ratio, sol.max_residual, degen.count))
        _LOGGER.info("step %d: sphericity %.6f, min area ratio %.3e", state.step, s, degen.min_ratio)

        if snapshot_dir is not None and cfg.snapshot_every and state.step % cfg.snapshot_every == 0:
            from .io import save_obj

            save_obj(state.mesh, snapshot_dir / f"step_{state.step:04d}.obj")

        if degen.count and cfg.stop_on_degeneracy:
            termination = Termination.DEGENERATE
            message = f"step {state.step}: {degen.count} faces below area ratio {cfg.degeneracy_area_ratio:g}"
        elif s >= cfg.stop_sphericity:
            termination = Termination.SPHERICITY_REACHED

    final = state.mesh
    result = FlowResult(
        mesh=final,
        termination=termination,
        history=state.history,
        initial_sphericity=s0,
        degeneracy=detect_degeneracy(final.vertices, F, cfg.degeneracy_area_ratio),
        message=message,
    )
    if cfg.project_sphere and termination is Termination.SPHERICITY_REACHED:
        result.sphere_projection = project_to_sphere(final)
    return result


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "sphericity", "min_area_ratio", "residual", "degenerate_faces"])
        for r in history:
            w.writerow([r.step, repr(r.sphericity), repr(r.min_area_ratio), repr(r.residual), r.degenerate_faces])
