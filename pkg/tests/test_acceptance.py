"""Exit criteria. Each test records one PASS/FAIL line, printed in the session summary."""

import math
import time

import numpy as np
import pytest

from cmcf import shapes
from cmcf.fem import assemble_mass_galerkin, assemble_stiffness, element_mass, element_stiffness
from cmcf.flow import FlowConfig, FlowState, Termination, cmcf_step, normalize, run_flow
from cmcf.io import load_mesh
from cmcf.mesh import TriangleMesh, total_area
from cmcf.metrics import angular_distortion, lcr_deviation, sphericity, summarize
from cmcf.solver import cholesky_solve

from . import quadrature
from .conftest import DATA, random_rotation


def test_1_spot_reproduction(criterion):
    spot = load_mesh(DATA / "spot.obj")
    counts = (spot.n_vertices, spot.n_faces)
    s0 = sphericity(spot)
    t0 = time.perf_counter()
    result = run_flow(spot, FlowConfig(tau=0.05, max_steps=200))
    elapsed = time.perf_counter() - t0
    rep = summarize(spot, result.mesh)
    checks = {
        "counts": counts == (2930, 5856),
        "initial s": abs(s0 - 0.679) <= 0.01,
        "reached": result.termination is Termination.SPHERICITY_REACHED and result.steps <= 200,
        "final s": result.final_sphericity >= 0.999,
        "ang mean": abs(rep.angular_mean - 0.091) <= 0.02,
        "lcr mean": abs(rep.lcr_mean - 1.001) <= 0.005,
        "runtime": elapsed <= 60.0,
    }
    detail = (
        f"V,F={counts} s0={s0:.4f} s={result.final_sphericity:.5f} after {result.steps} steps; "
        f"ang {rep.angular_mean:.4f}/{rep.angular_std:.4f} lcr {rep.lcr_mean:.4f}/{rep.lcr_std:.4f}; {elapsed:.1f}s"
    )
    failed = [k for k, v in checks.items() if not v]
    assert criterion(1, "spot cMCF reproduction", not failed, detail + (f" FAILED {failed}" if failed else "")), failed


def test_2_mcf_fails_where_cmcf_succeeds(criterion):
    spot = load_mesh(DATA / "spot.obj")
    mcf = run_flow(spot, FlowConfig(mode="mcf", tau=0.05, normalization="area"))
    cmcf = run_flow(spot, FlowConfig(mode="cmcf", tau=0.05, normalization="area"))
    ok = (
        mcf.termination in (Termination.DEGENERATE, Termination.SOLVER_FAILED)
        and mcf.steps <= 10
        and cmcf.termination is Termination.SPHERICITY_REACHED
    )
    detail = f"MCF {mcf.termination.value} at step {mcf.steps}; cMCF {cmcf.termination.value} at step {cmcf.steps}"
    assert criterion(2, "MCF failure vs cMCF success on spot", ok, detail)


def _law_of_cosines_half_cot(P):
    """Half cotangent of the angle at each vertex from side lengths only."""
    a = np.linalg.norm(P[1] - P[2])
    b = np.linalg.norm(P[2] - P[0])
    c = np.linalg.norm(P[0] - P[1])
    s = (a + b + c) / 2
    area = math.sqrt(max(s * (s - a) * (s - b) * (s - c), 0.0))
    # cot(angle) = (adjacent^2 + adjacent^2 - opposite^2) / (4 area)
    return area, [(b * b + c * c - a * a) / (8 * area), (c * c + a * a - b * b) / (8 * area), (a * a + b * b - c * c) / (8 * area)]


def test_3_element_matrices_match_quadrature(criterion):
    rng = np.random.default_rng(3)
    worst_k = worst_m = worst_closed = 0.0
    for _ in range(100):
        while True:
            P = rng.uniform(-1, 1, size=(3, 3))
            if np.linalg.norm(np.cross(P[1] - P[0], P[2] - P[0])) > 1e-3:
                break
        K, M = element_stiffness(*P), element_mass(*P)
        Kq, Mq = quadrature.stiffness(P), quadrature.mass(P)
        worst_k = max(worst_k, np.abs(K - Kq).max() / np.abs(Kq).max())
        worst_m = max(worst_m, np.abs(M - Mq).max() / np.abs(Mq).max())
        area, half_cot = _law_of_cosines_half_cot(P)
        closed = np.array([[0, half_cot[2], half_cot[1]], [half_cot[2], 0, half_cot[0]], [half_cot[1], half_cot[0], 0]])
        closed[np.diag_indices(3)] = -closed.sum(axis=1)
        closed_m = area / 12 * (np.ones((3, 3)) + np.eye(3))
        worst_closed = max(
            worst_closed,
            np.abs(K - closed).max() / np.abs(closed).max(),
            np.abs(M - closed_m).max() / np.abs(closed_m).max(),
        )
    ok = worst_k <= 1e-10 and worst_m <= 1e-10 and worst_closed <= 1e-10
    detail = f"max rel err stiffness {worst_k:.1e}, mass {worst_m:.1e}, closed forms {worst_closed:.1e}"
    assert criterion(3, "element matrices vs 7-point quadrature", ok, detail)


def test_4_structural_invariants(criterion):
    rng = np.random.default_rng(4)
    meshes = {f"icosphere-{s}": shapes.icosphere(s) for s in (1, 2, 3, 4)}
    meshes["unit cube"] = shapes.unit_cube()
    failures = []
    for name, m in meshes.items():
        L = assemble_stiffness(m)
        D = assemble_mass_galerkin(m)
        if abs(L - L.T).max() != 0:
            failures.append(f"{name}: L asymmetric")
        rowsum = np.abs(np.asarray(L.sum(axis=1)).ravel())
        row1 = np.asarray(abs(L).sum(axis=1)).ravel()
        if np.any(rowsum > 1e-9 * row1):
            failures.append(f"{name}: row sums")
        for _ in range(100):
            x = rng.normal(size=m.n_vertices)
            if x @ (L @ x) > 1e-9 * (x @ x):
                failures.append(f"{name}: x^T L x > 0")
                break
        if abs(D.sum() / total_area(m) - 1) > 1e-10:
            failures.append(f"{name}: sum D != area")
        for tau in (1e-4, 0.05, 1.0):
            try:
                cholesky_solve((D - tau * L).tocsc(), np.ones(m.n_vertices))
            except ArithmeticError:
                failures.append(f"{name}: Cholesky failed at tau={tau}")
    assert criterion(4, "structural invariants (L, D, D - tau L)", not failures, "; ".join(failures) or f"{len(meshes)} meshes")


def test_5_sphere_fixed_point(criterion):
    m = shapes.icosphere(4)
    state = FlowState.from_mesh(m)
    s0 = sphericity(m)
    worst_disp = 0.0
    worst_drop = 0.0
    for _ in range(10):
        X = normalize(cmcf_step(state, 0.05).x, state.faces, state.target_area, "area-center")
        state.positions = X
        state.step += 1
        worst_disp = max(worst_disp, np.linalg.norm(X - m.vertices, axis=1).max())
        worst_drop = max(worst_drop, s0 - sphericity(state.mesh))
    radius = 1.0
    ok = worst_disp <= 1e-3 * radius and worst_drop <= 1e-9
    detail = f"max displacement {worst_disp:.2e} (radius {radius}), sphericity drop {worst_drop:.1e}"
    assert criterion(5, "sphere is a cMCF fixed point", ok, detail)


def test_6_sphericity_formula(criterion):
    rng = np.random.default_rng(6)
    cube = sphericity(shapes.unit_cube())
    expected = (36 * math.pi) ** (1 / 3) / 6
    ico = sphericity(shapes.icosphere(4))
    base = shapes.star_shaped(lambda d: 1 + 0.3 * d[:, 0] ** 2, 3)
    s_base = sphericity(base)
    drift = 0.0
    for _ in range(20):
        R = random_rotation(rng)
        moved = base.with_vertices(base.vertices @ R.T + rng.normal(scale=5, size=3))
        drift = max(drift, abs(sphericity(moved) - s_base))
    ok = abs(cube - expected) <= 1e-6 and ico > 0.99 and drift < 1e-12
    detail = f"cube {cube:.6f} (expected {expected:.6f}), icosphere-4 {ico:.5f}, rigid drift {drift:.1e}"
    assert criterion(6, "sphericity formula", ok, detail)


def test_7_metric_identities(criterion):
    rng = np.random.default_rng(7)
    m = shapes.star_shaped(lambda d: 1 + 0.2 * np.sin(4 * d[:, 1]) * d[:, 2], 3)
    self_ang = angular_distortion(m, m)
    self_lcr = lcr_deviation(m, m)
    target = shapes.icosphere(3)
    a = angular_distortion(m, target)
    c = lcr_deviation(m, target)
    drift = 0.0
    for s in (1e-3, 0.5, 7.0, 1e3):
        scaled = target.with_vertices(s * target.vertices)
        drift = max(drift, np.abs(angular_distortion(m, scaled) - a).max(), np.abs(lcr_deviation(m, scaled) - c).max())
    ok = np.all(self_ang == 0) and np.all(self_lcr == 1) and drift <= 1e-12
    detail = f"self: max ang {np.abs(self_ang).max():.1e}, max |lcr-1| {np.abs(self_lcr - 1).max():.1e}; scaling drift {drift:.1e}"
    assert criterion(7, "metric identities", ok, detail)


def test_8_degeneracy_semantics(criterion):
    orig = shapes.star_shaped(lambda d: 1 + 0.1 * d[:, 0], 3)
    mapped = shapes.icosphere(3)
    clean = summarize(orig, mapped)
    face = 100
    V = mapped.vertices.copy()
    a, b, c = mapped.faces[face]
    V[c] = 0.5 * (V[a] + V[b])
    bad = summarize(orig, TriangleMesh(V, mapped.faces))
    excluded_faces = np.flatnonzero(~np.isfinite(bad.angular_distortion)).tolist()
    excluded_edges = {tuple(sorted(bad.flaps[k, :2].tolist())) for k in np.flatnonzero(~np.isfinite(bad.lcr_ratio))}
    face_edges = {tuple(sorted(map(int, e))) for e in ((a, b), (b, c), (c, a))}
    ok = (
        clean.valid
        and not bad.valid
        and excluded_faces == [face]
        and excluded_edges == face_edges
        and bad.angular_count == clean.angular_count - 1
        and bad.lcr_count == clean.lcr_count - 3
    )
    detail = f"valid {clean.valid}->{bad.valid}; excluded faces {excluded_faces}, edges {sorted(excluded_edges)}"
    assert criterion(8, "degeneracy invalidates and excludes exactly the collapsed elements", ok, detail)
