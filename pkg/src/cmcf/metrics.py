"""Conformality and sphericity of a map between two meshes sharing connectivity."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .mesh import EdgeFlap, TriangleMesh, _corner_angles, _face_areas, _signed_volume, degenerate_face_mask, edge_flaps

_LOGGER = logging.getLogger(__name__)

HIST_BINS = 64


def sphericity_from_arrays(V, F) -> float:
    area = float(_face_areas(V, F).sum())
    if not area > 0:
        raise ValueError("sphericity is undefined for zero total area")
    vol = _signed_volume(V, F)
    return float((36.0 * np.pi * vol * vol) ** (1.0 / 3.0) / area)


def sphericity(mesh: TriangleMesh) -> float:
    """(36 pi V^2)^(1/3) / A, which is 1 for a round sphere and smaller otherwise.

    The volume enters squared, so an inverted mesh gives the same value; a
    warning is logged in that case.
    """
    if _signed_volume(mesh.vertices, mesh.faces) < 0:
        _LOGGER.warning("negative signed volume; faces are probably oriented inward")
    return sphericity_from_arrays(mesh.vertices, mesh.faces)


def _check_same_connectivity(orig, mapped):
    if orig.faces.shape != mapped.faces.shape or not np.array_equal(orig.faces, mapped.faces):
        raise ValueError("meshes do not share connectivity")
    if orig.n_vertices != mapped.n_vertices:
        raise ValueError("meshes have different vertex counts")


def face_validity(orig: TriangleMesh, mapped: TriangleMesh, ratio=1e-8) -> np.ndarray:
    """True for faces that are non-degenerate in both meshes."""
    bad = degenerate_face_mask(orig.vertices, orig.faces, ratio)
    bad |= degenerate_face_mask(mapped.vertices, mapped.faces, ratio)
    return ~bad


def angular_distortion(orig: TriangleMesh, mapped: TriangleMesh, ratio=1e-8) -> np.ndarray:
    """Per-face max over corners of |theta - theta'| / theta.

    Corners are paired by position in the face. Faces degenerate in either
    mesh are NaN.
    """
    _check_same_connectivity(orig, mapped)
    a0 = _corner_angles(orig.vertices, orig.faces)
    a1 = _corner_angles(mapped.vertices, mapped.faces)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = (np.abs(a0 - a1) / a0).max(axis=1)
    valid = face_validity(orig, mapped, ratio) & np.isfinite(d)
    d[~valid] = np.nan
    return d


def _lcr_from_arrays(V, flaps):
    i, j, m, k = flaps.T

    def length(p, q):
        return np.linalg.norm(V[p] - V[q], axis=1)

    with np.errstate(invalid="ignore", divide="ignore"):
        return length(i, m) * length(j, k) / (length(m, j) * length(k, i))


def lcr(mesh: TriangleMesh, flap: EdgeFlap) -> float:
    """Length cross ratio l_im * l_jk / (l_mj * l_ki) of one edge flap."""
    V = mesh.vertices
    i, j, m, k = flap
    lens = [np.linalg.norm(V[a] - V[b]) for a, b in ((i, m), (j, k), (m, j), (k, i))]
    if min(lens) <= 0:
        raise ValueError(f"zero-length edge in flap {tuple(flap)}")
    return float(lens[0] * lens[1] / (lens[2] * lens[3]))


def _flap_faces(mesh, flaps):
    """Indices of the two faces flanking each flap (the i->j face, then j->i)."""
    F = mesh.faces
    n = mesh.n_vertices
    heads = F.reshape(-1)
    tails = F[:, [1, 2, 0]].reshape(-1)
    keys = heads * n + tails
    order = np.argsort(keys)
    sk = keys[order]
    fid = np.repeat(np.arange(len(F)), 3)[order]
    f1 = fid[np.searchsorted(sk, flaps[:, 0] * n + flaps[:, 1])]
    f2 = fid[np.searchsorted(sk, flaps[:, 1] * n + flaps[:, 0])]
    return f1, f2


def lcr_deviation(orig: TriangleMesh, mapped: TriangleMesh, ratio=1e-8, flaps=None) -> np.ndarray:
    """Per-edge ratio c'/c of length cross ratios, one value per row of ``flaps``.

    Edges flanked by a face that is degenerate in either mesh, or with a
    zero length in either mesh, are NaN.
    """
    _check_same_connectivity(orig, mapped)
    if flaps is None:
        flaps = edge_flaps(orig)
    c0 = _lcr_from_arrays(orig.vertices, flaps)
    c1 = _lcr_from_arrays(mapped.vertices, flaps)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = c1 / c0
    good_face = face_validity(orig, mapped, ratio)
    f1, f2 = _flap_faces(orig, flaps)
    valid = good_face[f1] & good_face[f2] & np.isfinite(r) & (r > 0)
    r[~valid] = np.nan
    return r


def _stats(values):
    v = values[np.isfinite(values)]
    if v.size == 0:
        return float("nan"), float("nan"), 0
    return float(v.mean()), float(v.std()), int(v.size)


@dataclass
class ConformalityReport:
    angular_distortion: np.ndarray
    lcr_ratio: np.ndarray
    flaps: np.ndarray
    angular_mean: float
    angular_std: float
    angular_count: int
    lcr_mean: float
    lcr_std: float
    lcr_count: int
    sphericity: float
    degenerate_faces: int
    valid: bool

    def to_dict(self, termination=None, steps=None) -> dict:
        """Scalars in the metrics JSON schema."""
        return {
            "sphericity": self.sphericity,
            "angular": {"mean": self.angular_mean, "std": self.angular_std, "count": self.angular_count},
            "lcr": {"mean": self.lcr_mean, "std": self.lcr_std, "count": self.lcr_count},
            "degenerate_faces": self.degenerate_faces,
            "valid": self.valid,
            "termination": termination,
            "steps": steps,
        }

    def histograms(self, bins=HIST_BINS) -> dict:
        """Bin counts: angular over [0, max], lcr over mean +/- 4 std."""
        ang = self.angular_distortion[np.isfinite(self.angular_distortion)]
        hi = float(ang.max()) if ang.size else 0.0
        a_counts, a_edges = np.histogram(ang, bins=bins, range=(0.0, hi if hi > 0 else 1.0))
        rat = self.lcr_ratio[np.isfinite(self.lcr_ratio)]
        half = 4.0 * self.lcr_std if self.lcr_std > 0 else 1e-6
        mid = self.lcr_mean if np.isfinite(self.lcr_mean) else 1.0
        l_counts, l_edges = np.histogram(rat, bins=bins, range=(mid - half, mid + half))
        return {
            "angular": {"edges": a_edges.tolist(), "counts": a_counts.tolist()},
            "lcr": {"edges": l_edges.tolist(), "counts": l_counts.tolist()},
        }

    def write_face_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["face", "angular_distortion", "valid"])
            for f, d in enumerate(self.angular_distortion):
                ok = bool(np.isfinite(d))
                w.writerow([f, repr(float(d)) if ok else "", int(ok)])

    def write_edge_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "m", "k", "lcr_ratio", "valid"])
            for (i, j, m, k), r in zip(self.flaps.tolist(), self.lcr_ratio):
                ok = bool(np.isfinite(r))
                w.writerow([i, j, m, k, repr(float(r)) if ok else "", int(ok)])

    def write_histogram_csv(self, path, bins=HIST_BINS) -> None:
        h = self.histograms(bins)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["metric", "bin_lo", "bin_hi", "count"])
            for name in ("angular", "lcr"):
                e, c = h[name]["edges"], h[name]["counts"]
                for b in range(len(c)):
                    w.writerow([name, repr(e[b]), repr(e[b + 1]), c[b]])


def summarize(orig: TriangleMesh, mapped: TriangleMesh, ratio: float = 1e-8) -> ConformalityReport:
    """Angular-distortion and lcr statistics of ``orig -> mapped``.

    Means and standard deviations are population statistics over the valid
    faces and edges. Any face degenerate in either mesh makes the report
    invalid; it is excluded rather than raising.
    """
    _check_same_connectivity(orig, mapped)
    flaps = edge_flaps(orig)
    ang = angular_distortion(orig, mapped, ratio)
    rat = lcr_deviation(orig, mapped, ratio, flaps=flaps)
    am, asd, ac = _stats(ang)
    lm, lsd, lc = _stats(rat)
    n_bad = int((~face_validity(orig, mapped, ratio)).sum())
    try:
        s = sphericity(mapped)
    except ValueError:
        s = float("nan")
    return ConformalityReport(
        angular_distortion=ang,
        lcr_ratio=rat,
        flaps=flaps,
        angular_mean=am,
        angular_std=asd,
        angular_count=ac,
        lcr_mean=lm,
        lcr_std=lsd,
        lcr_count=lc,
        sphericity=s,
        degenerate_faces=n_bad,
        valid=n_bad == 0 and ac == orig.n_faces and lc == len(flaps),
    )
