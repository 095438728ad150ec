"""Position fixes from multi-transceiver ranges, and velocity from position tracks."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class GeometryError(ValueError):
    """Too few or degenerate anchors for the requested dimension."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, best: "PositionFix"):
        super().__init__(message)
        self.best = best


@dataclass
class PositionFix:
    position: np.ndarray
    residual_norm: float = 0.0
    timestamp: float = 0.0
    iterations: int = 0


@dataclass
class VelocityEstimate:
    speed: float
    direction: np.ndarray | None
    segment_speeds: list[float] = field(default_factory=list)

    @property
    def direction_defined(self) -> bool:
        return self.direction is not None


def _check_anchors(anchors: np.ndarray, ranges: np.ndarray, dim: int) -> None:
    if dim not in (2, 3):
        raise GeometryError("dim must be 2 or 3")
    if anchors.ndim != 2 or anchors.shape[1] != dim:
        raise GeometryError(f"anchors must be an (n, {dim}) array")
    if len(anchors) != len(ranges):
        raise GeometryError("one range per anchor is required")
    if len(anchors) < dim + 1:
        raise GeometryError(f"need at least {dim + 1} anchors in {dim}D, got {len(anchors)}")
    span = anchors[1:] - anchors[0]
    s = np.linalg.svd(span, compute_uv=False)
    if s[0] == 0.0 or s[dim - 1] < 1e-9 * s[0]:
        raise GeometryError("anchors are collinear (2D) or coplanar (3D)")
    if np.any(ranges < 0):
        raise GeometryError("ranges must be nonnegative")


def linearized_fix(anchors, ranges) -> np.ndarray:
    """Closed-form least-squares position from differences of squared ranges."""
    a = np.asarray(anchors, dtype=float)
    r = np.asarray(ranges, dtype=float)
    A = 2.0 * (a[1:] - a[0])
    b = (np.sum(a[1:] ** 2, axis=1) - np.sum(a[0] ** 2)) - (r[1:] ** 2 - r[0] ** 2)
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return x


def _residuals(x: np.ndarray, anchors: np.ndarray, ranges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    diff = x - anchors
    dist = np.linalg.norm(diff, axis=1)
    safe = np.where(dist > 0, dist, 1.0)
    J = np.where(dist[:, None] > 0, diff / safe[:, None], 0.0)
    return dist - ranges, J


def multilaterate(
    anchors,
    ranges,
    dim: int = 2,
    max_iter: int = 50,
    step_tol: float = 1e-9,
    timestamp: float = 0.0,
) -> PositionFix:
    """Least-squares position minimizing sum (|x - a_i| - r_i)^2.

    Starts from the linearized solution and polishes with Gauss-Newton under
    Levenberg damping.
    """
    a = np.asarray(anchors, dtype=float)
    r = np.asarray(ranges, dtype=float).reshape(-1)
    _check_anchors(a, r, dim)
    x = linearized_fix(a, r)
    res, J = _residuals(x, a, r)
    cost = float(res @ res)
    lam = 1e-3
    it = 0
    converged = cost == 0.0
    while not converged and it < max_iter:
        it += 1
        g = J.T @ res
        H = J.T @ J
        while True:
            step = np.linalg.solve(H + lam * np.diag(np.maximum(np.diag(H), 1e-12)), -g)
            x_new = x + step
            res_new, J_new = _residuals(x_new, a, r)
            cost_new = float(res_new @ res_new)
            if cost_new <= cost:
                x, res, J, cost = x_new, res_new, J_new, cost_new
                lam = max(lam / 10.0, 1e-12)
                break
            lam *= 10.0
            if lam > 1e12:
                break
        if np.linalg.norm(step) < step_tol or lam > 1e12 or cost == 0.0:
            converged = True
    fix = PositionFix(x, float(np.sqrt(cost)), timestamp, it)
    if not converged:
        raise ConvergenceError(f"no convergence after {max_iter} iterations", fix)
    return fix


def estimate_velocity(track: Sequence[PositionFix], eps: float = 0.0) -> VelocityEstimate:
    """Speed from endpoint displacement over elapsed time, plus per-segment speeds."""
    if len(track) < 2:
        raise ValueError("velocity needs at least two fixes")
    t = np.array([f.timestamp for f in track], dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("fix timestamps must be strictly increasing")
    p = np.array([np.asarray(f.position, dtype=float) for f in track])
    disp = p[-1] - p[0]
    dist = float(np.linalg.norm(disp))
    speed = dist / (t[-1] - t[0])
    direction = disp / dist if dist > eps else None
    seg = np.linalg.norm(np.diff(p, axis=0), axis=1) / np.diff(t)
    return VelocityEstimate(speed, direction, seg.tolist())


def read_ranges_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Anchors and ranges from a CSV with columns x_m, y_m[, z_m], range_m."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise GeometryError(f"{path}: no anchor rows")
    cols = ["x_m", "y_m"] + (["z_m"] if "z_m" in rows[0] else [])
    anchors = np.array([[float(row[c]) for c in cols] for row in rows])
    ranges = np.array([float(row["range_m"]) for row in rows])
    return anchors, ranges


def write_ranges_csv(path, anchors, ranges) -> Path:
    a = np.asarray(anchors, dtype=float)
    cols = ["x_m", "y_m", "z_m"][: a.shape[1]]
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols + ["range_m"])
        for row, r in zip(a, ranges):
            w.writerow([repr(float(v)) for v in row] + [repr(float(r))])
    return path


def write_fixes_csv(path, fixes: Sequence[PositionFix]) -> Path:
    dim = len(fixes[0].position) if fixes else 2
    cols = ["x_m", "y_m", "z_m"][:dim]
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp_s"] + cols + ["residual_m"])
        for f in fixes:
            w.writerow([repr(float(f.timestamp))] + [repr(float(v)) for v in f.position] + [repr(float(f.residual_norm))])
    return path


def read_fixes_csv(path) -> list[PositionFix]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = [c for c in ("x_m", "y_m", "z_m") if rows and c in rows[0]]
    return [
        PositionFix(np.array([float(r[c]) for c in cols]), float(r["residual_m"]), float(r["timestamp_s"]))
        for r in rows
    ]
