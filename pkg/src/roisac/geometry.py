"""Scene geometry: poses and the link angles that drive the channel models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateGeometryError(ValueError):
    """Raised when a geometric configuration has no well-defined answer."""


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateGeometryError("zero-length direction vector")
    return v / n


def angle_between(u, v) -> float:
    """Angle in radians between two nonzero vectors, robust near 0 and pi."""
    u = _unit(u)
    v = _unit(v)
    # atan2 form stays accurate where arccos(dot) loses precision
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)), np.dot(u, v)))


@dataclass(frozen=True)
class Pose:
    """Position (m) and unit boresight of an emitter, detector or reflector.

    A boresight of any nonzero length is accepted and normalized.
    """

    position: np.ndarray
    boresight: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(-1)
        bs = np.asarray(self.boresight, dtype=float).reshape(-1)
        if pos.shape != (3,) or bs.shape != (3,):
            raise ValueError("position and boresight must be 3-vectors")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(bs))):
            raise ValueError("pose components must be finite")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "boresight", _unit(bs))

    def transformed(self, rotation: np.ndarray, translation=None) -> "Pose":
        """Apply a rigid transform x -> R x + t."""
        R = np.asarray(rotation, dtype=float)
        t = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        return Pose(R @ self.position + t, R @ self.boresight)


@dataclass(frozen=True)
class LinkGeometry:
    """Distance ``d`` (m), irradiance angle ``phi`` and CCR incidence angle ``theta`` (rad)."""

    d: float
    phi: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"distance must be positive, got {self.d}")
        for name in ("phi", "theta"):
            a = getattr(self, name)
            if not 0.0 <= a <= np.pi:
                raise ValueError(f"{name} must lie in [0, pi], got {a}")


def derive_link_geometry(tx: Pose, target: Pose) -> LinkGeometry:
    """Link distance and angles between a transceiver and a retroreflector.

    ``phi`` is measured at the transceiver between its boresight and the ray to
    the target; ``theta`` at the target between its normal and the ray back to
    the transceiver. Angles past pi/2 are returned as-is.
    """
    delta = target.position - tx.position
    d = float(np.linalg.norm(delta))
    if d == 0.0:
        raise DegenerateGeometryError("transceiver and target positions coincide")
    phi = angle_between(tx.boresight, delta)
    theta = angle_between(target.boresight, -delta)
    return LinkGeometry(d=d, phi=min(phi, np.pi), theta=min(theta, np.pi))


def facing(position, toward) -> Pose:
    """Pose at ``position`` whose boresight points at ``toward``."""
    position = np.asarray(position, dtype=float)
    return Pose(position, np.asarray(toward, dtype=float) - position)
