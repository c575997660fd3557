"""Pinhole camera model, ray casting, projection, datum-space transform.

Conventions (fixed once, tested everywhere):
  * right-handed coordinates; world/datum y is up
  * camera space: x right, y up, the camera looks down -z
  * world -> camera is  p_cam = R @ p_world + t
  * pixel centers at (col + 0.5, row + 0.5), u right, v down
  * a point with camera-space depth  d = -z > 0  is in front of the camera
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHONORMAL_TOL = 1e-6
MIN_DEPTH = 1e-8

DEFAULT_NEAR = 0.5
DEFAULT_FAR = 3.5


@dataclass(frozen=True)
class CameraPose:
    """World->camera rigid transform plus pinhole intrinsics (pixels)."""

    rotation: np.ndarray  # (3, 3) orthonormal
    translation: np.ndarray  # (3,)
    focal: float
    principal_point: tuple[float, float]  # (cx, cy) pixels

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        if rot.shape != (3, 3) or not np.isfinite(rot).all():
            raise ValueError("rotation must be a finite 3x3 matrix")
        if np.abs(rot.T @ rot - np.eye(3)).max() > ORTHONORMAL_TOL:
            raise ValueError("rotation is not orthonormal within 1e-6")
        t = np.asarray(self.translation, dtype=np.float64)
        if t.shape != (3,) or not np.isfinite(t).all():
            raise ValueError("translation must be a finite 3-vector")
        if not (np.isfinite(self.focal) and self.focal > 0):
            raise ValueError("focal must be > 0")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation

    def scaled(self, factor: float) -> "CameraPose":
        """Same pose with intrinsics scaled, e.g. to cast rays at a lower grid resolution."""
        cx, cy = self.principal_point
        return CameraPose(self.rotation, self.translation, self.focal * factor, (cx * factor, cy * factor))

    def to_json(self) -> dict:
        return {
            "rotation": [float(v) for v in self.rotation.reshape(-1)],
            "translation": [float(v) for v in self.translation],
            "focal": float(self.focal),
            "principal_point": [float(self.principal_point[0]), float(self.principal_point[1])],
        }

    @staticmethod
    def from_json(d: dict) -> "CameraPose":
        return CameraPose(
            rotation=np.array(d["rotation"], dtype=np.float64).reshape(3, 3),
            translation=np.array(d["translation"], dtype=np.float64),
            focal=float(d["focal"]),
            principal_point=(float(d["principal_point"][0]), float(d["principal_point"][1])),
        )


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray  # unit
    near: float
    far: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-6:
            raise ValueError("ray direction must be unit length within 1e-6")
        if not (0 < self.near < self.far):
            raise ValueError("require 0 < near < far")


def orbit_camera(
    azimuth: float,
    elevation: float,
    distance: float,
    focal: float = 78.0,
    resolution: tuple[int, int] = (64, 64),
) -> CameraPose:
    """Camera on a sphere around the origin, looking at the origin, world y up.

    azimuth 0 faces the +z side of the scene (the toy head's front);
    positive azimuth moves the camera toward +x.
    """
    ce, se = np.cos(elevation), np.sin(elevation)
    ca, sa = np.cos(azimuth), np.sin(azimuth)
    center = distance * np.array([sa * ce, se, ca * ce])
    fwd = -center / np.linalg.norm(center)  # camera -z axis in world
    up = np.array([0.0, 1.0, 0.0])
    right = np.cross(fwd, up)
    nr = np.linalg.norm(right)
    if nr < 1e-9:  # looking straight up/down
        right = np.array([1.0, 0.0, 0.0])
        nr = 1.0
    right = right / nr
    true_up = np.cross(right, fwd)
    # rows of R are the camera axes expressed in world coordinates
    rot = np.stack([right, true_up, -fwd])
    trans = -rot @ center
    h, w = resolution
    return CameraPose(rot, trans, focal, (w / 2.0, h / 2.0))


def world_to_camera(points: np.ndarray, camera: CameraPose) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return pts @ camera.rotation.T + camera.translation


def inverse_camera_transform(points_cam: np.ndarray, camera: CameraPose) -> np.ndarray:
    """Map camera-space points back to the datum (world) frame.

    This is what makes fitted head points pose-free: the same scene seen from
    two cameras yields the same datum-space points.
    """
    pts = np.asarray(points_cam, dtype=np.float64)
    return (pts - camera.translation) @ camera.rotation


def project(points: np.ndarray, camera: CameraPose) -> tuple[np.ndarray, np.ndarray]:
    """Pinhole-project datum-space points to pixel coordinates.

    Returns (pixels (N,2), visible (N,) bool). Points at or behind the camera
    plane (depth <= MIN_DEPTH) are flagged invisible and their pixel entries
    are NaN.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")
    cam = world_to_camera(pts, camera)
    depth = -cam[:, 2]
    visible = depth > MIN_DEPTH
    cx, cy = camera.principal_point
    px = np.full((pts.shape[0], 2), np.nan)
    d = np.where(visible, depth, 1.0)
    px[:, 0] = cx + camera.focal * cam[:, 0] / d
    px[:, 1] = cy - camera.focal * cam[:, 1] / d
    px[~visible] = np.nan
    return px, visible


def cast_rays(
    camera: CameraPose,
    resolution: tuple[int, int],
    near: float = DEFAULT_NEAR,
    far: float = DEFAULT_FAR,
) -> tuple[np.ndarray, np.ndarray]:
    """One ray per pixel through the pixel center.

    Intrinsics are taken as-is, so they must correspond to `resolution`
    (use CameraPose.scaled when rendering at a different grid size).
    Returns (origins (H,W,3), directions (H,W,3) unit). All origins equal the
    camera center.
    """
    h, w = resolution
    if h <= 0 or w <= 0:
        raise ValueError("resolution must be positive")
    if not (0 < near < far):
        raise ValueError("require 0 < near < far")
    cx, cy = camera.principal_point
    u = np.arange(w, dtype=np.float64) + 0.5
    v = np.arange(h, dtype=np.float64) + 0.5
    uu, vv = np.meshgrid(u, v)
    dirs_cam = np.stack(
        [(uu - cx) / camera.focal, -(vv - cy) / camera.focal, -np.ones_like(uu)],
        axis=-1,
    )
    dirs_world = dirs_cam @ camera.rotation
    dirs_world /= np.linalg.norm(dirs_world, axis=-1, keepdims=True)
    origins = np.broadcast_to(camera.center, dirs_world.shape).copy()
    return origins, dirs_world
