"""Procedural toy-head scene family and its ground-truth renderer.

A scene is a handful of smooth Gaussian blobs (head, hair cap, two eyes,
nose, mouth) whose positions and sizes are affine in a low-dimensional shape
vector, plus K=12 semantic control points displaced by a 4-dim expression
basis. Shading is Lambertian under 27 spherical-harmonic illumination
coefficients. Everything here is pure float64 numpy and bit-deterministic,
so it can serve as the oracle that downstream learned components are
verified against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sh
from .cameras import CameraPose, cast_rays, project, DEFAULT_NEAR, DEFAULT_FAR
from .schema import (
    CORE_ALBEDO,
    CORE_HEADPOINTS,
    CORE_IDENTITY,
    CORE_ILLUMINATION,
    FeatureEntry,
    FeatureSchema,
    LabelRecord,
)

K_POINTS = 12
SHAPE_DIM = 8
EXPR_DIM = 4
ALBEDO_DIM = 6
IDENTITY_DIM = 16

ISO_LEVEL = 0.35
BACKGROUND = 0.5

# semantic mask categories
CAT_BACKGROUND = 0
CAT_SKIN = 1
CAT_HAIR = 2
CAT_MOUTH = 3
N_CATEGORIES = 4

_COARSE_STEPS = 192
_BISECT_STEPS = 30


# ---------------------------------------------------------------------------
# shape model: control points affine in shape coeffs + expression basis
# ---------------------------------------------------------------------------

def head_radii(shape_coeffs: np.ndarray) -> np.ndarray:
    s = np.asarray(shape_coeffs, dtype=np.float64)
    return np.array(
        [0.29 + 0.034 * s[4], 0.345 + 0.041 * s[5], 0.28 + 0.028 * s[6]]
    )


def base_control_points(shape_coeffs: np.ndarray) -> np.ndarray:
    """Neutral-expression control points; every coordinate affine in the coeffs."""
    s = np.asarray(shape_coeffs, dtype=np.float64)
    if s.shape != (SHAPE_DIM,):
        raise ValueError(f"shape_coeffs must have dim {SHAPE_DIM}")
    ex = 0.20 + 0.045 * s[0]
    ey = 0.12 + 0.040 * s[1]
    fz = 0.33 + 0.030 * s[6]
    mx = 0.16 + 0.045 * s[2]
    my = -0.21 + 0.040 * s[3]
    mz = 0.34 + 0.030 * s[6]
    bx = ex + 0.02
    by = ey + 0.14 + 0.020 * s[1]
    jx = 0.32 + 0.040 * s[4]
    cy = -0.44 - 0.053 * s[5]
    back_z = 0.10 + 0.020 * s[6]
    nz = 0.42 + 0.038 * s[6]
    hy = 0.55 + 0.054 * s[5] + 0.050 * s[7]
    return np.array(
        [
            [-ex, ey, fz],          # 0 left eye
            [ex, ey, fz],           # 1 right eye
            [-bx, by, fz - 0.02],   # 2 left brow
            [bx, by, fz - 0.02],    # 3 right brow
            [-mx, my, mz],          # 4 mouth left corner
            [mx, my, mz],           # 5 mouth right corner
            [0.0, my - 0.02, mz + 0.02],  # 6 mouth center
            [0.0, cy, back_z],      # 7 chin
            [-jx, -0.26, back_z],   # 8 left jaw
            [jx, -0.26, back_z],    # 9 right jaw
            [0.0, -0.03, nz],       # 10 nose tip
            [0.0, hy, 0.0],         # 11 crown
        ]
    )


def _expression_basis() -> np.ndarray:
    basis = np.zeros((EXPR_DIM, K_POINTS, 3))
    # 0: jaw open
    basis[0, 6] = (0.0, -0.09, 0.0)
    basis[0, 4] = basis[0, 5] = (0.0, -0.045, 0.0)
    basis[0, 7] = (0.0, -0.05, 0.0)
    basis[0, 8] = basis[0, 9] = (0.0, -0.02, 0.0)
    # 1: smile
    basis[1, 4] = (-0.035, 0.035, 0.0)
    basis[1, 5] = (0.035, 0.035, 0.0)
    basis[1, 6] = (0.0, 0.015, 0.0)
    # 2: brow raise
    basis[2, 2] = basis[2, 3] = (0.0, 0.05, 0.0)
    basis[2, 0] = basis[2, 1] = (0.0, 0.012, 0.0)
    # 3: pucker
    basis[3, 4] = (0.04, 0.0, 0.01)
    basis[3, 5] = (-0.04, 0.0, 0.01)
    basis[3, 6] = (0.0, 0.0, 0.03)
    basis[3, 10] = (0.0, -0.012, 0.0)
    return basis


EXPRESSION_BASIS = _expression_basis()


def control_points_from(shape_coeffs: np.ndarray, expression_coeffs: np.ndarray) -> np.ndarray:
    e = np.asarray(expression_coeffs, dtype=np.float64)
    if e.shape != (EXPR_DIM,):
        raise ValueError(f"expression_coeffs must have dim {EXPR_DIM}")
    return base_control_points(shape_coeffs) + np.tensordot(e, EXPRESSION_BASIS, axes=1)


def expression_coefficients(control_points: np.ndarray, shape_coeffs: np.ndarray) -> np.ndarray:
    """Recover the expression coefficients by exact linear projection."""
    delta = (np.asarray(control_points, dtype=np.float64) - base_control_points(shape_coeffs)).reshape(-1)
    basis = EXPRESSION_BASIS.reshape(EXPR_DIM, -1).T
    coeffs, *_ = np.linalg.lstsq(basis, delta, rcond=None)
    return coeffs


# ---------------------------------------------------------------------------
# SceneSpec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneSpec:
    shape_coeffs: np.ndarray  # (8,) in [-1, 1]
    control_points: np.ndarray  # (12, 3) in [-1.5, 1.5], on the shape model
    albedo_coeffs: np.ndarray  # (6,) in [-1, 1]
    hsv_color: tuple[float, float, float]  # hair color, hue in [0, 1)
    sh_coeffs: np.ndarray  # (27,) in [-4, 4]
    seed: int

    def __post_init__(self):
        s = np.asarray(self.shape_coeffs, dtype=np.float64)
        cp = np.asarray(self.control_points, dtype=np.float64)
        a = np.asarray(self.albedo_coeffs, dtype=np.float64)
        light = np.asarray(self.sh_coeffs, dtype=np.float64)
        if s.shape != (SHAPE_DIM,) or np.abs(s).max() > 1 + 1e-9:
            raise ValueError("shape_coeffs must be 8 values in [-1, 1]")
        if a.shape != (ALBEDO_DIM,) or np.abs(a).max() > 1 + 1e-9:
            raise ValueError("albedo_coeffs must be 6 values in [-1, 1]")
        if cp.shape != (K_POINTS, 3) or np.abs(cp).max() > 1.5:
            raise ValueError("control_points must be 12x3 within [-1.5, 1.5]")
        if light.shape != (27,) or not np.isfinite(light).all() or np.abs(light).max() > 4:
            raise ValueError("sh_coeffs must be 27 finite values in [-4, 4]")
        h, sat, val = self.hsv_color
        if not (0 <= h < 1 and 0 <= sat <= 1 and 0 <= val <= 1):
            raise ValueError("hsv_color must satisfy hue in [0,1), sat/val in [0,1]")
        # control points must lie on the shape+expression model
        coeffs = expression_coefficients(cp, s)
        rebuilt = control_points_from(s, coeffs)
        if np.abs(rebuilt - cp).max() > 1e-6:
            raise ValueError("control_points are not explained by the shape/expression model")
        object.__setattr__(self, "shape_coeffs", s)
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "albedo_coeffs", a)
        object.__setattr__(self, "sh_coeffs", light)
        object.__setattr__(self, "hsv_color", (float(h), float(sat), float(val)))

    def to_json(self) -> dict:
        return {
            "shape_coeffs": self.shape_coeffs.tolist(),
            "control_points": self.control_points.tolist(),
            "albedo_coeffs": self.albedo_coeffs.tolist(),
            "hsv_color": list(self.hsv_color),
            "sh_coeffs": self.sh_coeffs.tolist(),
            "seed": int(self.seed),
        }

    @staticmethod
    def from_json(d: dict) -> "SceneSpec":
        return SceneSpec(
            shape_coeffs=np.array(d["shape_coeffs"], dtype=np.float64),
            control_points=np.array(d["control_points"], dtype=np.float64),
            albedo_coeffs=np.array(d["albedo_coeffs"], dtype=np.float64),
            hsv_color=tuple(d["hsv_color"]),
            sh_coeffs=np.array(d["sh_coeffs"], dtype=np.float64),
            seed=int(d["seed"]),
        )


def with_symmetric_light(scene: SceneSpec) -> SceneSpec:
    """Same scene with the odd-in-x illumination components zeroed.

    The blob geometry is mirror-symmetric in x by construction, so this
    yields a fully mirror-symmetric rendering setup.
    """
    return SceneSpec(
        scene.shape_coeffs,
        scene.control_points,
        scene.albedo_coeffs,
        scene.hsv_color,
        sh.symmetric_light(scene.sh_coeffs),
        scene.seed,
    )


# ---------------------------------------------------------------------------
# blobs and colors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Blob:
    center: np.ndarray  # (3,)
    radii: np.ndarray  # (3,) Gaussian sigmas; visible extent is ~1.45x
    weight: float
    category: int
    albedo: np.ndarray  # (3,) base color


def hsv_to_rgb(h: float, s: float, v: float) -> np.ndarray:
    i = int(np.floor(h * 6.0)) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p, q, t = v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f))
    rgb = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]
    return np.array(rgb, dtype=np.float64)


def _clamp01(c: np.ndarray) -> np.ndarray:
    return np.clip(c, 0.02, 0.98)


def head_blobs(scene: SceneSpec) -> list[Blob]:
    s, a = scene.shape_coeffs, scene.albedo_coeffs
    cp = scene.control_points
    radii = head_radii(s)
    skin = _clamp01(
        np.array([0.78, 0.62, 0.52])
        + 0.08 * np.array([a[0], a[1], a[2]])
        + 0.04 * a[4]
    )
    mouth_color = _clamp01(np.array([0.55, 0.22, 0.22]) + np.array([0.10, 0.02, 0.02]) * a[3] + 0.02 * a[5])
    eye_color = np.array([0.13, 0.12, 0.12])
    hair_color = _clamp01(hsv_to_rgb(*scene.hsv_color))

    mouth_rx = max(0.75 * 0.5 * (cp[5, 0] - cp[4, 0]), 0.03)
    mouth_ry = max(0.030 + 0.45 * (0.5 * (cp[4, 1] + cp[5, 1]) - cp[6, 1]), 0.022)
    hair_len = 0.20 + 0.05 * s[7]
    hair_center = np.array([0.0, cp[11, 1] - 0.9 * hair_len, -0.06])

    return [
        Blob(np.array([0.0, 0.02, 0.0]), radii, 1.0, CAT_SKIN, skin),
        Blob(cp[10].copy(), np.array([0.085, 0.095, 0.10]) * 0.7, 0.75, CAT_SKIN, skin * 0.97),
        Blob(cp[0] + (0.0, 0.0, 0.03), np.array([0.055, 0.048, 0.06]), 2.0, CAT_SKIN, eye_color),
        Blob(cp[1] + (0.0, 0.0, 0.03), np.array([0.055, 0.048, 0.06]), 2.0, CAT_SKIN, eye_color),
        Blob(cp[6] + (0.0, 0.0, 0.02), np.array([mouth_rx, mouth_ry, 0.065]), 1.6, CAT_MOUTH, mouth_color),
        Blob(hair_center, np.array([radii[0] * 1.04, hair_len, radii[2] * 1.04]), 1.15, CAT_HAIR, hair_color),
    ]


# ---------------------------------------------------------------------------
# implicit field evaluation and ray-traced rendering
# ---------------------------------------------------------------------------

def _blob_contributions(blobs: list[Blob], points: np.ndarray) -> np.ndarray:
    """Per-blob Gaussian contributions at points (..., 3) -> (..., B)."""
    out = np.zeros(points.shape[:-1] + (len(blobs),))
    for k, b in enumerate(blobs):
        if b.radii.min() <= 0:
            continue
        d = (points - b.center) / b.radii
        out[..., k] = b.weight * np.exp(-0.5 * np.sum(d * d, axis=-1))
    return out


def _field_gradient(blobs: list[Blob], points: np.ndarray) -> np.ndarray:
    grad = np.zeros_like(points)
    for b in blobs:
        if b.radii.min() <= 0:
            continue
        d = (points - b.center) / b.radii
        g = b.weight * np.exp(-0.5 * np.sum(d * d, axis=-1))
        grad += g[..., None] * (-(points - b.center) / (b.radii**2))
    return grad


def render_blobs(
    blobs: list[Blob],
    sh_coeffs: np.ndarray,
    camera: CameraPose,
    resolution: tuple[int, int],
    near: float = DEFAULT_NEAR,
    far: float = DEFAULT_FAR,
    debug: bool = False,
):
    """Ray-trace the blob isosurface with Lambertian SH shading.

    Returns (image (H,W,3) float in [0,1], mask (H,W) uint8 categories).
    With debug=True also returns a dict holding the unclamped irradiance
    buffer, the hit mask and hit depths.
    """
    h, w = resolution
    if h <= 0 or w <= 0:
        raise ValueError("resolution must be positive")
    origins, dirs = cast_rays(camera, resolution, near, far)
    origins = origins.reshape(-1, 3)
    dirs = dirs.reshape(-1, 3)
    n_rays = origins.shape[0]

    image = np.full((n_rays, 3), BACKGROUND)
    mask = np.zeros(n_rays, dtype=np.uint8)
    irr_buffer = np.zeros((n_rays, 3))
    depth = np.full(n_rays, np.inf)
    hit = np.zeros(n_rays, dtype=bool)

    active = [b for b in blobs if b.radii.min() > 0]
    if active:
        ts = np.linspace(near, far, _COARSE_STEPS)
        pts = origins[:, None, :] + dirs[:, None, :] * ts[None, :, None]
        f = _blob_contributions(active, pts).sum(axis=-1)
        entering = (f[:, :-1] < ISO_LEVEL) & (f[:, 1:] >= ISO_LEVEL)
        hit = entering.any(axis=1)
        if hit.any():
            first = entering[hit].argmax(axis=1)
            t_lo = ts[first]
            t_hi = ts[first + 1]
            o, d = origins[hit], dirs[hit]
            for _ in range(_BISECT_STEPS):
                t_mid = 0.5 * (t_lo + t_hi)
                f_mid = _blob_contributions(active, o + d * t_mid[:, None]).sum(axis=-1)
                outside = f_mid < ISO_LEVEL
                t_lo = np.where(outside, t_mid, t_lo)
                t_hi = np.where(outside, t_hi, t_mid)
            t_hit = 0.5 * (t_lo + t_hi)
            p_hit = o + d * t_hit[:, None]

            contrib = _blob_contributions(active, p_hit)
            total = contrib.sum(axis=-1, keepdims=True)
            albedos = np.stack([b.albedo for b in active])
            albedo = (contrib @ albedos) / total
            cats = np.array([b.category for b in active])
            mask[hit] = cats[contrib.argmax(axis=-1)]

            grad = _field_gradient(active, p_hit)
            normal = -grad / np.linalg.norm(grad, axis=-1, keepdims=True)
            irr = sh.irradiance(normal, sh_coeffs)
            irr_buffer[hit] = irr
            image[hit] = np.clip(albedo * np.clip(irr, 0.0, None), 0.0, 1.0)
            depth[hit] = t_hit

    image = image.reshape(h, w, 3)
    mask = mask.reshape(h, w)
    if debug:
        extras = {
            "irradiance": irr_buffer.reshape(h, w, 3),
            "hit": hit.reshape(h, w),
            "depth": depth.reshape(h, w),
        }
        return image, mask, extras
    return image, mask


def oracle_render(
    scene: SceneSpec,
    camera: CameraPose,
    resolution: tuple[int, int] = (64, 64),
    debug: bool = False,
):
    """Ground-truth render of a toy scene. Deterministic; image in [0, 1]."""
    return render_blobs(head_blobs(scene), scene.sh_coeffs, camera, resolution, debug=debug)


def oracle_labels(scene: SceneSpec, camera: CameraPose, schema: FeatureSchema | None = None) -> LabelRecord:
    """Feature labels recomputable from (scene, camera).

    Invisible control points (camera-space depth <= 0) get a zeroed 2D entry
    and a 0 in the visibility flags.
    """
    schema = schema or default_schema()
    px, visible = project(scene.control_points, camera)
    px = np.where(visible[:, None], px, 0.0)
    return LabelRecord(
        schema_version=schema.version,
        entries={
            CORE_HEADPOINTS: scene.control_points.copy(),
            "landmarks_2d": px,
            "landmarks_visible": visible.astype(np.float64),
            "hsv_color": np.array(scene.hsv_color),
            CORE_ILLUMINATION: scene.sh_coeffs.copy(),
        },
    )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def scene_from_rng(rng: np.random.Generator, seed: int = 0) -> SceneSpec:
    shape = rng.uniform(-1, 1, SHAPE_DIM)
    expr = rng.uniform(-1, 1, EXPR_DIM)
    albedo = rng.uniform(-1, 1, ALBEDO_DIM)
    hue = rng.uniform(0.0, 1.0)
    sat = rng.uniform(0.35, 0.95)
    val = rng.uniform(0.25, 0.90)
    light = np.zeros((3, 9))
    for c in range(3):
        light[c, 0] = rng.uniform(0.9, 1.35)
        light[c, 1:4] = rng.uniform(-0.25, 0.25, 3)
        light[c, 4:9] = rng.uniform(-0.10, 0.10, 5)
    return SceneSpec(
        shape_coeffs=shape,
        control_points=control_points_from(shape, expr),
        albedo_coeffs=albedo,
        hsv_color=(min(hue, np.nextafter(1.0, 0.0)), sat, val),
        sh_coeffs=light.reshape(-1),
        seed=seed,
    )


def sample_scene(rng_seed: int) -> SceneSpec:
    """Deterministic scene draw; every coefficient within its declared range."""
    return scene_from_rng(np.random.default_rng(int(rng_seed)), seed=int(rng_seed))


def sample_camera(rng: np.random.Generator, resolution: tuple[int, int] = (64, 64)) -> CameraPose:
    from .cameras import orbit_camera

    return orbit_camera(
        azimuth=rng.uniform(-0.9, 0.9),
        elevation=rng.uniform(-0.35, 0.35),
        distance=rng.uniform(1.6, 2.1),
        focal=rng.uniform(72.0, 84.0) * resolution[1] / 64.0,
        resolution=resolution,
    )


# ---------------------------------------------------------------------------
# default feature design space
# ---------------------------------------------------------------------------

def default_schema(identity_dim: int = IDENTITY_DIM, k_points: int = K_POINTS) -> FeatureSchema:
    """Core signals + hair color, plus derived 2D landmark label entries."""
    neutral_points = base_control_points(np.zeros(SHAPE_DIM))
    if k_points != K_POINTS:
        raise ValueError("toy shape model currently provides exactly 12 control points")
    entries = (
        FeatureEntry(CORE_IDENTITY, (identity_dim,), -1.5, 1.5, np.zeros(identity_dim)),
        FeatureEntry(CORE_HEADPOINTS, (k_points, 3), -1.5, 1.5, neutral_points),
        FeatureEntry(CORE_ALBEDO, (ALBEDO_DIM,), -1.0, 1.0, np.zeros(ALBEDO_DIM)),
        FeatureEntry(CORE_ILLUMINATION, (27,), -4.0, 4.0, _neutral_light()),
        FeatureEntry("hsv_color", (3,), 0.0, 1.0, np.array([0.08, 0.6, 0.4])),
        FeatureEntry("landmarks_2d", (k_points, 2), -1e6, 1e6, np.zeros((k_points, 2)), kind="derived"),
        FeatureEntry("landmarks_visible", (k_points,), 0.0, 1.0, np.ones(k_points), kind="derived"),
    )
    return FeatureSchema(entries)


def _neutral_light() -> np.ndarray:
    light = np.zeros((3, 9))
    light[:, 0] = 1.13  # roughly unit irradiance after band gain
    return light.reshape(-1)
