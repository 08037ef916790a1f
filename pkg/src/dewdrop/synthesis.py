"""Synthetic raindrops via a refraction model, with exact ground-truth masks.

Drops are spherical caps sitting on a glass pane in front of a pinhole
camera. For every pixel inside a drop footprint, a ray is cast from the
camera through the pixel, refracted once at the water surface
(air -> water), and carried to a background plane at a fixed depth; the
clean image is bilinearly sampled where the refracted ray lands and
attenuated. Because the refracted ray fans out far more than the direct
one, the drop interior shows a contracted, shuffled copy of a much
larger background region, which is the visual signature of real drops.

Geometry conventions
--------------------
Camera at the origin looking along +z; pixel (row, col) maps to the ray
direction ((col - cx)/f, (row - cy)/f, 1) with the principal point at
the image center. Drop footprints are circles in pixel coordinates; the
mask is exactly the union of footprints. ``drop_surface`` works in a
local frame whose z axis points back toward the camera, so the apex
normal is (0, 0, 1). Rays lost to total internal reflection, a backward
bounce, or a background hit outside the image fall back to the clean
pixel darkened by a fixed factor.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .image import bilinear_sample, check_rgb
from .rng import make_rng

WATER_REFRACTIVE_INDEX = 1.33
DROP_ATTENUATION = 0.9
LOST_RAY_DARKEN = 0.5


class TotalInternalReflection(ValueError):
    """Raised when the refracted direction has no real solution."""


@dataclass(frozen=True)
class CameraParams:
    focal_length_px: float = 2262.0
    glass_distance_m: float = 0.15
    glass_pitch_deg: float = 0.0
    background_distance_m: float = 10.0

    def __post_init__(self):
        if self.focal_length_px <= 0:
            raise ValueError("focal_length_px must be positive")
        if self.glass_distance_m <= 0:
            raise ValueError("glass_distance_m must be positive")
        if self.background_distance_m <= self.glass_distance_m:
            raise ValueError("background must lie beyond the glass plane")
        if not -45.0 <= self.glass_pitch_deg <= 45.0:
            raise ValueError("glass_pitch_deg must be in [-45, 45]")


@dataclass(frozen=True)
class DropGeometry:
    center: tuple[float, float]  # (row, col) in pixels
    radius_px: float
    height_ratio: float  # cap apex height / base radius, in (0, 1]
    refractive_index: float = WATER_REFRACTIVE_INDEX

    def __post_init__(self):
        if self.radius_px < 2:
            raise ValueError("radius_px must be >= 2")
        if not 0.0 < self.height_ratio <= 1.0:
            raise ValueError("height_ratio must be in (0, 1]")
        if self.refractive_index <= 0:
            raise ValueError("refractive_index must be positive")


@dataclass(frozen=True)
class RaindropField:
    drops: tuple[DropGeometry, ...]
    camera: CameraParams
    rng_seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "rng_seed": self.rng_seed,
                "camera": {
                    "focal_length_px": self.camera.focal_length_px,
                    "glass_distance_m": self.camera.glass_distance_m,
                    "glass_pitch_deg": self.camera.glass_pitch_deg,
                    "background_distance_m": self.camera.background_distance_m,
                },
                "drops": [
                    {
                        "center": list(d.center),
                        "radius_px": d.radius_px,
                        "height_ratio": d.height_ratio,
                        "refractive_index": d.refractive_index,
                    }
                    for d in self.drops
                ],
            },
            indent=2,
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "RaindropField":
        data = json.loads(text)
        return RaindropField(
            drops=tuple(
                DropGeometry(
                    center=tuple(d["center"]),
                    radius_px=d["radius_px"],
                    height_ratio=d["height_ratio"],
                    refractive_index=d.get("refractive_index", WATER_REFRACTIVE_INDEX),
                )
                for d in data["drops"]
            ),
            camera=CameraParams(**data["camera"]),
            rng_seed=data["rng_seed"],
        )


@dataclass(frozen=True)
class DropFieldConfig:
    count_range: tuple[int, int] = (4, 12)
    radius_range_px: tuple[float, float] = (6.0, 20.0)
    height_ratio_range: tuple[float, float] = (0.25, 0.7)
    seed: int = 0


def sample_drop_field(config: DropFieldConfig, camera: CameraParams, image_dims: tuple[int, int]) -> RaindropField:
    """Draw a random drop field; deterministic for a fixed config seed.

    Centers are placed so every footprint stays fully inside the image.
    Overlapping drops are allowed.
    """
    h, w = image_dims
    lo, hi = config.count_range
    if not 0 <= lo <= hi <= 200:
        raise ValueError(f"count_range must satisfy 0 <= lo <= hi <= 200, got {config.count_range}")
    rlo, rhi = config.radius_range_px
    if not 2 <= rlo <= rhi:
        raise ValueError(f"radius_range_px must satisfy 2 <= lo <= hi, got {config.radius_range_px}")
    hlo, hhi = config.height_ratio_range
    if not 0 < hlo <= hhi <= 1:
        raise ValueError(f"height_ratio_range must lie in (0, 1], got {config.height_ratio_range}")
    if 2 * rhi >= min(h, w):
        raise ValueError(f"max radius {rhi} does not fit a {h}x{w} image")
    rng = make_rng(config.seed)
    count = int(rng.integers(lo, hi + 1))
    drops = []
    for _ in range(count):
        radius = float(rng.uniform(rlo, rhi))
        row = float(rng.uniform(radius, h - 1 - radius))
        col = float(rng.uniform(radius, w - 1 - radius))
        height = float(rng.uniform(hlo, hhi))
        drops.append(DropGeometry(center=(row, col), radius_px=radius, height_ratio=height))
    return RaindropField(drops=tuple(drops), camera=camera, rng_seed=config.seed)


# ---------------------------------------------------------------------------
# Optics
# ---------------------------------------------------------------------------

def refract_ray(incident: np.ndarray, surface_normal: np.ndarray, n1: float, n2: float) -> np.ndarray:
    """Refract a unit direction at an interface using vector-form Snell's law.

    The normal must oppose the incident direction (incident . normal < 0).
    Raises TotalInternalReflection when the discriminant goes negative.
    """
    i = np.asarray(incident, dtype=np.float64)
    n = np.asarray(surface_normal, dtype=np.float64)
    if n1 <= 0 or n2 <= 0:
        raise ValueError("refractive indices must be positive")
    for name, v in (("incident", i), ("surface_normal", n)):
        if abs(np.linalg.norm(v) - 1.0) > 1e-6:
            raise ValueError(f"{name} must be a unit vector")
    cos_i = -float(np.dot(i, n))
    if cos_i < 0:
        raise ValueError("surface normal must oppose the incident direction")
    mu = n1 / n2
    disc = 1.0 - mu**2 * (1.0 - cos_i**2)
    if disc < 0:
        raise TotalInternalReflection(f"sin(theta_i)={math.sqrt(1 - cos_i**2):.6f} exceeds n2/n1={n2 / n1:.6f}")
    t = mu * i + (mu * cos_i - math.sqrt(disc)) * n
    return t / np.linalg.norm(t)


def _cap_sphere_radius(geom: DropGeometry) -> tuple[float, float]:
    a = geom.radius_px
    h = geom.height_ratio * a
    return h, (a**2 + h**2) / (2.0 * h)


def drop_surface(point: tuple[float, float], geom: DropGeometry):
    """Height and outward normal of the cap at a (row, col) offset from its center.

    Works in a frame with x along +col, y along +row, and z toward the
    camera, so the normal at the apex is (0, 0, 1). Returns None outside
    the footprint; the height is 0 exactly on the rim.
    """
    dr, dc = point
    d2 = dr * dr + dc * dc
    a = geom.radius_px
    if d2 > a * a:
        return None
    h, sphere_r = _cap_sphere_radius(geom)
    zc = h - sphere_r  # sphere center depth along +z (behind the rim plane)
    axial = math.sqrt(max(sphere_r**2 - d2, 0.0))
    height = zc + axial
    normal = np.array([dc, dr, axial]) / sphere_r
    return max(height, 0.0), normal


def _rotate_pitch(vecs: np.ndarray, pitch_rad: float) -> np.ndarray:
    """Rotate 3-vectors about the camera x axis (stacked in the last axis)."""
    if pitch_rad == 0.0:
        return vecs
    c, s = math.cos(pitch_rad), math.sin(pitch_rad)
    rot = np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    return vecs @ rot.T


def trace_drop_sources(image_dims: tuple[int, int], field: RaindropField):
    """Ray-trace every in-drop pixel to its background source coordinate.

    Returns (src_rows, src_cols, mask): float maps holding the fractional
    clean-image coordinate each drop pixel refracts to (NaN for lost rays
    and for pixels outside every drop) and the exact union-of-footprints
    mask. Later drops in the field overwrite earlier ones on overlap.
    """
    h, w = image_dims
    cam = field.camera
    f = cam.focal_length_px
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    pitch = math.radians(cam.glass_pitch_deg)
    glass_normal = _rotate_pitch(np.array([0.0, 0.0, -1.0]), pitch)  # toward camera
    glass_point = np.array([0.0, 0.0, cam.glass_distance_m])
    plane_offset = float(glass_point @ glass_normal)

    src_rows = np.full((h, w), np.nan)
    src_cols = np.full((h, w), np.nan)
    mask = np.zeros((h, w), dtype=np.uint8)

    for geom in field.drops:
        r0, c0 = geom.center
        a = geom.radius_px
        rmin = max(int(math.floor(r0 - a)), 0)
        rmax = min(int(math.ceil(r0 + a)), h - 1)
        cmin = max(int(math.floor(c0 - a)), 0)
        cmax = min(int(math.ceil(c0 + a)), w - 1)
        rows, cols = np.mgrid[rmin : rmax + 1, cmin : cmax + 1]
        dr = rows - r0
        dc = cols - c0
        inside = dr * dr + dc * dc <= a * a
        if not inside.any():
            continue
        dr = dr[inside].astype(np.float64)
        dc = dc[inside].astype(np.float64)
        rr = rows[inside]
        cc = cols[inside]
        mask[rr, cc] = 1

        # Cap surface in the camera-facing local frame, then into camera coords.
        hgt, sphere_r = _cap_sphere_radius(geom)
        zc = hgt - sphere_r
        axial = np.sqrt(np.maximum(sphere_r**2 - (dr * dr + dc * dc), 0.0))
        cap_height_px = np.maximum(zc + axial, 0.0)
        normals = np.stack([dc, dr, -axial], axis=-1) / sphere_r  # camera frame: z forward
        normals = _rotate_pitch(normals, pitch)

        # Ray through each pixel, intersected with the (possibly tilted) glass.
        dirs = np.stack([(cc - cx) / f, (rr - cy) / f, np.ones_like(dr)], axis=-1)
        dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
        denom = dirs @ glass_normal
        s_glass = plane_offset / denom
        p_glass = dirs * s_glass[:, None]
        # Surface point sits above the glass toward the camera by the cap height.
        meters_per_px = cam.glass_distance_m / f
        p_surf = p_glass + glass_normal * (cap_height_px * meters_per_px)[:, None]

        # Vectorized Snell refraction, air -> water.
        cos_i = -np.einsum("ij,ij->i", dirs, normals)
        mu = 1.0 / geom.refractive_index
        disc = 1.0 - mu**2 * (1.0 - cos_i**2)
        ok = (disc >= 0) & (cos_i > 0)
        t = mu * dirs + ((mu * cos_i - np.sqrt(np.maximum(disc, 0.0)))[:, None]) * normals
        t /= np.linalg.norm(t, axis=-1, keepdims=True)

        ok &= t[:, 2] > 1e-9
        travel = np.where(ok, (cam.background_distance_m - p_surf[:, 2]) / np.where(ok, t[:, 2], 1.0), np.nan)
        hit = p_surf + t * travel[:, None]
        u = f * hit[:, 0] / hit[:, 2] + cx
        v = f * hit[:, 1] / hit[:, 2] + cy
        ok &= (u >= 0) & (u <= w - 1) & (v >= 0) & (v <= h - 1)

        src_rows[rr, cc] = np.where(ok, v, np.nan)
        src_cols[rr, cc] = np.where(ok, u, np.nan)

    return src_rows, src_cols, mask


def render_drops(
    clean: np.ndarray,
    field: RaindropField,
    attenuation: float = DROP_ATTENUATION,
    lost_darken: float = LOST_RAY_DARKEN,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite synthetic raindrops onto a clean RGB image.

    Returns the rainy image and the exact footprint mask. In-drop pixels
    show the refracted background sample scaled by ``attenuation``; rays
    that are lost render the underlying clean pixel scaled by
    ``lost_darken``. Everything outside the mask is copied unchanged.
    """
    clean = check_rgb(clean)
    h, w = clean.shape[:2]
    src_rows, src_cols, mask = trace_drop_sources((h, w), field)
    rainy = clean.copy()
    in_drop = mask.astype(bool)
    landed = in_drop & np.isfinite(src_rows)
    lost = in_drop & ~np.isfinite(src_rows)
    if landed.any():
        rainy[landed] = attenuation * bilinear_sample(clean, src_rows[landed], src_cols[landed])
    if lost.any():
        rainy[lost] = lost_darken * clean[lost]
    return rainy, mask


def load_camera_json(path, default: CameraParams | None = None) -> CameraParams:
    """Build CameraParams from a per-image camera file.

    Reads intrinsic.fx (falling back to intrinsic.fy) as the focal length
    in pixels; u0/v0 are accepted but not needed since rendering uses the
    image center as the principal point. A missing file returns the
    default parameters.
    """
    default = default or CameraParams()
    path = Path(path)
    if not path.is_file():
        return default
    data = json.loads(path.read_text())
    intrinsic = data.get("intrinsic", {})
    focal = intrinsic.get("fx", intrinsic.get("fy"))
    if focal is None:
        return default
    return CameraParams(
        focal_length_px=float(focal),
        glass_distance_m=default.glass_distance_m,
        glass_pitch_deg=default.glass_pitch_deg,
        background_distance_m=default.background_distance_m,
    )
