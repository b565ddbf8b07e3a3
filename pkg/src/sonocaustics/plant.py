"""Simulated liquid plant: pressure -> surface depression -> refracted
caustic image on a screen above the surface.

Collimated light travels straight up (+z), refracts once at the deformed
oil surface (oil -> air), and each surviving ray deposits unit energy onto
the screen grid by bilinear splatting. Acoustic pressure only depresses the
surface (concave dimples), which bends light outward and darkens the
pattern under each pressure focus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .field import AmplitudeField, SamplingPlane

__all__ = [
    "PlantParams",
    "HeightField",
    "CausticImage",
    "deform_surface",
    "surface_normals",
    "refract_ray",
    "refract_rays",
    "render_caustics",
]


@dataclass
class PlantParams:
    """Deformation and optics knobs for the simulated oil surface.

    coupling is meters of depression per squared-pressure unit; the default
    is tuned (scripts/tune_coupling.py) so peak surface slope stays safely
    below the total-internal-reflection slope for the default checkerboard
    scene at unit reference pressure.
    """

    coupling: float = 1.0e-7  # m per Pa^2
    smoothing: float = 0.002  # Gaussian blur radius sigma, meters
    refractive_index: float = 1.40  # oil, vs air = 1.0
    screen_distance: float = 0.10  # meters above the surface
    rays_per_cell: int = 2  # supersampling factor per axis
    mean_free: bool = False  # subtract the mean depression (volume hold)
    model: str = "gaussian"  # "gaussian" blur proxy or "spectral" solver
    surface_tension: float = 0.0205  # N/m, spectral model only
    density: float = 975.0  # kg/m^3, spectral model only

    def __post_init__(self):
        if self.coupling < 0 or self.smoothing < 0:
            raise ValueError("coupling and smoothing must be non-negative")
        if not 1.0 < self.refractive_index < 2.0:
            raise ValueError("refractive index must lie in (1, 2)")
        if self.screen_distance <= 0:
            raise ValueError("screen distance must be positive")
        if self.rays_per_cell < 1:
            raise ValueError("need at least one ray per cell")
        if self.model not in ("gaussian", "spectral"):
            raise ValueError("model must be 'gaussian' or 'spectral'")


@dataclass
class HeightField:
    plane: SamplingPlane
    heights: np.ndarray  # (ny, nx) meters, negative = depression
    mean_free: bool = False

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=np.float64)
        if self.heights.shape != (self.plane.ny, self.plane.nx):
            raise ValueError("height grid does not match plane resolution")
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heights contain non-finite values")


@dataclass
class CausticImage:
    values: np.ndarray  # (ny, nx) relative irradiance, >= 0
    extent: tuple  # (width, height) meters on the screen
    rays_landed: int = 0  # rays that deposited energy (unit each)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("irradiance must be finite and non-negative")


def _gaussian_kernel(sigma_px: float) -> np.ndarray:
    """Discrete normalized Gaussian, truncated at 3 sigma."""
    radius = max(int(np.ceil(3.0 * sigma_px)), 1)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma_px) ** 2)
    return k / k.sum()


def deform_surface(p_avg: AmplitudeField, params: PlantParams) -> HeightField:
    """Surface depression from the squared pressure amplitude.

    gaussian model: h = -coupling * blur(p^2), strictly linear in p^2.
    spectral model: solves (rho*g - sigma*laplacian) h = -coupling' * p^2
    with periodic FFT boundaries (optional extension, off by default).
    """
    plane = p_avg.plane
    load = p_avg.values**2
    if params.model == "spectral":
        kx = 2.0 * np.pi * np.fft.fftfreq(plane.nx, plane.dx)
        ky = 2.0 * np.pi * np.fft.fftfreq(plane.ny, plane.dy)
        k2 = kx[None, :] ** 2 + ky[:, None] ** 2
        denom = params.density * 9.81 + params.surface_tension * k2
        h = -np.real(np.fft.ifft2(np.fft.fft2(params.coupling * load) / denom))
        h = np.minimum(h - h.max(), 0.0)  # keep the depression-only convention
    else:
        if params.smoothing > 0:
            kernel = _gaussian_kernel(params.smoothing / plane.dx)
            blurred = convolve1d(load, kernel, axis=1, mode="nearest")
            kernel_y = _gaussian_kernel(params.smoothing / plane.dy)
            blurred = convolve1d(blurred, kernel_y, axis=0, mode="nearest")
        else:
            blurred = load
        h = -params.coupling * blurred
    if params.mean_free:
        h = h - h.mean()
    return HeightField(plane, h, mean_free=params.mean_free)


def surface_normals(height: HeightField) -> np.ndarray:
    """Upward unit normals, shape (ny, nx, 3), from central differences."""
    if height.plane.nx < 2 or height.plane.ny < 2:
        raise ValueError("need at least a 2x2 grid for normals")
    dh_dy, dh_dx = np.gradient(height.heights, height.plane.dy, height.plane.dx)
    n = np.stack([-dh_dx, -dh_dy, np.ones_like(dh_dx)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def refract_rays(
    directions: np.ndarray,
    normals: np.ndarray,
    n1: float,
    n2: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Vector Snell refraction for batches of unit rays.

    Normals must point against the incoming rays (dir . normal < 0).
    Returns (refracted directions, TIR mask); TIR rows are zeroed.
    """
    eta = n1 / n2
    cos_i = -np.sum(directions * normals, axis=-1)
    k = 1.0 - eta * eta * (1.0 - cos_i * cos_i)
    tir = k < 0.0
    cos_t = np.sqrt(np.where(tir, 0.0, k))
    out = eta * directions + (eta * cos_i - cos_t)[..., None] * normals
    out[tir] = 0.0
    return out, tir


def refract_ray(direction, normal, n1: float, n2: float):
    """Single-ray Snell refraction; returns None on total internal reflection."""
    d = np.asarray(direction, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    out, tir = refract_rays(d[None, :], n[None, :], n1, n2)
    if tir[0]:
        return None
    return out[0]


def render_caustics(height: HeightField, params: PlantParams) -> CausticImage:
    """Trace vertical rays through the surface onto the screen plane.

    One unit of energy per ray; rays lost to TIR or leaving the screen
    bounds deposit nothing, so the image sum equals the count of rays that
    land on-screen. Ray order is fixed, keeping images reproducible.
    """
    plane = height.plane
    nx, ny = plane.nx, plane.ny
    ss = params.rays_per_cell

    normals = surface_normals(height)

    # Launch positions: ss x ss sub-cell offsets around each cell center.
    offsets = (np.arange(ss) + 0.5) / ss - 0.5
    cell_x = plane.center[0] + (np.arange(nx) - (nx - 1) / 2.0) * plane.dx
    cell_y = plane.center[1] + (np.arange(ny) - (ny - 1) / 2.0) * plane.dy
    ox, oy = np.meshgrid(offsets * plane.dx, offsets * plane.dy)
    sub = np.column_stack([ox.ravel(), oy.ravel()])  # (ss*ss, 2)

    image = np.zeros((ny, nx))
    landed = 0
    up = np.array([0.0, 0.0, 1.0])
    n_flat = normals.reshape(-1, 3)
    h_flat = height.heights.ravel()
    gx, gy = np.meshgrid(cell_x, cell_y)
    base = np.column_stack([gx.ravel(), gy.ravel()])  # (N, 2) cell centers

    x0 = cell_x[0]
    y0 = cell_y[0]
    for off in sub:
        # The surface normal is sampled at the owning cell; height varies by
        # micrometers so launch height differences are negligible.
        pos = base + off[None, :]
        dirs = np.broadcast_to(up, (pos.shape[0], 3))
        refr, tir = refract_rays(dirs, -n_flat, params.refractive_index, 1.0)
        alive = ~tir & (refr[:, 2] > 1e-12)
        travel = (params.screen_distance - h_flat[alive]) / refr[alive, 2]
        land_x = pos[alive, 0] + refr[alive, 0] * travel
        land_y = pos[alive, 1] + refr[alive, 1] * travel
        fx = (land_x - x0) / plane.dx
        fy = (land_y - y0) / plane.dy
        # A ray is on-screen only if its full bilinear footprint fits.
        ok = (fx >= 0.0) & (fx <= nx - 1) & (fy >= 0.0) & (fy <= ny - 1)
        fx = fx[ok]
        fy = fy[ok]
        landed += int(ok.sum())
        ix = np.minimum(fx.astype(np.int64), nx - 2)
        iy = np.minimum(fy.astype(np.int64), ny - 2)
        wx = fx - ix
        wy = fy - iy
        w00 = (1.0 - wx) * (1.0 - wy)
        w10 = wx * (1.0 - wy)
        w01 = (1.0 - wx) * wy
        # Residual keeps per-ray energy at 1; clamp shields against a
        # rounding-negative residual.
        w11 = np.maximum(1.0 - w00 - w10 - w01, 0.0)
        np.add.at(image, (iy, ix), w00)
        np.add.at(image, (iy, ix + 1), w10)
        np.add.at(image, (iy + 1, ix), w01)
        np.add.at(image, (iy + 1, ix + 1), w11)
    return CausticImage(image, (plane.width, plane.height), rays_landed=landed)
