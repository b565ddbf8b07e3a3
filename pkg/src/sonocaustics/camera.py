"""Virtual capture chain: oblique camera view, four-point perspective
calibration, unwarp, background subtraction, and inversion into the
shadow-high convention used by the loss functions.

Pixel coordinates are (x, y) = (column, row); homographies act on
homogeneous pixel coordinates and are normalized so H[2, 2] == 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Homography",
    "CaptureConfig",
    "estimate_homography",
    "warp_image",
    "capture",
    "rectify",
    "oblique_view",
]


@dataclass(frozen=True)
class Homography:
    matrix: np.ndarray  # 3x3, bottom-right element 1

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64).reshape(3, 3)
        if abs(m[2, 2]) < 1e-12:
            raise ValueError("homography cannot be normalized (H[2,2] ~ 0)")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) < 1e-12:
            raise ValueError("homography is singular")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map (N, 2) points through the homography."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        homog = np.column_stack([pts, np.ones(len(pts))]) @ self.matrix.T
        return homog[:, :2] / homog[:, 2:3]


@dataclass
class CaptureConfig:
    """Stand-in for the physical camera: oblique view plus noise and glare."""

    true_homography: Homography
    noise_sigma: float = 0.0
    background_offset: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be non-negative")
        if not 0.0 <= self.background_offset < 1.0:
            raise ValueError("background offset must lie in [0, 1)")


def estimate_homography(src: np.ndarray, dst: np.ndarray) -> Homography:
    """Exact homography from 4 point correspondences (8x8 linear solve)."""
    src = np.asarray(src, dtype=np.float64).reshape(4, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(4, 2)
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((sx, sy), (dx, dy)) in enumerate(zip(src, dst)):
        a[2 * i] = [sx, sy, 1, 0, 0, 0, -sx * dx, -sy * dx]
        a[2 * i + 1] = [0, 0, 0, sx, sy, 1, -sx * dy, -sy * dy]
        b[2 * i] = dx
        b[2 * i + 1] = dy
    try:
        h = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate point configuration") from exc
    return Homography(np.append(h, 1.0).reshape(3, 3))


def warp_image(img: np.ndarray, h: Homography) -> np.ndarray:
    """Resample so out[y, x] = img at H^-1 (x, y), bilinear, 0 outside.

    Integer sample positions bypass interpolation, so the identity map is
    bit-exact and integer translations are exact shifts.
    """
    img = np.asarray(img, dtype=np.float64)
    ny, nx = img.shape
    inv = h.inverse().matrix
    xs, ys = np.meshgrid(np.arange(nx, dtype=np.float64), np.arange(ny, dtype=np.float64))
    denom = inv[2, 0] * xs + inv[2, 1] * ys + inv[2, 2]
    sx = (inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]) / denom
    sy = (inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]) / denom

    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    wx = sx - x0
    wy = sy - y0

    def sample(xi, yi):
        valid = (xi >= 0) & (xi < nx) & (yi >= 0) & (yi < ny)
        vals = np.zeros_like(img)
        vals[valid] = img[yi[valid], xi[valid]]
        return vals

    return (
        sample(x0, y0) * (1 - wx) * (1 - wy)
        + sample(x0 + 1, y0) * wx * (1 - wy)
        + sample(x0, y0 + 1) * (1 - wx) * wy
        + sample(x0 + 1, y0 + 1) * wx * wy
    )


def capture(caustic: np.ndarray, cfg: CaptureConfig) -> np.ndarray:
    """Simulated raw camera frame of a rendered caustic.

    Min-max normalizes, warps into the oblique view, then adds the constant
    background offset and seeded Gaussian noise, clamped to [0, 1].
    """
    caustic = np.asarray(caustic, dtype=np.float64)
    lo, hi = caustic.min(), caustic.max()
    norm = np.zeros_like(caustic) if hi == lo else (caustic - lo) / (hi - lo)
    raw = warp_image(norm, cfg.true_homography) + cfg.background_offset
    if cfg.noise_sigma > 0:
        rng = np.random.default_rng(cfg.seed)
        raw = raw + rng.normal(0.0, cfg.noise_sigma, size=raw.shape)
    return np.clip(raw, 0.0, 1.0)


def rectify(raw: np.ndarray, h_est: Homography, background: np.ndarray) -> np.ndarray:
    """Undo the oblique view, remove the background, and invert.

    The background frame must come from the same capture chain with the
    surface at rest. The output is in the shadow-high convention (dark
    caustic regions map to values near 1).
    """
    raw = np.asarray(raw, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    if raw.shape != background.shape:
        raise ValueError("raw and background dimensions do not match")
    flat = warp_image(raw, h_est.inverse())
    flat_bg = warp_image(background, h_est.inverse())
    diff = np.maximum(flat - flat_bg, 0.0)
    lo, hi = diff.min(), diff.max()
    if hi == lo:
        return np.ones_like(diff)  # degenerate: no light difference anywhere
    return 1.0 - (diff - lo) / (hi - lo)


def oblique_view(shape: tuple, skew: float = 0.05) -> Homography:
    """Mild trapezoidal camera pose for a (ny, nx) image; skew 0 = identity."""
    ny, nx = shape
    w, h = float(nx - 1), float(ny - 1)
    src = np.array([[0, 0], [w, 0], [w, h], [0, h]])
    dst = np.array(
        [
            [skew * w, skew * h * 0.5],
            [w - skew * w, skew * h * 0.5],
            [w * (1 - 0.4 * skew), h * (1 - 0.3 * skew)],
            [w * 0.4 * skew, h * (1 - 0.3 * skew)],
        ]
    )
    return estimate_homography(src, dst)
