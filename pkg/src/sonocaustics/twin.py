"""Closed-loop refinement against the simulated plant.

Each step renders the current plan through the plant and capture chain,
composes the captured image with the numerical field under a stop-gradient
rule (forward value is the capture, gradients flow only through the
numerical model), and takes one Adam step on the cosine-similarity loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import CaptureConfig, Homography, capture, rectify
from .field import AmplitudeField, SamplingPlane, TransducerArray, contribution_matrix
from .metrics import make_target_mask, weber_contrast
from .optimize import (
    Adam,
    PhasePlan,
    TargetImage,
    _avg_amplitude,
    _frame_pressures,
    _normalize_backward,
    _phase_gradient,
    normalize_minmax,
)
from .plant import PlantParams, deform_surface, render_caustics

__all__ = [
    "TwinConfig",
    "TwinTrace",
    "ComposedField",
    "cosine_loss",
    "cosine_grad",
    "compose_dt",
    "SimulatedRig",
    "twin_step",
    "run_twin",
]


def cosine_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """1 - cosine similarity of the two grids flattened as vectors."""
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(target, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ValueError("grid dimensions do not match")
    np_norm = np.linalg.norm(p)
    nt_norm = np.linalg.norm(t)
    if np_norm == 0.0 or nt_norm == 0.0:
        raise ValueError("cosine loss undefined for a zero-norm grid")
    return float(1.0 - np.dot(p, t) / (np_norm * nt_norm))


def cosine_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d(cosine_loss)/d(pred), same shape as pred."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    np_norm = np.linalg.norm(p)
    nt_norm = np.linalg.norm(t)
    if np_norm == 0.0 or nt_norm == 0.0:
        raise ValueError("cosine gradient undefined for a zero-norm grid")
    dot = float((p * t).sum())
    return -(t / (np_norm * nt_norm) - dot * p / (np_norm**3 * nt_norm))


@dataclass
class ComposedField:
    """Result of the stop-gradient composition.

    The forward value is exactly the captured image; the gradient with
    respect to the numerical field is the identity, because the captured
    residual is held constant during differentiation.
    """

    value: np.ndarray

    def backward(self, grad_value: np.ndarray) -> np.ndarray:
        return grad_value


def compose_dt(p_num: np.ndarray, c_img: np.ndarray) -> ComposedField:
    """p_num + stop_gradient(c_img - p_num): value c_img, gradient via p_num."""
    p_num = np.asarray(p_num, dtype=np.float64)
    c_img = np.asarray(c_img, dtype=np.float64)
    if p_num.shape != c_img.shape:
        raise ValueError("grid dimensions do not match")
    # p_num + (c_img - p_num) simplifies to c_img; forming it literally would
    # cost a rounding error, so the capture is returned bit-exact.
    return ComposedField(c_img.copy())


class SimulatedRig:
    """Plant + capture chain; counts plant evaluations for instrumentation."""

    def __init__(self, plant: PlantParams, camera: CaptureConfig, plane: SamplingPlane):
        self.plant = plant
        self.camera = camera
        self.plane = plane
        self.plant_evals = 0
        flat = AmplitudeField(plane, np.zeros((plane.ny, plane.nx)))
        rest = render_caustics(deform_surface(flat, plant), plant)
        self.background = capture(rest.values, camera)
        self.h_est = camera.true_homography  # exact calibration by default

    def observe(self, p_avg: AmplitudeField) -> np.ndarray:
        """One deform + render + capture + rectify pass; returns C_img."""
        self.plant_evals += 1
        caustic = render_caustics(deform_surface(p_avg, self.plant), self.plant)
        raw = capture(caustic.values, self.camera)
        return rectify(raw, self.h_est, self.background)


@dataclass
class TwinConfig:
    initial_plan: PhasePlan
    target: TargetImage
    plant: PlantParams = field(default_factory=PlantParams)
    camera: CaptureConfig = None
    steps: int = 300
    learning_rate: float = 0.02
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    track_contrast: bool = False
    contrast_threshold: float = 0.5
    snapshot_every: int = 0  # 0 disables snapshots

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.camera is None:
            shape = self.target.values.shape
            self.camera = CaptureConfig(Homography.identity(), seed=self.seed)


@dataclass
class TwinTrace:
    losses: np.ndarray  # L_dt per step
    contrasts: np.ndarray | None  # |Weber| per step when tracked
    plan: PhasePlan
    final_capture: np.ndarray  # last C_img (or initial observation if steps=0)
    snapshots: list  # (step, C_img) pairs


def twin_step(
    contributions: np.ndarray,
    phases: np.ndarray,
    target_flat: np.ndarray,
    rig: SimulatedRig,
    adam: Adam,
    plane: SamplingPlane,
) -> tuple[np.ndarray, float, np.ndarray]:
    """One closed-loop iteration; returns (new phases, loss, C_img)."""
    pressures = _frame_pressures(contributions, phases)
    avg = _avg_amplitude(pressures)
    p_num = normalize_minmax(avg)

    c_img = rig.observe(AmplitudeField(plane, avg.reshape(plane.ny, plane.nx)))
    composed = compose_dt(p_num, c_img.ravel())

    if np.linalg.norm(composed.value) == 0.0:
        # Pathological all-dark capture: maximal dissimilarity, zero update.
        return phases, 1.0, c_img
    loss = cosine_loss(composed.value, target_flat)
    grad_value = cosine_grad(composed.value, target_flat)
    grad_pnum = composed.backward(grad_value)
    grad_avg = _normalize_backward(avg, p_num, grad_pnum)
    grad = _phase_gradient(contributions, phases, pressures, grad_avg)
    return adam.step(phases, grad), loss, c_img


def run_twin(
    cfg: TwinConfig,
    array: TransducerArray,
    plane: SamplingPlane,
    contributions: np.ndarray | None = None,
) -> TwinTrace:
    """Run cfg.steps closed-loop iterations from the numerical plan."""
    if cfg.target.values.shape != (plane.ny, plane.nx):
        raise ValueError("target dimensions do not match the plane")
    if contributions is None:
        contributions = contribution_matrix(array, plane)
    rig = SimulatedRig(cfg.plant, cfg.camera, plane)
    adam = Adam(
        cfg.initial_plan.phases.shape,
        lr=cfg.learning_rate,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        eps=cfg.epsilon,
    )
    phases = cfg.initial_plan.phases.copy()
    target_flat = cfg.target.values.ravel()
    mask = make_target_mask(cfg.target, cfg.contrast_threshold) if cfg.track_contrast else None

    losses = np.empty(cfg.steps)
    contrasts = np.empty(cfg.steps) if cfg.track_contrast else None
    snapshots = []
    last_capture = None
    for step in range(cfg.steps):
        phases, loss, c_img = twin_step(
            contributions, phases, target_flat, rig, adam, plane
        )
        losses[step] = loss
        last_capture = c_img
        if cfg.track_contrast:
            # Contrast is measured on the rendered light, i.e. the capture
            # before inversion.
            contrasts[step] = abs(weber_contrast(1.0 - c_img, mask).contrast)
        if cfg.snapshot_every and (step + 1) % cfg.snapshot_every == 0:
            snapshots.append((step + 1, c_img.copy()))

    if last_capture is None:
        pressures = _frame_pressures(contributions, phases)
        avg = _avg_amplitude(pressures)
        last_capture = rig.observe(AmplitudeField(plane, avg.reshape(plane.ny, plane.nx)))
    return TwinTrace(losses, contrasts, PhasePlan(phases), last_capture, snapshots)
