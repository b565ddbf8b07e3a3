"""Phase-plan optimization: match the (time-averaged) normalized pressure
amplitude to a target image with an L1 loss, Adam, and hand-derived
reverse-mode gradients.

The gradient chain is |p| -> time average -> min-max normalization -> L1.
For p = sum_m c_m exp(i phi_m), d|p|/dphi_m = Re(conj(p) * i * c_m *
exp(i phi_m)) / |p|; the normalization routes its min/max subgradients to
the first arg-extremum in row-major order (numpy argmin/argmax behavior).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .field import (
    AmplitudeField,
    SamplingPlane,
    TransducerArray,
    contribution_matrix,
)

__all__ = [
    "TargetImage",
    "PhasePlan",
    "OptimConfig",
    "OptimTrace",
    "Adam",
    "normalize_minmax",
    "loss_num",
    "time_avg_amplitude",
    "grad_loss",
    "optimize",
    "discretize_phases",
]

TWO_PI = 2.0 * np.pi


@dataclass
class TargetImage:
    """Grayscale target, stored inverted: desired shadow (black) ~ 1, white ~ 0."""

    values: np.ndarray  # (ny, nx) in [0, 1]
    inverted: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("target must be a 2-D grayscale image")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("target contains non-finite values")
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise ValueError("target values must lie in [0, 1]")


@dataclass
class PhasePlan:
    """F frames of per-transducer phase delays, radians."""

    phases: np.ndarray  # (F, M)

    def __post_init__(self):
        self.phases = np.atleast_2d(np.asarray(self.phases, dtype=np.float64))
        if self.phases.shape[0] < 1:
            raise ValueError("plan needs at least one frame")

    @property
    def frames(self) -> int:
        return self.phases.shape[0]

    @property
    def num_transducers(self) -> int:
        return self.phases.shape[1]

    def wrapped(self) -> np.ndarray:
        """Phases wrapped to [0, 2*pi) for export."""
        return np.mod(self.phases, TWO_PI)


@dataclass
class OptimConfig:
    steps: int = 1000  # fixed step count, no convergence criterion
    learning_rate: float = 0.05  # large steps suit phases spanning [0, 2*pi)
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("decay rates must lie in [0, 1)")


@dataclass
class OptimTrace:
    losses: np.ndarray  # one value per step, evaluated before each update
    plan: PhasePlan
    initial_plan: PhasePlan


class Adam:
    """Plain Adam with bias correction; state advances strictly sequentially."""

    def __init__(self, shape, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def normalize_minmax(values: np.ndarray) -> np.ndarray:
    """(x - min)/(max - min); a constant input maps to all zeros."""
    values = np.asarray(values, dtype=np.float64)
    lo = values.min()
    hi = values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def _normalize_backward(flat: np.ndarray, normed: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Backprop through min-max normalization of a flattened array.

    Ties route to the first extremum (argmin/argmax on the flat array).
    """
    lo = flat.min()
    hi = flat.max()
    if hi == lo:
        return np.zeros_like(flat)
    span = hi - lo
    imin = int(np.argmin(flat))
    imax = int(np.argmax(flat))
    total = grad_out.sum()
    weighted = (grad_out * normed).sum()
    grad_in = grad_out / span
    grad_in[imin] -= (total - weighted) / span
    grad_in[imax] -= weighted / span
    return grad_in


def loss_num(target: TargetImage, pred: AmplitudeField) -> float:
    """L1 distance between the min-max-normalized target and prediction."""
    if target.values.shape != pred.values.shape:
        raise ValueError("target and prediction dimensions do not match")
    t_n = normalize_minmax(target.values)
    p_n = normalize_minmax(pred.values)
    return float(np.abs(t_n - p_n).sum())


def _frame_pressures(contributions: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """Complex pressure per frame, shape (F, N).

    Evaluated one frame at a time so a frame's field does not depend on how
    many other frames share the plan (BLAS blocking differs between matrix
    shapes, which would break bitwise frame-count invariance).
    """
    out = np.empty((phases.shape[0], contributions.shape[1]), dtype=np.complex128)
    for f in range(phases.shape[0]):
        out[f] = np.exp(1j * phases[f]) @ contributions
    return out


def _avg_amplitude(pressures: np.ndarray) -> np.ndarray:
    """Mean of per-frame amplitudes, shape (N,).

    Computed as a shifted mean so that identical frames reproduce the
    single-frame amplitude bit-for-bit.
    """
    amps = np.abs(pressures)
    base = amps[0]
    return base + (amps - base).sum(axis=0) / amps.shape[0]


def time_avg_amplitude(
    array: TransducerArray,
    plan: PhasePlan,
    plane: SamplingPlane,
    contributions: np.ndarray | None = None,
) -> AmplitudeField:
    """Time-averaged pressure amplitude: mean over frames of |p_f|."""
    if contributions is None:
        contributions = contribution_matrix(array, plane)
    pressures = _frame_pressures(contributions, plan.phases)
    avg = _avg_amplitude(pressures)
    return AmplitudeField(plane, avg.reshape(plane.ny, plane.nx))


def _phase_gradient(
    contributions: np.ndarray,
    phases: np.ndarray,
    pressures: np.ndarray,
    grad_avg: np.ndarray,
) -> np.ndarray:
    """Backprop d(loss)/d(avg amplitude) to the (F, M) phase gradient."""
    frames = phases.shape[0]
    amps = np.abs(pressures)
    grad = np.empty_like(phases)
    for f in range(frames):
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(amps[f] > 0.0, grad_avg / (frames * amps[f]), 0.0)
        u = 1j * w * np.conj(pressures[f])
        grad[f] = np.real(np.exp(1j * phases[f]) * (contributions @ u))
    return grad


def _loss_and_grad(
    contributions: np.ndarray,
    phases: np.ndarray,
    target_norm: np.ndarray,
) -> tuple[float, np.ndarray]:
    pressures = _frame_pressures(contributions, phases)
    avg = _avg_amplitude(pressures)
    pred_norm = normalize_minmax(avg)
    diff = pred_norm - target_norm
    loss = float(np.abs(diff).sum())
    grad_pred = np.sign(diff)
    grad_avg = _normalize_backward(avg, pred_norm, grad_pred)
    return loss, _phase_gradient(contributions, phases, pressures, grad_avg)


def grad_loss(
    array: TransducerArray,
    plan: PhasePlan,
    plane: SamplingPlane,
    target: TargetImage,
    contributions: np.ndarray | None = None,
) -> np.ndarray:
    """Analytic d(loss_num)/d(phi) for every frame and transducer, (F, M)."""
    if target.values.shape != (plane.ny, plane.nx):
        raise ValueError("target dimensions do not match the plane")
    if contributions is None:
        contributions = contribution_matrix(array, plane)
    target_norm = normalize_minmax(target.values).ravel()
    _, grad = _loss_and_grad(contributions, plan.phases, target_norm)
    return grad


def optimize(
    array: TransducerArray,
    plane: SamplingPlane,
    target: TargetImage,
    frames: int = 1,
    config: OptimConfig | None = None,
    contributions: np.ndarray | None = None,
) -> OptimTrace:
    """Run the fixed-step Adam loop from a seeded random phase plan."""
    if config is None:
        config = OptimConfig()
    if frames < 1:
        raise ValueError("frame count must be at least 1")
    if target.values.shape != (plane.ny, plane.nx):
        raise ValueError("target dimensions do not match the plane")
    if contributions is None:
        contributions = contribution_matrix(array, plane)

    rng = np.random.default_rng(config.seed)
    phases = rng.uniform(0.0, TWO_PI, size=(frames, array.num_transducers))
    initial = PhasePlan(phases.copy())
    target_norm = normalize_minmax(target.values).ravel()

    adam = Adam(
        phases.shape,
        lr=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.epsilon,
    )
    losses = np.empty(config.steps)
    for step in range(config.steps):
        loss, grad = _loss_and_grad(contributions, phases, target_norm)
        losses[step] = loss
        phases = adam.step(phases, grad)
    return OptimTrace(losses, PhasePlan(phases), initial)


def discretize_phases(plan: PhasePlan, levels: int) -> np.ndarray:
    """Map each phase to round(phi / (2*pi/levels)) mod levels, as integers."""
    if levels < 2:
        raise ValueError("need at least 2 phase levels")
    step = TWO_PI / levels
    return (np.round(plan.phases / step).astype(np.int64)) % levels
