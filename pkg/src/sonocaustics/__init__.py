"""Phased-array acoustic holograms driving a simulated liquid-surface
caustics display, with closed-loop digital-twin refinement."""

from .camera import CaptureConfig, Homography, capture, estimate_homography, rectify, warp_image
from .field import (
    AmplitudeField,
    ComplexField,
    SamplingPlane,
    TransducerArray,
    amplitude,
    bessel_j1,
    contribution_matrix,
    directivity,
    pressure_field,
)
from .metrics import ContrastReport, ResolutionScene, make_target_mask, two_circle_harness, weber_contrast
from .optimize import (
    Adam,
    OptimConfig,
    OptimTrace,
    PhasePlan,
    TargetImage,
    discretize_phases,
    grad_loss,
    loss_num,
    normalize_minmax,
    optimize,
    time_avg_amplitude,
)
from .plant import (
    CausticImage,
    HeightField,
    PlantParams,
    deform_surface,
    refract_ray,
    refract_rays,
    render_caustics,
    surface_normals,
)
from .twin import TwinConfig, TwinTrace, compose_dt, cosine_loss, run_twin

__version__ = "0.1.0"
