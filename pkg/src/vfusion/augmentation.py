"""Stochastic window augmentations, applied per sample at query time.

All transforms are pure functions of (window, parameters, rng) operating on
[window_len, channels] arrays and preserving the window shape. Policies are
task-dependent: the contrastive task gets stronger parameters than the
classification task (in particular, rotation over the full [-180, 180]
degree range).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from vfusion.errors import ConfigError, ShapeError

TASK_CLASSIFICATION = "classification"
TASK_CONTRASTIVE = "contrastive"


def _rotation_matrix(axis: np.ndarray, angle_deg: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if not np.isclose(norm, 1.0, atol=1e-6):
        raise ConfigError(f"rotation axis must be a unit vector, |axis|={norm:.4f}")
    theta = np.deg2rad(angle_deg)
    k = axis
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(theta) * kx + (1 - np.cos(theta)) * (kx @ kx)


def rotate_3d(window: np.ndarray, axis, angle_deg: float) -> np.ndarray:
    """Rotate every 3-vector sample by the axis-angle rotation.

    Channels are grouped in consecutive triples (a plain 3-axis sensor or
    J joints x 3 coordinates); each triple is rotated by the same matrix.
    """
    window = np.asarray(window, dtype=np.float64)
    t, c = window.shape
    if c % 3 != 0:
        raise ShapeError(f"channel count {c} is not a multiple of 3")
    rot = _rotation_matrix(axis, angle_deg)
    out = window.reshape(t, c // 3, 3) @ rot.T
    return out.reshape(t, c)


def rotate_z(window: np.ndarray, angle_deg: float) -> np.ndarray:
    """Rotation about the vertical axis; z-coordinates are unchanged."""
    return rotate_3d(window, (0.0, 0.0, 1.0), angle_deg)


def hflip_2d(window: np.ndarray) -> np.ndarray:
    """Negate x-coordinates of a J joints x 2 window (origin-centered)."""
    window = np.asarray(window, dtype=np.float64)
    t, c = window.shape
    if c % 2 != 0:
        raise ShapeError(f"channel count {c} is not a multiple of 2")
    out = window.copy()
    out[:, 0::2] = -out[:, 0::2]
    return out


def scale(window: np.ndarray, factor: float) -> np.ndarray:
    """Multiply all values by a positive factor."""
    if factor <= 0:
        raise ConfigError(f"scale factor must be positive, got {factor}")
    return np.asarray(window, dtype=np.float64) * factor


def _warp_curve(
    length: int, knots: int, sigma: float, rng: np.random.Generator
) -> np.ndarray:
    if knots < 2:
        raise ConfigError(f"need at least 2 knots, got {knots}")
    if sigma < 0:
        raise ConfigError(f"sigma must be non-negative, got {sigma}")
    knot_x = np.linspace(0, length - 1, knots)
    knot_y = rng.normal(1.0, sigma, size=knots)
    if sigma == 0:
        return np.ones(length)
    return CubicSpline(knot_x, knot_y)(np.arange(length))


def magnitude_warp(
    window: np.ndarray, knots: int, sigma: float, rng: np.random.Generator
) -> np.ndarray:
    """Multiply each channel by its own smooth random curve around 1."""
    window = np.asarray(window, dtype=np.float64)
    t, c = window.shape
    curves = np.stack([_warp_curve(t, knots, sigma, rng) for _ in range(c)], axis=1)
    return window * curves


def time_warp(
    window: np.ndarray, knots: int, sigma: float, rng: np.random.Generator
) -> np.ndarray:
    """Resample the window along a smooth monotone random time distortion."""
    window = np.asarray(window, dtype=np.float64)
    t, c = window.shape
    speed = np.clip(_warp_curve(t, knots, sigma, rng), 0.05, None)
    cum = np.concatenate([[0.0], np.cumsum(speed[:-1])])
    warped_t = cum / cum[-1] * (t - 1)  # monotone, endpoints fixed
    out = np.empty_like(window)
    for ch in range(c):
        out[:, ch] = np.interp(warped_t, np.arange(t), window[:, ch])
    return out


@dataclass(frozen=True)
class TransformSpec:
    """One transform with its (possibly random) parameter ranges."""

    name: str
    params: dict = field(default_factory=dict)


# parameter-range defaults; classification gets milder settings than contrastive
DEFAULT_CLS_ROTATION_DEG = 30.0
DEFAULT_WARP_SIGMA = {TASK_CLASSIFICATION: 0.2, TASK_CONTRASTIVE: 0.4}
DEFAULT_WARP_KNOTS = 4


def _apply_one(
    window: np.ndarray, spec: TransformSpec, rng: np.random.Generator
) -> np.ndarray:
    p = spec.params
    if spec.name == "rotate_3d":
        lo, hi = p.get("range_deg", (-180.0, 180.0))
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        return rotate_3d(window, axis, rng.uniform(lo, hi))
    if spec.name == "rotate_z":
        lo, hi = p.get("range_deg", (-180.0, 180.0))
        return rotate_z(window, rng.uniform(lo, hi))
    if spec.name == "hflip_2d":
        if rng.random() < p.get("prob", 0.5):
            return hflip_2d(window)
        return window
    if spec.name == "scale":
        lo, hi = p.get("range", (0.8, 1.2))
        return scale(window, rng.uniform(lo, hi))
    if spec.name == "magnitude_warp":
        return magnitude_warp(
            window,
            p.get("knots", DEFAULT_WARP_KNOTS),
            p.get("sigma", DEFAULT_WARP_SIGMA[TASK_CLASSIFICATION]),
            rng,
        )
    if spec.name == "time_warp":
        return time_warp(
            window,
            p.get("knots", DEFAULT_WARP_KNOTS),
            p.get("sigma", DEFAULT_WARP_SIGMA[TASK_CLASSIFICATION]),
            rng,
        )
    raise ConfigError(f"unknown transform {spec.name!r}")


_ROTATIONS = ("rotate_3d", "rotate_z")


@dataclass
class AugmentationPolicy:
    """Per-(modality, task) transform chains."""

    transforms: dict[tuple[str, str], list[TransformSpec]] = field(default_factory=dict)

    def __post_init__(self):
        for (modality, task), specs in self.transforms.items():
            if task not in (TASK_CLASSIFICATION, TASK_CONTRASTIVE):
                raise ConfigError(f"unknown task {task!r}")
            for spec in specs:
                if spec.name in _ROTATIONS:
                    lo, hi = spec.params.get("range_deg", (-180.0, 180.0))
                    if task == TASK_CONTRASTIVE and (lo, hi) != (-180.0, 180.0):
                        raise ConfigError(
                            f"{modality}: contrastive rotation range must be "
                            f"[-180, 180], got [{lo}, {hi}]"
                        )
                    if task == TASK_CLASSIFICATION and (lo < -180.0 or hi > 180.0):
                        raise ConfigError(
                            f"{modality}: classification rotation range "
                            f"[{lo}, {hi}] exceeds [-180, 180]"
                        )

    def for_task(self, modality: str, task: str) -> list[TransformSpec]:
        return self.transforms.get((modality, task), [])

    def apply(
        self, window: np.ndarray, modality: str, task: str, rng: np.random.Generator
    ) -> np.ndarray:
        """Apply the configured chain with freshly drawn parameters."""
        out = np.asarray(window, dtype=np.float64)
        for spec in self.for_task(modality, task):
            out = _apply_one(out, spec, rng)
        return out

    def apply_batch(
        self, windows: np.ndarray, modality: str, task: str, rng: np.random.Generator
    ) -> np.ndarray:
        """Independently augment each window in a [B, T, C] stack."""
        if not self.for_task(modality, task):
            return windows
        return np.stack([self.apply(w, modality, task, rng) for w in windows])


def apply_policy(
    sample: np.ndarray,
    modality: str,
    task: str,
    policy: AugmentationPolicy,
    rng: np.random.Generator,
) -> np.ndarray:
    """Functional entry point; empty policy returns the input unchanged."""
    return policy.apply(sample, modality, task, rng)
