"""Tour of the time-series augmentations and the per-task policy.

Each transform maps a [T, C] window to a window of the same shape. The
policy binds transform chains to (sensor, task) pairs so classification
views and contrastive views are perturbed differently.
"""

import numpy as np

from vfusion.augmentation import (
    TASK_CLASSIFICATION,
    TASK_CONTRASTIVE,
    AugmentationPolicy,
    TransformSpec,
    hflip_2d,
    magnitude_warp,
    rotate_3d,
    scale,
    time_warp,
)

rng = np.random.default_rng(0)
t = np.linspace(0, 4 * np.pi, 128)
window = np.stack([np.sin(t), np.cos(t), 0.5 * np.sin(2 * t)], axis=1)

axis = rng.standard_normal(3)
axis /= np.linalg.norm(axis)
rotated = rotate_3d(window, axis, angle_deg=73.0)
norms_before = np.linalg.norm(window, axis=1)
norms_after = np.linalg.norm(rotated, axis=1)
print(f"3-D rotation preserves per-frame norms: "
      f"max drift {np.abs(norms_before - norms_after).max():.2e}")

scaled = scale(window, 1.17)
print(f"scaling multiplies every value by one factor: "
      f"ratio spread {np.ptp(scaled[1:, 0] / window[1:, 0]):.2e}")

warped = magnitude_warp(window, knots=4, sigma=0.4, rng=rng)
print(f"magnitude warp keeps shape {warped.shape}, "
      f"mean abs change {np.abs(warped - window).mean():.3f}")

tw = time_warp(window, knots=4, sigma=0.3, rng=rng)
print(f"time warp keeps length {tw.shape[0]}, "
      f"start-point drift {np.abs(tw[0] - window[0]).max():.2e}")

flipped = hflip_2d(window[:, :2])
print(f"horizontal flip negates x: {np.allclose(flipped[:, 0], -window[:, 0])}")

# a policy: gentle rotation for classification views, full-range rotation
# plus stronger warping for contrastive views
policy = AugmentationPolicy(
    {
        ("imu", TASK_CLASSIFICATION): [
            TransformSpec("rotate_3d", {"range_deg": (-30.0, 30.0)}),
            TransformSpec("magnitude_warp", {"sigma": 0.2, "knots": 4}),
        ],
        ("imu", TASK_CONTRASTIVE): [
            TransformSpec("rotate_3d", {"range_deg": (-180.0, 180.0)}),
            TransformSpec("magnitude_warp", {"sigma": 0.4, "knots": 4}),
            TransformSpec("time_warp", {"sigma": 0.3, "knots": 4}),
        ],
    }
)
view_cls = policy.apply(window, "imu", TASK_CLASSIFICATION, rng)
view_ctr = policy.apply(window, "imu", TASK_CONTRASTIVE, rng)
print(f"classification view deviates {np.abs(view_cls - window).mean():.3f} on average, "
      f"contrastive view {np.abs(view_ctr - window).mean():.3f}")
