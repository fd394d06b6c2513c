"""Closed-form pose recovery from predicted rays and points.

Two differentiable sub-solvers and their decoupled combination:

    kabsch_rotation   best rotation aligning weighted vector correspondences
    rigid_align       best rotation + translation for point correspondences
    recover_pose      rotation from the ray branch, translation from the
                      point branch; the point-branch rotation is kept only
                      for diagnostics/ablation

Both solvers reduce to a 3x3 SVD of the weighted cross-covariance
H = sum_i w_i target_i source_i^T with the usual determinant correction
R = U diag(1, 1, det(UV^T)) V^T, which restricts the orthogonal Procrustes
optimum to proper rotations (no reflections, no scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import PointMap, RayBundle
from .geometry import Pose, Rotation

__all__ = [
    "DEGENERACY_RTOL",
    "AlignmentProblem",
    "SolveDiagnostics",
    "PoseRecovery",
    "DegenerateConfiguration",
    "kabsch_rotation",
    "rigid_align",
    "recover_pose",
]

# Relative gate on the cross-covariance spectrum: sigma_2 / sigma_1 below
# this means the correspondences are collinear to working precision and the
# rotation about that axis is unobservable.
DEGENERACY_RTOL = 1e-9


class DegenerateConfiguration(RuntimeError):
    """Raised when the aligned vectors/points do not pin down a rotation."""

    def __init__(self, message: str, branch: str | None = None):
        super().__init__(message)
        self.branch = branch


@dataclass(frozen=True)
class AlignmentProblem:
    """Weighted correspondences source_i -> target_i, rows of (m, 3) arrays.

    weights=None means uniform. Weights must be nonnegative with a positive
    sum; m must be at least 3 so the cross-covariance can have rank > 1.
    """

    source: np.ndarray
    target: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        src = np.asarray(self.source, dtype=np.float64)
        tgt = np.asarray(self.target, dtype=np.float64)
        if src.ndim != 2 or src.shape[1] != 3:
            raise ValueError(f"source must be (m, 3), got {src.shape}")
        if tgt.shape != src.shape:
            raise ValueError(
                f"target shape {tgt.shape} does not match source shape {src.shape}"
            )
        if src.shape[0] < 3:
            raise ValueError("need at least 3 correspondences")
        if not (np.all(np.isfinite(src)) and np.all(np.isfinite(tgt))):
            raise ValueError("correspondences contain non-finite entries")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", tgt)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (src.shape[0],):
                raise ValueError(f"weights must be ({src.shape[0]},), got {w.shape}")
            if not np.all(np.isfinite(w)) or np.any(w < 0.0):
                raise ValueError("weights must be finite and nonnegative")
            if w.sum() <= 0.0:
                raise ValueError("weights must have a positive sum")
            object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.source.shape[0]

    def effective_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(self.size)
        return self.weights


@dataclass(frozen=True)
class SolveDiagnostics:
    """Spectrum and correction flags from one Procrustes solve.

    singular_values are the descending singular values of the weighted
    cross-covariance; condition is sigma_1 / sigma_3 (inf when sigma_3 = 0);
    reflection_corrected records whether the determinant sign flip fired.
    """

    singular_values: tuple[float, float, float]
    reflection_corrected: bool
    condition: float


@dataclass(frozen=True)
class PoseRecovery:
    """recover_pose output: the decoupled pose plus per-branch diagnostics."""

    pose: Pose
    rotation_from_points: Rotation
    ray_diagnostics: SolveDiagnostics
    point_diagnostics: SolveDiagnostics


def _normalized_rows(arr: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise ValueError(f"cannot normalize near-zero {what} rows")
    return arr / norms


def _cross_covariance(problem: AlignmentProblem, normalize: bool):
    """H = sum_i w_i target_i source_i^T, optionally on renormalized rows."""
    src = problem.source
    tgt = problem.target
    if normalize:
        src = _normalized_rows(src, "source")
        tgt = _normalized_rows(tgt, "target")
    w = problem.effective_weights()
    h = (w[:, np.newaxis] * tgt).T @ src
    return h, src, tgt, w


def _svd_rotation(h: np.ndarray):
    """SVD of H plus the det-corrected rotation and diagnostics.

    Returns (rotation_matrix, diagnostics, (u, s, vt, sign)); the raw factors
    feed the analytic gradient code, which must reuse the exact same
    decomposition as the forward pass.
    """
    u, s, vt = np.linalg.svd(h)
    if s[0] <= 0.0 or s[1] < DEGENERACY_RTOL * s[0]:
        raise DegenerateConfiguration(
            "correspondences are collinear to working precision "
            f"(singular values {s[0]:.3e}, {s[1]:.3e}, {s[2]:.3e})"
        )
    sign = 1.0 if float(np.linalg.det(u) * np.linalg.det(vt)) > 0.0 else -1.0
    if sign < 0.0:
        r = (u * np.array([1.0, 1.0, -1.0])) @ vt  # flip the third left vector
    else:
        r = u @ vt
    condition = float(s[0] / s[2]) if s[2] > 0.0 else math.inf
    diag = SolveDiagnostics(
        singular_values=(float(s[0]), float(s[1]), float(s[2])),
        reflection_corrected=sign < 0.0,
        condition=condition,
    )
    return r, diag, (u, s, vt, sign)


def kabsch_rotation(
    problem: AlignmentProblem, normalize: bool = True
) -> tuple[Rotation, SolveDiagnostics]:
    """Rotation minimizing sum_i w_i ||R source_i - target_i||^2 over SO(3).

    normalize=True renormalizes rows first (the ray use-case: predicted
    directions may drift off the unit sphere, and direction alignment should
    not reward magnitude). Pass normalize=False to solve on raw vectors,
    e.g. for centered point sets.

    Raises DegenerateConfiguration when the inputs are collinear
    (sigma_2 / sigma_1 < DEGENERACY_RTOL): the component of the rotation
    about the common axis is unobservable.
    """
    h, _, _, _ = _cross_covariance(problem, normalize)
    r, diag, _ = _svd_rotation(h)
    return Rotation(r), diag


def rigid_align(problem: AlignmentProblem) -> tuple[Pose, SolveDiagnostics]:
    """Rotation and translation minimizing sum_i w_i ||R s_i + t - t_i||^2.

    Classic closed form: subtract weighted centroids, solve the rotation on
    the centered sets (without renormalizing: magnitudes carry information
    here), then t = centroid(target) - R centroid(source). Scale is fixed
    to 1 by construction.
    """
    w = problem.effective_weights()
    wsum = float(w.sum())
    c_src = (w @ problem.source) / wsum
    c_tgt = (w @ problem.target) / wsum
    centered = AlignmentProblem(
        problem.source - c_src, problem.target - c_tgt, problem.weights
    )
    rot, diag = kabsch_rotation(centered, normalize=False)
    t = c_tgt - rot.m @ c_src
    return Pose(rot, t), diag


def recover_pose(
    rays_cam: RayBundle,
    pts_cam: PointMap,
    rays_pred: RayBundle,
    pts_pred: PointMap,
    weights: np.ndarray | None = None,
) -> PoseRecovery:
    """Decoupled pose recovery from predicted world-frame representations.

    The returned pose takes its rotation from the ray-bundle alignment and
    its translation from the rigid point registration. The rotation the
    point branch produced as a side effect is returned separately so
    ablations can compare the two.

    DegenerateConfiguration from either branch propagates with its `branch`
    attribute set to "rays" or "points".
    """
    if len(rays_cam) != len(rays_pred):
        raise ValueError("canonical and predicted ray bundles differ in length")
    if len(pts_cam) != len(pts_pred):
        raise ValueError("canonical and predicted pointmaps differ in length")
    try:
        r_hat, ray_diag = kabsch_rotation(
            AlignmentProblem(rays_cam.dirs, rays_pred.dirs, weights), normalize=True
        )
    except DegenerateConfiguration as exc:
        raise DegenerateConfiguration(f"ray branch: {exc}", branch="rays") from exc
    try:
        point_pose, pt_diag = rigid_align(
            AlignmentProblem(pts_cam.pts, pts_pred.pts, weights)
        )
    except DegenerateConfiguration as exc:
        raise DegenerateConfiguration(f"point branch: {exc}", branch="points") from exc
    return PoseRecovery(
        pose=Pose(r_hat, point_pose.t),
        rotation_from_points=point_pose.r,
        ray_diagnostics=ray_diag,
        point_diagnostics=pt_diag,
    )
