"""Analytic gradients for the closed-form solvers, plus a finite-difference harness.

The rotation returned by the solvers is R = U diag(1, 1, d) V^T with
H = U S V^T and d = det(U V^T). Differentiating through the SVD, the
(sigma_i - sigma_j) cross terms of the general SVD differential cancel for
the polar factor: with K = U^T Gbar V (Gbar the upstream cotangent dL/dR),
the cotangent of H is Hbar = U Pbar V^T where, writing s = diag(S),

    d = +1:  Pbar_ab = (K - K^T)_ab / (s_a + s_b)          (a != b)
    d = -1:  Pbar_01 = -Pbar_10 = (K_01 - K_10) / (s_0 + s_1)
             Pbar_02 =  Pbar_20 = (K_02 + K_20) / (s_0 - s_2)
             Pbar_12 =  Pbar_21 = (K_12 + K_21) / (s_1 - s_2)

and Pbar_aa = 0 (the singular values do not enter R; the determinant sign
is locally constant). In the proper case only sum denominators appear; the
reflective case reintroduces differences against the flipped axis, which is
exactly where the solution stops being differentiable as sigma_2 approaches
sigma_3. Denominators below NEAR_SINGULAR_TOL are rejected, never clamped:
a clamped gradient would pass checks while pointing somewhere arbitrary.

From Hbar, with H = sum_i w_i t_i s_i^T:
    dL/dtarget_i = w_i Hbar   s_i,      dL/dsource_i = w_i Hbar^T t_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .camera import Intrinsics, PatchGrid, canonical_points, canonical_rays
from .geometry import Pose, Seed, geodesic_distance, random_rotation
from .losses import (
    LossWeights,
    NeighborSet,
    geometry_loss,
    pose_loss,
    regularization_loss,
)
from .solver import (
    AlignmentProblem,
    DegenerateConfiguration,
    kabsch_rotation,
    rigid_align,
    _cross_covariance,
    _svd_rotation,
)

__all__ = [
    "NEAR_SINGULAR_TOL",
    "NearSingularJacobian",
    "VjpRequest",
    "VjpResult",
    "GradReport",
    "FrameInputs",
    "FrameLossTerms",
    "kabsch_rotation_vjp",
    "rigid_align_vjp",
    "pipeline_loss",
    "pipeline_loss_grad",
    "finite_diff_check",
    "random_alignment_problem",
    "random_rigid_problem",
    "random_frame_inputs",
    "near_collinear_problem",
]

# Denominator floor for the SVD-differential cross terms.
NEAR_SINGULAR_TOL = 1e-8

_FD_H_MIN = 1e-8
_FD_H_MAX = 1e-3


class NearSingularJacobian(RuntimeError):
    """The solver output is not reliably differentiable at this input."""


@dataclass(frozen=True)
class VjpRequest:
    """Upstream cotangents for one solve.

    rotation_grad is dL/dR (3x3). translation_grad (3,) applies to
    rigid_align_vjp only and may be combined with a rotation cotangent.
    """

    problem: AlignmentProblem
    rotation_grad: np.ndarray
    translation_grad: np.ndarray | None = None

    def __post_init__(self):
        g = np.asarray(self.rotation_grad, dtype=np.float64)
        if g.shape != (3, 3) or not np.all(np.isfinite(g)):
            raise ValueError("rotation_grad must be a finite 3x3 array")
        object.__setattr__(self, "rotation_grad", g)
        if self.translation_grad is not None:
            t = np.asarray(self.translation_grad, dtype=np.float64)
            if t.shape != (3,) or not np.all(np.isfinite(t)):
                raise ValueError("translation_grad must be a finite 3-vector")
            object.__setattr__(self, "translation_grad", t)


@dataclass(frozen=True)
class VjpResult:
    """Gradients with respect to the problem rows."""

    target: np.ndarray
    source: np.ndarray


def _polar_h_cotangent(k: np.ndarray, s: np.ndarray, sign: float) -> np.ndarray:
    """Pbar from K = U^T Gbar V; see the module docstring for the formulas."""
    if sign > 0.0:
        denominators = (s[0] + s[1], s[0] + s[2], s[1] + s[2])
    else:
        denominators = (s[0] + s[1], s[0] - s[2], s[1] - s[2])
    if min(denominators) < NEAR_SINGULAR_TOL:
        raise NearSingularJacobian(
            "SVD cross-term denominator below "
            f"{NEAR_SINGULAR_TOL:g} (singular values {s[0]:.3e}, {s[1]:.3e}, {s[2]:.3e}); "
            "gradient unreliable near degenerate or reflective configurations"
        )
    pbar = np.zeros((3, 3))
    if sign > 0.0:
        anti = k - k.T
        pbar[0, 1] = anti[0, 1] / denominators[0]
        pbar[0, 2] = anti[0, 2] / denominators[1]
        pbar[1, 2] = anti[1, 2] / denominators[2]
        pbar[1, 0] = -pbar[0, 1]
        pbar[2, 0] = -pbar[0, 2]
        pbar[2, 1] = -pbar[1, 2]
    else:
        pbar[0, 1] = (k[0, 1] - k[1, 0]) / denominators[0]
        pbar[1, 0] = -pbar[0, 1]
        pbar[0, 2] = pbar[2, 0] = (k[0, 2] + k[2, 0]) / denominators[1]
        pbar[1, 2] = pbar[2, 1] = (k[1, 2] + k[2, 1]) / denominators[2]
    return pbar


def _normalization_chain(raw: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """Pull gradients w.r.t. unit rows back to the raw (unnormalized) rows."""
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    unit = raw / norms
    radial = (grads * unit).sum(axis=1, keepdims=True)
    return (grads - radial * unit) / norms


def kabsch_rotation_vjp(req: VjpRequest, normalize: bool = True) -> VjpResult:
    """Gradients of <rotation_grad, kabsch_rotation(problem)> w.r.t. the rows.

    normalize must match the forward call; with normalize=True the chain
    through the row renormalization is included, so the returned gradients
    are with respect to the raw stored vectors.

    Raises NearSingularJacobian when a required cross-term denominator is
    below NEAR_SINGULAR_TOL, and DegenerateConfiguration when the forward
    problem itself is degenerate.
    """
    h, src, tgt, w = _cross_covariance(req.problem, normalize)
    _, _, (u, s, vt, sign) = _svd_rotation(h)
    k = u.T @ req.rotation_grad @ vt.T
    hbar = u @ _polar_h_cotangent(k, s, sign) @ vt
    grad_target = w[:, np.newaxis] * (src @ hbar.T)
    grad_source = w[:, np.newaxis] * (tgt @ hbar)
    if normalize:
        grad_target = _normalization_chain(req.problem.target, grad_target)
        grad_source = _normalization_chain(req.problem.source, grad_source)
    return VjpResult(target=grad_target, source=grad_source)


def rigid_align_vjp(req: VjpRequest) -> VjpResult:
    """Gradients of <rotation_grad, R> + <translation_grad, t> for rigid_align.

    The translation cotangent feeds back into the rotation through
    t = c_tgt - R c_src, and directly into every target point through the
    centroid; the centered-set terms need no centroid correction because the
    centered rows sum to zero.
    """
    problem = req.problem
    w = problem.effective_weights()
    wsum = float(w.sum())
    c_src = (w @ problem.source) / wsum
    c_tgt = (w @ problem.target) / wsum
    src_c = problem.source - c_src
    tgt_c = problem.target - c_tgt
    h = (w[:, np.newaxis] * tgt_c).T @ src_c
    r, _, (u, s, vt, sign) = _svd_rotation(h)
    g_t = req.translation_grad if req.translation_grad is not None else np.zeros(3)
    g_rot_total = req.rotation_grad - np.outer(g_t, c_src)
    k = u.T @ g_rot_total @ vt.T
    hbar = u @ _polar_h_cotangent(k, s, sign) @ vt
    wcol = w[:, np.newaxis]
    grad_target = wcol * (src_c @ hbar.T) + (wcol / wsum) * g_t
    grad_source = wcol * (tgt_c @ hbar) - (wcol / wsum) * (r.T @ g_t)
    return VjpResult(target=grad_target, source=grad_source)


@dataclass(frozen=True)
class FrameLossTerms:
    """Per-frame loss breakdown for the composed training objective."""

    pose: float
    geometry: float
    regularization: float

    @property
    def total(self) -> float:
        return self.pose + self.geometry + self.regularization


@dataclass(frozen=True)
class FrameInputs:
    """Everything needed to evaluate the composed per-frame loss.

    rays_pred / pts_pred are the free variables the gradient is taken with
    respect to; the canonical sets, ground-truth pose, neighbor pairs,
    weights, and norm order are constants of the frame.
    """

    rays_cam: np.ndarray
    pts_cam: np.ndarray
    rays_pred: np.ndarray
    pts_pred: np.ndarray
    gt: Pose
    neighbors: NeighborSet
    weights: LossWeights
    p: int

    def __post_init__(self):
        for name in ("rays_cam", "pts_cam", "rays_pred", "pts_pred"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise ValueError(f"{name} must be (m, 3), got {arr.shape}")
            object.__setattr__(self, name, arr)
        m = self.rays_cam.shape[0]
        if not (self.pts_cam.shape[0] == self.rays_pred.shape[0] == self.pts_pred.shape[0] == m):
            raise ValueError("frame arrays disagree in length")
        if self.p not in (1, 2):
            raise ValueError("p must be 1 or 2")

    def with_predictions(self, rays_pred: np.ndarray, pts_pred: np.ndarray) -> "FrameInputs":
        return FrameInputs(
            self.rays_cam, self.pts_cam, rays_pred, pts_pred,
            self.gt, self.neighbors, self.weights, self.p,
        )


def _gt_world(fi: FrameInputs) -> tuple[np.ndarray, np.ndarray]:
    d_gt = fi.rays_cam @ fi.gt.r.m.T
    p_gt = fi.pts_cam @ fi.gt.r.m.T + fi.gt.t
    return d_gt, p_gt


def pipeline_loss(fi: FrameInputs) -> FrameLossTerms:
    """Composed per-frame loss: solve the pose, then pose + geometry + pairwise terms."""
    r_hat, _ = kabsch_rotation(AlignmentProblem(fi.rays_cam, fi.rays_pred), normalize=True)
    point_pose, _ = rigid_align(AlignmentProblem(fi.pts_cam, fi.pts_pred))
    d_gt, p_gt = _gt_world(fi)
    return FrameLossTerms(
        pose=pose_loss(r_hat, point_pose.t, fi.gt, fi.weights, fi.p),
        geometry=geometry_loss(fi.rays_pred, d_gt, fi.pts_pred, p_gt, fi.weights, fi.p),
        regularization=regularization_loss(
            fi.rays_pred, fi.pts_pred, fi.rays_cam, p_gt, fi.neighbors, fi.weights, fi.p
        ),
    )


def _dpow(x: np.ndarray, p: int) -> np.ndarray:
    # derivative of |x|^p
    return np.sign(x) if p == 1 else 2.0 * x


def pipeline_loss_grad(fi: FrameInputs) -> tuple[FrameLossTerms, np.ndarray, np.ndarray]:
    """Composed loss and its analytic gradient w.r.t. (rays_pred, pts_pred).

    The pose term backpropagates through both solvers via the VJPs above;
    the geometry and pairwise terms contribute directly. Raises
    NearSingularJacobian at non-differentiable points (zero geodesic or
    coincident points) rather than returning a clamped direction.
    """
    m = fi.rays_cam.shape[0]
    w = fi.weights
    p = fi.p
    ray_problem = AlignmentProblem(fi.rays_cam, fi.rays_pred)
    pt_problem = AlignmentProblem(fi.pts_cam, fi.pts_pred)
    r_hat, _ = kabsch_rotation(ray_problem, normalize=True)
    point_pose, _ = rigid_align(pt_problem)
    t_hat = point_pose.t
    d_gt, p_gt = _gt_world(fi)

    terms = FrameLossTerms(
        pose=pose_loss(r_hat, t_hat, fi.gt, w, p),
        geometry=geometry_loss(fi.rays_pred, d_gt, fi.pts_pred, p_gt, w, p),
        regularization=regularization_loss(
            fi.rays_pred, fi.pts_pred, fi.rays_cam, p_gt, fi.neighbors, w, p
        ),
    )

    # Pose term: d/dR of d_g^p and d/dt of ||t - t_gt||_p, then through the solvers.
    dist = geodesic_distance(r_hat, fi.gt.r)
    sin_dist = math.sin(dist)
    if abs(sin_dist) < NEAR_SINGULAR_TOL:
        raise NearSingularJacobian(
            f"geodesic distance {dist:.3e} too close to 0 or pi for a stable gradient"
        )
    rot_grad = w.w_pose_r * p * dist ** (p - 1) * (-fi.gt.r.m / (2.0 * sin_dist))
    diff = t_hat - fi.gt.t
    if p == 1:
        trans_dir = np.sign(diff)
    else:
        nrm = float(np.linalg.norm(diff))
        if nrm < 1e-12:
            raise NearSingularJacobian("translation residual too small for an L2 gradient")
        trans_dir = diff / nrm
    trans_grad = w.w_pose_p * trans_dir

    grad_rays = kabsch_rotation_vjp(VjpRequest(ray_problem, rot_grad), normalize=True).target
    grad_pts = rigid_align_vjp(
        VjpRequest(pt_problem, np.zeros((3, 3)), trans_grad)
    ).target

    # Geometry term, direct paths. The cosine clip only binds at round-off.
    cos_dev = 1.0 - (fi.rays_pred * d_gt).sum(axis=1)
    active = ((cos_dev > 0.0) & (cos_dev < 2.0)).astype(np.float64)
    grad_rays += -(w.w_geo_r / m) * active[:, np.newaxis] * d_gt
    resid = fi.pts_pred - p_gt
    if p == 1:
        point_dir = np.sign(resid)
    else:
        rn = np.linalg.norm(resid, axis=1, keepdims=True)
        if np.any(rn < 1e-12):
            raise NearSingularJacobian("point residual too small for an L2 gradient")
        point_dir = resid / rn
    grad_pts += (w.w_geo_p / m) * point_dir

    # Pairwise term. np.add.at accumulates over repeated patch indices.
    i = fi.neighbors.pairs[:, 0]
    j = fi.neighbors.pairs[:, 1]
    k_pairs = len(fi.neighbors)
    ray_dev = (fi.rays_pred[i] * fi.rays_pred[j]).sum(axis=1) - (
        fi.rays_cam[i] * fi.rays_cam[j]
    ).sum(axis=1)
    coef = (w.w_reg_r / k_pairs) * _dpow(ray_dev, p)
    np.add.at(grad_rays, i, coef[:, np.newaxis] * fi.rays_pred[j])
    np.add.at(grad_rays, j, coef[:, np.newaxis] * fi.rays_pred[i])
    delta = fi.pts_pred[i] - fi.pts_pred[j]
    dist_hat = np.linalg.norm(delta, axis=1)
    if np.any(dist_hat < 1e-12):
        raise NearSingularJacobian("coincident neighbor points; pair distance gradient undefined")
    dist_gt = np.linalg.norm(p_gt[i] - p_gt[j], axis=1)
    dcoef = (w.w_reg_p / k_pairs) * _dpow(dist_hat - dist_gt, p)
    unit = delta / dist_hat[:, np.newaxis]
    np.add.at(grad_pts, i, dcoef[:, np.newaxis] * unit)
    np.add.at(grad_pts, j, -dcoef[:, np.newaxis] * unit)

    return terms, grad_rays, grad_pts


@dataclass(frozen=True)
class GradReport:
    """Analytic-vs-numeric comparison from finite_diff_check.

    max_rel_err uses |a - n| / max(|a|, |n|) per entry, with entries where
    both magnitudes are below 1e-12 counted as zero error.
    """

    op: str
    analytic: np.ndarray
    numeric: np.ndarray
    max_abs_err: float
    max_rel_err: float

    @property
    def n_params(self) -> int:
        return int(self.analytic.size)


def _central_diff(fn: Callable[[Sequence[np.ndarray]], float], arrays: list[np.ndarray], h: float) -> list[np.ndarray]:
    grads = []
    for idx, base in enumerate(arrays):
        g = np.zeros_like(base)
        flat = g.reshape(-1)
        for k in range(base.size):
            plus = [a.copy() for a in arrays]
            minus = [a.copy() for a in arrays]
            plus[idx].reshape(-1)[k] += h
            minus[idx].reshape(-1)[k] -= h
            flat[k] = (fn(plus) - fn(minus)) / (2.0 * h)
        grads.append(g)
    return grads


def _compare(op: str, analytic: np.ndarray, numeric: np.ndarray) -> GradReport:
    abs_err = np.abs(analytic - numeric)
    denom = np.maximum(np.abs(analytic), np.abs(numeric))
    rel = np.where(denom > 1e-12, abs_err / np.where(denom > 1e-12, denom, 1.0), 0.0)
    a = analytic.copy()
    n = numeric.copy()
    a.flags.writeable = False
    n.flags.writeable = False
    return GradReport(
        op=op,
        analytic=a,
        numeric=n,
        max_abs_err=float(abs_err.max()),
        max_rel_err=float(rel.max()),
    )


def finite_diff_check(op_id: str, instance, h: float = 1e-5, seed: Seed = Seed(0)) -> GradReport:
    """Check an analytic VJP against central finite differences.

    op_id "rotation" or "rigid" takes an AlignmentProblem; the probe scalar
    is <G, R> (+ <g, t> for rigid) with cotangents G, g drawn once from
    `seed`, and the comparison covers gradients w.r.t. both target and
    source rows. op_id "loss_total" takes FrameInputs and probes the
    composed scalar loss w.r.t. the predicted rays and points.

    The numeric side re-runs the full forward solve at every perturbed
    input; it shares no code with the analytic backward pass.
    """
    if not _FD_H_MIN <= h <= _FD_H_MAX:
        raise ValueError(f"step h must lie in [{_FD_H_MIN:g}, {_FD_H_MAX:g}], got {h:g}")

    if op_id == "rotation":
        problem: AlignmentProblem = instance
        g_rot = seed.rng().standard_normal((3, 3))
        res = kabsch_rotation_vjp(VjpRequest(problem, g_rot), normalize=True)
        analytic = np.concatenate([res.target.reshape(-1), res.source.reshape(-1)])

        def probe(arrays: Sequence[np.ndarray]) -> float:
            rot, _ = kabsch_rotation(
                AlignmentProblem(arrays[1], arrays[0], problem.weights), normalize=True
            )
            return float((g_rot * rot.m).sum())

        numeric_parts = _central_diff(probe, [problem.target.copy(), problem.source.copy()], h)
        numeric = np.concatenate([numeric_parts[0].reshape(-1), numeric_parts[1].reshape(-1)])
        return _compare(op_id, analytic, numeric)

    if op_id == "rigid":
        problem = instance
        rng = seed.rng()
        g_rot = rng.standard_normal((3, 3))
        g_t = rng.standard_normal(3)
        res = rigid_align_vjp(VjpRequest(problem, g_rot, g_t))
        analytic = np.concatenate([res.target.reshape(-1), res.source.reshape(-1)])

        def probe(arrays: Sequence[np.ndarray]) -> float:
            pose, _ = rigid_align(AlignmentProblem(arrays[1], arrays[0], problem.weights))
            return float((g_rot * pose.r.m).sum() + g_t @ pose.t)

        numeric_parts = _central_diff(probe, [problem.target.copy(), problem.source.copy()], h)
        numeric = np.concatenate([numeric_parts[0].reshape(-1), numeric_parts[1].reshape(-1)])
        return _compare(op_id, analytic, numeric)

    if op_id == "loss_total":
        fi: FrameInputs = instance
        _, grad_rays, grad_pts = pipeline_loss_grad(fi)
        analytic = np.concatenate([grad_rays.reshape(-1), grad_pts.reshape(-1)])

        def probe(arrays: Sequence[np.ndarray]) -> float:
            return pipeline_loss(fi.with_predictions(arrays[0], arrays[1])).total

        numeric_parts = _central_diff(probe, [fi.rays_pred.copy(), fi.pts_pred.copy()], h)
        numeric = np.concatenate([numeric_parts[0].reshape(-1), numeric_parts[1].reshape(-1)])
        return _compare(op_id, analytic, numeric)

    raise ValueError(f"unknown op_id {op_id!r}; expected rotation, rigid, or loss_total")


def random_alignment_problem(seed: Seed, m: int = 12, noise: float = 0.05) -> AlignmentProblem:
    """Generic unit-vector correspondences: rotated sources plus tangent noise."""
    rng = seed.rng()
    src = rng.standard_normal((m, 3))
    src /= np.linalg.norm(src, axis=1, keepdims=True)
    rot = random_rotation(seed.derive(1))
    tgt = src @ rot.m.T + noise * rng.standard_normal((m, 3))
    tgt /= np.linalg.norm(tgt, axis=1, keepdims=True)
    return AlignmentProblem(src, tgt)


def random_rigid_problem(seed: Seed, m: int = 16, noise: float = 0.05) -> AlignmentProblem:
    """Generic point correspondences under a random rigid motion plus noise."""
    rng = seed.rng()
    src = rng.standard_normal((m, 3))
    rot = random_rotation(seed.derive(1))
    t = rng.uniform(-2.0, 2.0, 3)
    tgt = src @ rot.m.T + t + noise * rng.standard_normal((m, 3))
    return AlignmentProblem(src, tgt)


def random_frame_inputs(seed: Seed, n: int = 4, p: int = 2, noise: float = 0.02) -> FrameInputs:
    """Random composed-loss instance on an n x n grid with noisy predictions.

    Perturbation magnitudes are floored at 0.75 * noise (per ray tilt, per
    point coordinate) and the points get a constant extra offset. The floors
    keep every kink argument of the loss (cosine clip boundary, L1 signs,
    vector-norm zeros) well clear of the finite-difference step, so a
    central-difference probe never straddles a non-smooth point. noise = 0
    degenerates to the exact ground-truth representations.
    """
    side = 8 * n
    grid = PatchGrid(Intrinsics(fx=0.75 * side, fy=0.75 * side, cx=side / 2, cy=side / 2,
                                width=side, height=side), n=n)
    rays_cam = canonical_rays(grid).dirs
    pts_cam = canonical_points(canonical_rays(grid)).pts
    m = rays_cam.shape[0]
    rng = seed.rng()
    gt = Pose(random_rotation(seed.derive(1)), rng.uniform(-2.0, 2.0, 3))
    d_gt = rays_cam @ gt.r.m.T
    p_gt = pts_cam @ gt.r.m.T + gt.t

    # Tilt each ground-truth ray about a random tangent axis.
    phi = rng.uniform(0.0, 2.0 * math.pi, m)
    tilt = noise * (0.75 + np.abs(rng.standard_normal(m)))
    helper = np.where(
        np.abs(d_gt[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]]
    )
    u = np.cross(d_gt, helper)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = np.cross(d_gt, u)
    axis = u * np.cos(phi)[:, np.newaxis] + v * np.sin(phi)[:, np.newaxis]
    rays_pred = d_gt * np.cos(tilt)[:, np.newaxis] + np.cross(axis, d_gt) * np.sin(tilt)[:, np.newaxis]

    mag = noise * (0.75 + np.abs(rng.standard_normal((m, 3))))
    sgn = np.where(rng.standard_normal((m, 3)) >= 0.0, 1.0, -1.0)
    pts_pred = p_gt + mag * sgn + noise * np.array([3.0, -2.5, 3.5])
    return FrameInputs(
        rays_cam, pts_cam, rays_pred, pts_pred, gt,
        NeighborSet.grid(n), LossWeights(), p,
    )


def near_collinear_problem(m: int = 12) -> AlignmentProblem:
    """Deterministic instance that passes the forward degeneracy gate but
    trips the NearSingularJacobian guard.

    Unit vectors fanned around +z with spread eps: the normalized
    cross-covariance spectrum is (1, eps^2/2, eps^2/2) up to rounding, so
    with eps^2 = 5e-9 the forward gate sigma_2/sigma_1 >= 1e-9 passes while
    sigma_2 + sigma_3 = 5e-9 sits below the 1e-8 cross-term floor.
    """
    eps = math.sqrt(5e-9)
    angles = 2.0 * math.pi * np.arange(m) / m
    src = np.stack(
        [eps * np.cos(angles), eps * np.sin(angles), np.ones(m)], axis=1
    )
    src /= np.linalg.norm(src, axis=1, keepdims=True)
    return AlignmentProblem(src, src.copy(), np.full(m, 1.0 / m))
