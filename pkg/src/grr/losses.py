"""Training-loss stack: pose, geometry, pairwise-consistency, domain, total.

All losses are plain floats of numpy inputs. The norm order p is 1 during
warmup and 2 afterwards (see NormSchedule); for vectors ||.||_p is the
literal L1/L2 norm of the 3-vector, for scalars |x|_p means |x|^p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import PointMap, RayBundle
from .geometry import Pose, Rotation, geodesic_distance

__all__ = [
    "LossWeights",
    "NormSchedule",
    "NeighborSet",
    "EmptyNeighborSet",
    "pose_loss",
    "geometry_loss",
    "regularization_loss",
    "domain_bce",
    "total_loss",
]


class EmptyNeighborSet(ValueError):
    """Raised when the pairwise-consistency loss gets no neighbor pairs."""


@dataclass(frozen=True)
class LossWeights:
    """Nonnegative term weights. Defaults: everything 1, domain head 0.1."""

    w_pose_r: float = 1.0
    w_pose_p: float = 1.0
    w_geo_r: float = 1.0
    w_geo_p: float = 1.0
    w_reg_r: float = 1.0
    w_reg_p: float = 1.0
    w_syn: float = 1.0
    w_real: float = 1.0
    w_domain: float = 0.1

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v!r}")


@dataclass(frozen=True)
class NormSchedule:
    """Warmup switch for the norm order: p = 1 before warmup_steps, 2 after.

    L1 is forgiving of the large errors typical early in training; the
    switch to L2 sharpens convergence once predictions are in the basin.
    """

    warmup_steps: int = 0
    current_step: int = 0

    def __post_init__(self):
        if self.warmup_steps < 0 or self.current_step < 0:
            raise ValueError("steps must be nonnegative")

    @property
    def p(self) -> int:
        return 1 if self.current_step < self.warmup_steps else 2

    def at_step(self, step: int) -> "NormSchedule":
        return NormSchedule(self.warmup_steps, step)


@dataclass(frozen=True)
class NeighborSet:
    """Unordered index pairs over m items, used by the pairwise loss.

    pairs is a (k, 2) int array with i != j, indices in [0, m), and no
    duplicate unordered pair.
    """

    n_items: int
    pairs: np.ndarray

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if self.n_items < 1:
            raise ValueError("n_items must be >= 1")
        if pairs.size:
            if pairs.min() < 0 or pairs.max() >= self.n_items:
                raise ValueError("neighbor index out of range")
            if np.any(pairs[:, 0] == pairs[:, 1]):
                raise ValueError("self-pair in neighbor set")
            canon = np.sort(pairs, axis=1)
            if np.unique(canon, axis=0).shape[0] != pairs.shape[0]:
                raise ValueError("duplicate unordered pair in neighbor set")
        pairs.flags.writeable = False
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return self.pairs.shape[0]

    @classmethod
    def grid(cls, n: int, connectivity: int = 4) -> "NeighborSet":
        """Neighbor pairs of an n x n row-major grid; connectivity 4 or 8."""
        if connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")
        pairs = []
        for r in range(n):
            for c in range(n):
                i = r * n + c
                if c + 1 < n:
                    pairs.append((i, i + 1))
                if r + 1 < n:
                    pairs.append((i, i + n))
                if connectivity == 8 and r + 1 < n:
                    if c + 1 < n:
                        pairs.append((i, i + n + 1))
                    if c - 1 >= 0:
                        pairs.append((i, i + n - 1))
        if not pairs:
            raise EmptyNeighborSet(f"grid n={n} yields no neighbor pairs")
        return cls(n * n, np.array(pairs, dtype=np.int64))


def _rows(x, what: str) -> np.ndarray:
    if isinstance(x, RayBundle):
        return x.dirs
    if isinstance(x, PointMap):
        return x.pts
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{what} must be (m, 3), got {arr.shape}")
    return arr


def _check_p(p: int) -> int:
    if p not in (1, 2):
        raise ValueError(f"norm order p must be 1 or 2, got {p!r}")
    return p


def _vec_pnorm(v: np.ndarray, p: int) -> float:
    if p == 1:
        return float(np.abs(v).sum())
    return float(np.linalg.norm(v))


def _row_pnorms(a: np.ndarray, p: int) -> np.ndarray:
    if p == 1:
        return np.abs(a).sum(axis=1)
    return np.sqrt((a * a).sum(axis=1))


def _scalar_pow(x: np.ndarray, p: int) -> np.ndarray:
    # |x|_p for scalars is |x|^p
    return np.abs(x) if p == 1 else x * x


def pose_loss(
    r_hat: Rotation,
    t_hat,
    gt: Pose,
    weights: LossWeights,
    p: int,
    squared_translation: bool = False,
) -> float:
    """Supervision on the recovered pose against the ground-truth pose.

    w_pose_r * d_g(r_hat, gt.r)^p + w_pose_p * ||t_hat - gt.t||_p, with d_g
    the SO(3) geodesic distance. The translation term is the literal vector
    p-norm; squared_translation=True squares it for trainers that prefer a
    smooth quadratic.
    """
    _check_p(p)
    t_hat = np.asarray(t_hat, dtype=np.float64).reshape(3)
    rot_term = geodesic_distance(r_hat, gt.r) ** p
    trans_term = _vec_pnorm(t_hat - gt.t, p)
    if squared_translation:
        trans_term *= trans_term
    return weights.w_pose_r * rot_term + weights.w_pose_p * trans_term


def geometry_loss(rays_hat, rays_gt, pts_hat, pts_gt, weights: LossWeights, p: int) -> float:
    """Direct supervision of the predicted representations.

    Ray term: mean over patches of (1 - d_hat . d_gt), clipped per ray to
    [0, 2] to absorb round-off at the unit-norm boundary (for unit inputs
    the cosine term lives in [0, 2] mathematically). Point term: mean of
    ||p_hat - p_gt||_p over patches.
    """
    _check_p(p)
    d_hat = _rows(rays_hat, "rays_hat")
    d_gt = _rows(rays_gt, "rays_gt")
    p_hat = _rows(pts_hat, "pts_hat")
    p_gt = _rows(pts_gt, "pts_gt")
    if d_hat.shape != d_gt.shape or p_hat.shape != p_gt.shape:
        raise ValueError("prediction/ground-truth shapes differ")
    cos_term = float(np.clip(1.0 - (d_hat * d_gt).sum(axis=1), 0.0, 2.0).mean())
    point_term = float(_row_pnorms(p_hat - p_gt, p).mean())
    return weights.w_geo_r * cos_term + weights.w_geo_p * point_term


def regularization_loss(
    rays_hat, pts_hat, rays_cam, pts_gt, neighbors: NeighborSet, weights: LossWeights, p: int
) -> float:
    """Pairwise consistency over neighboring patches.

    For each neighbor pair (i, j): the predicted ray dot product is pulled
    toward the canonical camera-frame dot product (a rotation-invariant
    target, so this term never fights the unknown pose), and the predicted
    pairwise point distance toward the ground-truth pairwise distance.
    Both deviations enter as |x|^p; the sum is averaged over pairs.
    """
    _check_p(p)
    d_hat = _rows(rays_hat, "rays_hat")
    p_hat = _rows(pts_hat, "pts_hat")
    d_cam = _rows(rays_cam, "rays_cam")
    p_gt = _rows(pts_gt, "pts_gt")
    if len(neighbors) == 0:
        raise EmptyNeighborSet("neighbor set has no pairs")
    if neighbors.n_items != d_hat.shape[0]:
        raise ValueError(
            f"neighbor set is over {neighbors.n_items} items, bundles have {d_hat.shape[0]}"
        )
    i = neighbors.pairs[:, 0]
    j = neighbors.pairs[:, 1]
    ray_dev = (d_hat[i] * d_hat[j]).sum(axis=1) - (d_cam[i] * d_cam[j]).sum(axis=1)
    dist_hat = np.linalg.norm(p_hat[i] - p_hat[j], axis=1)
    dist_gt = np.linalg.norm(p_gt[i] - p_gt[j], axis=1)
    per_pair = weights.w_reg_r * _scalar_pow(ray_dev, p) + weights.w_reg_p * _scalar_pow(
        dist_hat - dist_gt, p
    )
    return float(per_pair.mean())


def domain_bce(logit: float, label: int) -> float:
    """Numerically stable binary cross-entropy with logits.

    label 0 = synthetic, 1 = real. Uses the softplus form
    max(x, 0) - x*label + log1p(exp(-|x|)), which never overflows and
    underflows to exactly 0.0 for confidently correct logits.
    """
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    x = float(logit)
    if not math.isfinite(x):
        raise ValueError("logit must be finite")
    return max(x, 0.0) - x * label + math.log1p(math.exp(-abs(x)))


def total_loss(
    syn_term: float,
    real_term: float,
    domain_terms: tuple[float, float],
    weights: LossWeights,
) -> float:
    """Weighted batch total.

    w_syn * L_syn + w_real * L_real + w_domain * (L_dom_syn + L_dom_real);
    linear in every weight, which the tests exploit.
    """
    parts = (syn_term, real_term, domain_terms[0], domain_terms[1])
    if not all(math.isfinite(float(v)) for v in parts):
        raise ValueError("loss components must be finite")
    return (
        weights.w_syn * float(syn_term)
        + weights.w_real * float(real_term)
        + weights.w_domain * (float(domain_terms[0]) + float(domain_terms[1]))
    )
