"""Patch-grid geometric representations and closed-form pose recovery.

The pipeline: a pinhole camera and an n x n patch grid define canonical
per-patch ray directions and a unit-distance pointmap; predicted world-frame
copies of those representations determine the camera pose in closed form
(rotation from rays by SVD alignment, translation from points by rigid
registration). Everything downstream of that solve - analytic gradients,
the training loss stack, a perturbation simulator, and median-error
metrics - lives here too, behind the `grr` command-line tool.
"""

from .camera import (
    Intrinsics,
    PatchGrid,
    PointMap,
    RayBundle,
    canonical_points,
    canonical_rays,
    read_xyz_csv,
    world_points,
    world_rays,
    write_xyz_csv,
)
from .config import ConfigError
from .geometry import (
    Pose,
    Rotation,
    Seed,
    UnitVec3,
    compose,
    geodesic_distance,
    inverse,
    load_poses,
    random_rotation,
    random_rotation_matrices,
    save_poses,
)
from .losses import (
    EmptyNeighborSet,
    LossWeights,
    NeighborSet,
    NormSchedule,
    domain_bce,
    geometry_loss,
    pose_loss,
    regularization_loss,
    total_loss,
)
from .metrics import MetricsSummary, median, pose_errors, summarize_records
from .simulator import (
    FrameRecord,
    NoiseSpec,
    PosePerturbSpec,
    TrialReport,
    ablation_sweep,
    perturb_representations,
    run_trial,
    sample_poses,
    write_report_csv,
    write_sweep_csv,
)
from .solver import (
    AlignmentProblem,
    DegenerateConfiguration,
    PoseRecovery,
    SolveDiagnostics,
    kabsch_rotation,
    recover_pose,
    rigid_align,
)
from .solver_grad import (
    FrameInputs,
    FrameLossTerms,
    GradReport,
    NearSingularJacobian,
    VjpRequest,
    VjpResult,
    finite_diff_check,
    kabsch_rotation_vjp,
    near_collinear_problem,
    pipeline_loss,
    pipeline_loss_grad,
    random_alignment_problem,
    random_frame_inputs,
    random_rigid_problem,
    rigid_align_vjp,
)

__all__ = [
    "AlignmentProblem",
    "ConfigError",
    "DegenerateConfiguration",
    "EmptyNeighborSet",
    "FrameInputs",
    "FrameLossTerms",
    "FrameRecord",
    "GradReport",
    "Intrinsics",
    "LossWeights",
    "MetricsSummary",
    "NearSingularJacobian",
    "NeighborSet",
    "NoiseSpec",
    "NormSchedule",
    "PatchGrid",
    "PointMap",
    "Pose",
    "PosePerturbSpec",
    "PoseRecovery",
    "RayBundle",
    "Rotation",
    "Seed",
    "SolveDiagnostics",
    "TrialReport",
    "UnitVec3",
    "VjpRequest",
    "VjpResult",
    "ablation_sweep",
    "canonical_points",
    "canonical_rays",
    "compose",
    "domain_bce",
    "finite_diff_check",
    "geodesic_distance",
    "geometry_loss",
    "inverse",
    "kabsch_rotation",
    "kabsch_rotation_vjp",
    "load_poses",
    "median",
    "near_collinear_problem",
    "perturb_representations",
    "pipeline_loss",
    "pipeline_loss_grad",
    "pose_errors",
    "pose_loss",
    "random_alignment_problem",
    "random_frame_inputs",
    "random_rigid_problem",
    "random_rotation",
    "random_rotation_matrices",
    "read_xyz_csv",
    "recover_pose",
    "regularization_loss",
    "rigid_align",
    "rigid_align_vjp",
    "run_trial",
    "sample_poses",
    "save_poses",
    "summarize_records",
    "total_loss",
    "world_points",
    "world_rays",
    "write_report_csv",
    "write_sweep_csv",
    "write_xyz_csv",
]

__version__ = "0.1.0"
