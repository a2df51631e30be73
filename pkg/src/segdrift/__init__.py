"""Scale-drift reduction for simulated indoor monocular SLAM via
incremental 3D line-segment clustering and cluster-consistency
optimization."""

from .geometry import PoseSE3, Sim3, segment_vector, umeyama_alignment
from .worldgen import World, WorldSegment, WorldSpec, generate_corridor
from .frontend import (
    DriftConfig,
    DriftState,
    EstimatedMap,
    MapPoint,
    ObservationConfig,
    SegmentObservation,
    simulate,
)
from .clustering import Cluster, ClusterStore, DegenerateSegmentError
from .clusteropt import ClusterEdge, OptProblem, OptReport, build_problem, evaluate_objective, solve
from .pipeline import RunResult, ScheduleConfig, propagate_to_poses, run
from .metrics import MetricsReport, Trajectory, ate, rpe, spline_interpolate

__all__ = [
    "PoseSE3",
    "Sim3",
    "segment_vector",
    "umeyama_alignment",
    "World",
    "WorldSegment",
    "WorldSpec",
    "generate_corridor",
    "DriftConfig",
    "DriftState",
    "EstimatedMap",
    "MapPoint",
    "ObservationConfig",
    "SegmentObservation",
    "simulate",
    "Cluster",
    "ClusterStore",
    "DegenerateSegmentError",
    "ClusterEdge",
    "OptProblem",
    "OptReport",
    "build_problem",
    "evaluate_objective",
    "solve",
    "RunResult",
    "ScheduleConfig",
    "propagate_to_poses",
    "run",
    "MetricsReport",
    "Trajectory",
    "ate",
    "rpe",
    "spline_interpolate",
]
