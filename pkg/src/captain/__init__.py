"""Composition-aware photo decomposition, indexing, retrieval, and matching."""

from .bundles import AnnotationBundle, DetectionTensor, gender_vector, load_bundle, unify
from .classmap import ClassMap, default_class_map
from .cluster import PoseClusters, elbow_scan, fuzzy_membership, kmeans
from .fusion import (
    FusionResult, HysteresisThresholds, centric_distance, fuse,
    hysteresis_detect, importance_vector, person_present, saliency_or_default,
    weighted_saliency,
)
from .index import (
    BuildReport, CompositionModel, FeatureRecord, append_bundle,
    append_record, build, decompose, load_model, save_model,
)
from .matching import (
    FavoriteShot, PolarPose, StyleSession, favorite_shot, pose_distance,
    pose_shot, to_cartesian, to_polar,
)
from .retrieval import RankedItem, SimilarityTensor, UspWeights, normalize, rank, similarity

__version__ = "0.1.0"

__all__ = [
    "AnnotationBundle", "BuildReport", "ClassMap", "CompositionModel",
    "DetectionTensor", "FavoriteShot", "FeatureRecord", "FusionResult",
    "HysteresisThresholds", "PolarPose", "PoseClusters", "RankedItem",
    "SimilarityTensor", "StyleSession", "UspWeights", "append_bundle",
    "append_record", "build", "centric_distance", "decompose",
    "default_class_map", "elbow_scan", "favorite_shot", "fuse",
    "fuzzy_membership", "gender_vector", "hysteresis_detect",
    "importance_vector", "kmeans", "load_bundle", "load_model", "normalize",
    "person_present", "pose_distance", "pose_shot", "rank",
    "saliency_or_default", "save_model", "similarity", "to_cartesian",
    "to_polar", "unify", "weighted_saliency",
]
