"""Facial action unit recognition from image sequences.

Landmark tracking and Gabor appearance features feed per-AU left-to-right
GMM-HMMs; a small neural network fuses their scores into multi-label AU
decisions, and induced rules map AU intensities to expressions.
"""

from ._kernels import BACKEND
from .bundle import ModelBundle, load_bundle, save_bundle
from .config import Config, parse_config
from .dataset import (GroundTruth, ImageSequence, Manifest, ManifestRecord, crop_sequence, load_sequence,
                      parse_manifest, read_manifest)
from .errors import BundleError, DataError, NumericError
from .fusion import FusionNet, augment_truncations, decide, forward
from .gabor import BankFilter, make_gabor_bank
from .geo import StateBucketing, bucket_state, intensity, intensity_profile
from .hmm import AuHmm, Gmm, fit_gmm, viterbi_log_score
from .pipeline import evaluate, predict_features, process_sequence, train_from_features
from .reduction import pca_fit, sym_eig, twod_pca_fit
from .rules import RuleList, au_recognition_metrics, confusion_and_metrics, induce_rules, roc_area
from .tracker import TrackerParams, track_grid

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ModelBundle", "load_bundle", "save_bundle", "Config", "parse_config", "GroundTruth",
    "ImageSequence", "Manifest", "ManifestRecord", "crop_sequence", "load_sequence", "parse_manifest",
    "read_manifest", "BundleError", "DataError", "NumericError", "FusionNet", "augment_truncations",
    "decide", "forward", "BankFilter", "make_gabor_bank", "StateBucketing", "bucket_state", "intensity",
    "intensity_profile", "AuHmm", "Gmm", "fit_gmm", "viterbi_log_score", "evaluate", "predict_features",
    "process_sequence", "train_from_features", "pca_fit", "sym_eig", "twod_pca_fit", "RuleList",
    "au_recognition_metrics", "confusion_and_metrics", "induce_rules", "roc_area", "TrackerParams",
    "track_grid",
]
