"""pointview: multi-view depth-map classification for point clouds.

The pipeline projects normalized clouds onto per-view depth maps, encodes
each map with a frozen (file-delivered or toy) encoder, scores features
against a frozen classifier, and optionally trains a small inter-view
adapter on a few labeled shots. Logits tables from different models can be
fused with a searched blend ratio.
"""

from .adapter import (DEFAULT_BETA, DEFAULT_TRAIN_SCALE, AdapterGrads,
                      AdapterParams, EpochStats, TrainConfig, adapter_forward,
                      adapter_init, checkpoint_load, checkpoint_save,
                      cosine_lr, default_hidden, evaluate_with_adapter,
                      loss_and_grads, smoothed_ce, train, write_trace_csv)
from .cloud import (AUGMENT_RECIPES, CLOUD_FORMATS, XYZ_BIN_F32LE, XYZ_TEXT,
                    DatasetManifest, ManifestEntry, PointCloud, augment,
                    kshot_sample, load_cloud, normalize_unit_cube,
                    read_manifest, save_cloud, sniff_format, write_manifest)
from .ensemble import RatioSearchResult, fuse, logit_stats, search_ratio
from .errors import (AlignmentError, DomainError, EmptyCloudError,
                     FeatureLookupError, FormatError, ParseError,
                     PointViewError)
from .features import (EmbeddingStore, PrecomputedProvider, ToyProvider,
                       classifier_matrix, get_feature, l2_normalize,
                       l2_normalize_rows, store_read, store_write, toy_encode)
from .projection import (PROJECTION_PRESETS, DepthMap, ProjectionSettings,
                         ViewFrame, occupancy, project_all, project_view,
                         read_pgm, resize_bilinear, view_set, write_pgm)
from .synthetic import SHAPE_CLASSES, make_cloud, make_dataset, sample_shape
from .zeroshot import (DEFAULT_LOGIT_SCALE, THREADS_ENV, VIEW_WEIGHT_PRESETS,
                       EvalResult, LogitsTable, aggregate, evaluate,
                       read_logits_csv, resolve_threads, softmax, view_logits,
                       write_logits_csv)

__version__ = "0.1.0"

__all__ = [
    "AUGMENT_RECIPES", "AdapterGrads", "AdapterParams", "AlignmentError",
    "CLOUD_FORMATS", "DEFAULT_BETA", "DEFAULT_LOGIT_SCALE",
    "DEFAULT_TRAIN_SCALE", "DatasetManifest", "DepthMap",
    "DomainError", "EmbeddingStore", "EmptyCloudError", "EpochStats",
    "EvalResult", "FeatureLookupError", "FormatError", "LogitsTable",
    "ManifestEntry", "PROJECTION_PRESETS", "ParseError", "PointCloud",
    "PointViewError", "PrecomputedProvider", "ProjectionSettings",
    "RatioSearchResult", "SHAPE_CLASSES", "THREADS_ENV", "ToyProvider",
    "TrainConfig", "VIEW_WEIGHT_PRESETS", "ViewFrame", "XYZ_BIN_F32LE", "XYZ_TEXT",
    "adapter_forward", "adapter_init", "aggregate", "augment",
    "checkpoint_load", "checkpoint_save", "classifier_matrix", "cosine_lr",
    "default_hidden", "evaluate", "evaluate_with_adapter", "fuse",
    "get_feature", "kshot_sample", "l2_normalize", "l2_normalize_rows",
    "load_cloud", "logit_stats", "loss_and_grads", "make_cloud",
    "make_dataset", "normalize_unit_cube", "occupancy", "project_all",
    "project_view", "read_logits_csv", "read_manifest", "read_pgm",
    "resize_bilinear", "resolve_threads", "sample_shape", "save_cloud",
    "search_ratio", "smoothed_ce", "sniff_format", "softmax", "store_read",
    "store_write", "toy_encode", "train", "view_logits", "view_set",
    "write_logits_csv", "write_manifest", "write_pgm", "write_trace_csv",
]
