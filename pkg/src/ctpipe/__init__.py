"""ctpipe: chest-CT volumetric preprocessing and evaluation toolkit."""

from .volume import INTENSITY_RAW, INTENSITY_UNIT, Volume, load_volume, save_volume
from .ingestion import (
    CATEGORIES,
    SEXES,
    SPLITS,
    DatasetStats,
    Manifest,
    ScanRecord,
    assemble_volume,
    dataset_stats,
    load_manifest,
)
from .lung_trim import TrimParams, TrimRange, apply_trim, detect_lung_range, slice_air_fraction
from .resample import TargetShape, normalize_unit, resize_trilinear
from .augment import AugmentParams, DrawLog, augment_pipeline, derive_stream, replay
from .loss_metrics import (
    CategoryWeights,
    ConfusionMatrix,
    confusion,
    inverse_frequency_weights,
    macro_f1,
    weighted_ce,
    weighted_ce_from_logits,
)
from .split_attention import SplitAttnParams, radix_softmax, split_attention_forward
from .pipeline import PipelineConfig, RunReport, run_pipeline

__version__ = "0.1.0"
