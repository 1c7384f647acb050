"""Tool-breakage detection from spindle current.

Submodules: signal_io (trace formats, trimming, windowing), features
(time-domain statistics, normalization), nn (layers, optimizers,
gradient checking), models (network specs and builders), checkpoint
(binary serialization), synth (seeded lifecycle generator), dataset
(labeled samples and splits), training (protocol, evaluation,
benchmark), estimators (scikit-learn style wrappers), cli.
"""

from .signal_io import SegmentKind, SignalTrace, Span, read_trace, trim_non_machining, windows, write_trace
from .features import (
    FeatureSeries,
    FeatureVector,
    NormalizationStats,
    extract_features,
    fit_normalization,
    mean_abs,
    mean_square,
    normalize,
    peak_to_peak,
    rms,
    variance,
)
from .models import ModelSpec, build_bp_paper, build_bp_scaled, build_cnn_paper, build_cnn_scaled
from .synth import DatasetManifest, ToolLifeProfile, generate_dataset, generate_tool_trace

__version__ = "0.1.0"
