"""Distribution-preserving multiple hypotheses prediction.

Train models that emit a set of candidate outputs per input under the
winner-takes-all loss, with either the squared Euclidean distance or a
logarithmic distance whose minimizers preserve the data distribution, and
verify the preservation properties quantitatively.
"""

from .datasets import (
    CallCenterModel,
    MixtureModel,
    conditional_surrogate_params,
    dump_dataset,
    erlang_pdf,
    load_dataset,
    mixture2d_model,
    sample_call_center,
    sample_conditional_surrogate,
    sample_mixture,
    sample_waiting_times,
)
from .estimators import HypothesisQuantizer, MhpRegressor
from .evaluation import (
    BoxIndicatorProbe,
    CoordinateProbe,
    NllReport,
    SecondMomentProbe,
    ShareReport,
    conditional_moment_curve,
    conditional_nll_reports,
    density_exponent_ks,
    kde_log_density,
    moment_probe_gap,
    nll_comparison,
    nll_kde,
    nll_norm,
    scott_bandwidth,
    voronoi_shares,
)
from .metrics import (
    WtaMetric,
    default_delta,
    distance,
    log_distance,
    metric_distances,
    metric_gradient,
    nearest_indices,
    squared_distance,
)
from .network import (
    MhpModel,
    NetworkParams,
    NetworkSpec,
    TrainResult,
    backward,
    fit_mhp,
    forward,
    forward_batch,
    init_network,
    load_model,
    save_model,
    train,
)
from .optim import TrainConfig, TrainingDiverged
from .quantizer import fit_hypotheses, lloyd_refine, load_hypotheses_csv, save_hypotheses_csv
from .wta import WtaResult, batch_wta, relaxation_weights, wta_evaluate, wta_gradients

__version__ = "0.1.0"

__all__ = [
    "BoxIndicatorProbe",
    "CallCenterModel",
    "CoordinateProbe",
    "HypothesisQuantizer",
    "MhpModel",
    "MhpRegressor",
    "MixtureModel",
    "NetworkParams",
    "NetworkSpec",
    "NllReport",
    "SecondMomentProbe",
    "ShareReport",
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "WtaMetric",
    "WtaResult",
    "backward",
    "batch_wta",
    "conditional_moment_curve",
    "conditional_nll_reports",
    "conditional_surrogate_params",
    "default_delta",
    "density_exponent_ks",
    "distance",
    "dump_dataset",
    "erlang_pdf",
    "fit_hypotheses",
    "fit_mhp",
    "forward",
    "forward_batch",
    "init_network",
    "kde_log_density",
    "lloyd_refine",
    "load_dataset",
    "load_hypotheses_csv",
    "load_model",
    "metric_distances",
    "metric_gradient",
    "mixture2d_model",
    "moment_probe_gap",
    "nearest_indices",
    "nll_comparison",
    "nll_kde",
    "nll_norm",
    "relaxation_weights",
    "sample_call_center",
    "sample_conditional_surrogate",
    "sample_mixture",
    "sample_waiting_times",
    "save_hypotheses_csv",
    "save_model",
    "scott_bandwidth",
    "squared_distance",
    "train",
    "voronoi_shares",
    "wta_evaluate",
    "wta_gradients",
]
