"""Truncation-ready weight quantization toolkit.

Lower-precision integer weights are obtained from higher-precision ones by
a plain right shift of the bins; this package provides the quantizers that
make that exact, the interval/error analysis explaining why the standard
uniform quantizer does not, and a toy quantization-aware training harness
demonstrating the scheme end to end.
"""

from .analysis import (
    GapInterval,
    Interval,
    QtReport,
    qt_error,
    qt_gap_intervals,
    qt_gap_measure,
    quant_binwidth,
    quant_error,
    surrogate_slope,
    trunc_binwidth,
    truncready_binwidth,
)
from .datasets import Dataset, DatasetSpec, make_dataset
from .errors import (
    DegenerateInputError,
    DomainError,
    FormatError,
    PrecisionOrderError,
    ShapeError,
    TrainingError,
    TruncQuantError,
)
from .fileio import (
    read_any,
    read_checkpoint,
    read_tensor,
    write_checkpoint,
    write_tensor,
)
from .qat import (
    MlpLayer,
    MlpModel,
    TrainConfig,
    TrainStep,
    backward,
    evaluate,
    forward,
    load_model,
    save_model,
    train,
)
from .quantize import (
    SCHEMES,
    TRUNCQUANT,
    UNIFORM,
    QuantConfig,
    QuantizedTensor,
    dequantize,
    quantize,
    round_half_away,
    ste_backward,
    truncquant,
    uniform_quantize,
)
from .storage import LayerInfo, StorageRow, read_layer_table, storage_report
from .tensors import (
    DOREFA_TANH,
    MINMAX,
    NormalizationParams,
    denormalize,
    normalize,
)
from .truncate import truncate, truncate_chain

__version__ = "0.1.0"

__all__ = [
    "DegenerateInputError",
    "DomainError",
    "DOREFA_TANH",
    "Dataset",
    "DatasetSpec",
    "FormatError",
    "GapInterval",
    "Interval",
    "LayerInfo",
    "MINMAX",
    "MlpLayer",
    "MlpModel",
    "NormalizationParams",
    "PrecisionOrderError",
    "QtReport",
    "QuantConfig",
    "QuantizedTensor",
    "SCHEMES",
    "ShapeError",
    "StorageRow",
    "TRUNCQUANT",
    "TrainConfig",
    "TrainStep",
    "TrainingError",
    "TruncQuantError",
    "UNIFORM",
    "backward",
    "denormalize",
    "dequantize",
    "evaluate",
    "forward",
    "load_model",
    "make_dataset",
    "normalize",
    "qt_error",
    "qt_gap_intervals",
    "qt_gap_measure",
    "quant_binwidth",
    "quant_error",
    "quantize",
    "read_any",
    "read_checkpoint",
    "read_layer_table",
    "read_tensor",
    "round_half_away",
    "save_model",
    "ste_backward",
    "storage_report",
    "surrogate_slope",
    "train",
    "trunc_binwidth",
    "truncate",
    "truncate_chain",
    "truncquant",
    "truncready_binwidth",
    "uniform_quantize",
    "write_checkpoint",
    "write_tensor",
]
