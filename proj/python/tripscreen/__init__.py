"""Safe triplet screening for regularized metric learning."""

from ._core import (
    ConfigError,
    DimensionError,
    InputError,
    ParameterError,
    ParseError,
    Problem,
    SchemaError,
    __version__,
    load_dataset,
    project_psd,
    rrpb,
    synthetic_gaussian,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "InputError",
    "ParameterError",
    "ParseError",
    "Problem",
    "SchemaError",
    "__version__",
    "load_dataset",
    "project_psd",
    "rrpb",
    "synthetic_gaussian",
]
