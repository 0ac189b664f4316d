"""Sigma-point multipath SLAM: filter, particle baseline, simulator and metrics."""

from ._core import (
    OUTPUT_ROOT_ENV,
    SUMMARY_SCHEMA_VERSION,
    ConfigError,
    DomainError,
    Error,
    ExperimentConfig,
    GeometryError,
    NumericalError,
    ShapeError,
    birth_map,
    config_defaults,
    gaussian_product,
    load_config,
    loopy_da,
    measurement_fn,
    mirror_va,
    moment_match,
    ospa,
    parse_config,
    run,
    simulate,
    unscented_transform,
)

__version__ = "0.1.0"
