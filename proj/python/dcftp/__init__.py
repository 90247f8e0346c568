"""Exact stationary samples of open single-server queueing networks."""

from ._core import (
    Config,
    DcftpError,
    load_config,
    oracle_means,
    parse_config,
    sample,
    table1_true_means,
    validate,
)

__all__ = [
    "Config",
    "DcftpError",
    "load_config",
    "oracle_means",
    "parse_config",
    "sample",
    "table1_true_means",
    "validate",
]
