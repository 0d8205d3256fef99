"""Reversible jump Metropolis light transport sampling library."""

from ._rjmlt import (
    ChainStats,
    ChiSquareResult,
    KindStats,
    RenderStats,
    chi_square_test,
    gamma_p,
    gamma_q,
    interval_inverse,
    jump_acceptance,
    metropolis_acceptance,
    mse,
    oned,
    path_trace,
    read_pfm,
    relative_mse,
    render,
    run_cli,
    sample_index,
    write_pfm,
    write_ppm,
)

__all__ = [
    "ChainStats",
    "ChiSquareResult",
    "KindStats",
    "RenderStats",
    "chi_square_test",
    "gamma_p",
    "gamma_q",
    "interval_inverse",
    "jump_acceptance",
    "metropolis_acceptance",
    "mse",
    "oned",
    "path_trace",
    "read_pfm",
    "relative_mse",
    "render",
    "run_cli",
    "sample_index",
    "write_pfm",
    "write_ppm",
]

__version__ = "0.1.0"
