"""Dose-response and derivative-effect curve estimation."""

from drcurve._core import (
    estimate_curve,
    gen_dgp1,
    gen_dgp2,
    kernel_moment,
    load_csv,
    m_true,
    make_folds,
    theta_true,
    uniform_band,
)

__all__ = [
    "estimate_curve",
    "gen_dgp1",
    "gen_dgp2",
    "kernel_moment",
    "load_csv",
    "m_true",
    "make_folds",
    "theta_true",
    "uniform_band",
]
