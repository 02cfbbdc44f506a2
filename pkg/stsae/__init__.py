"""Spatio-temporal small-area estimation engine.

Fits a Bayesian hierarchical model (dynamic regression coefficients,
CAR space-varying coefficients and a CAR random-walk intercept) to
plot-level inventory data with a Gibbs/Metropolis sampler, and compares
it against design-based direct estimates.
"""

__all__ = ["__version__"]
__version__ = "0.1.0"
