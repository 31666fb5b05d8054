"""Small-time asymptotics for stochastic volatility driven by self-similar Gaussian processes.

Modules
-------
kernels      covariance kernels (Brownian motion, fBm, Riemann-Liouville fBm)
spectrum     Karhunen-Loeve spectrum and the constants built from it
mc           Monte-Carlo oracle (paths, integrated variance, mixing prices)
pricing      Black-Scholes prices and implied volatility
asymptotics  closed-form small-time formulas
calibration  H estimators and the small-time study
cli          command-line interface
"""

__version__ = "0.1.0"
