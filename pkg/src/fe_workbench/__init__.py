"""Numerical workbench for flow-equation renormalization bounds.

Modules: momenta (configurations, eta, renormalization-point geometry),
regulator (regularized propagators and covariance), trees (weighted trees),
tensors (monomial bases, Gram ranks, decomposition), chains and flow
(loop chains, one-loop integration, bound fits), estimates (inequality
sweeps), renorm_points (renormalization-point fixture) and cli.
"""

__version__ = "0.1.0"
