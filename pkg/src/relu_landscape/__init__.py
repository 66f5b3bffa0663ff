"""Loss-landscape analysis for one-hidden-layer ReLU networks.

Tools to locate the least-squares critical points of each activation cell,
decide whether they are genuine (realisable inside their own cell), estimate
the same probability analytically for 1D Gaussian data, probe cell geometry
and check verdicts with plain gradient descent.
"""
__version__ = "0.1.0"
