"""
Tensor-train products of experts for sampling-based model predictive control
"""
__version__ = "0.1.0"
