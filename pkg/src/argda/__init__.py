"""Transductive domain adaptation with attention-regularized Laplacian graphs."""

__version__ = "0.1.0"
