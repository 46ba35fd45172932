"""
Graph Sample and Hold.

Single-pass sampling of edge streams with unbiased subgraph-count
estimators, variance estimates and confidence bounds.
"""

__version__ = "1.0.0"
