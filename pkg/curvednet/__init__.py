"""
CurvedNet
=========
Spherical, hyperbolic and mixed-curvature embedding classifiers with
geometric anomaly scores and OOD evaluation metrics.
"""

__version__ = "1.0.0"
