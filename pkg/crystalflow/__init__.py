"""
crystalflow: crystalline curvature flow of convex polygons, a fine-grid smooth
reference solver and the harness measuring their O(dtheta^2) Hausdorff convergence
"""

__version__ = "1.0.0"
