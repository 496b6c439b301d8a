"""Beer index, k-indices of convexity and convexity ratios of planar polygons and
punctured boxes: Monte Carlo estimators, visibility decomposition, trapezoid covers,
simplex box chains and the extremal constructions that pin the bounds down."""

__version__ = "0.1.0"

from .constructions import ConeSet, PuncturedBox, comb_polygon, cone_lift, hyperplane_partition, punctured_box_net
from .estimators import Estimate, estimate_beer_index, estimate_convexity_ratio, estimate_k_chain, estimate_k_index
from .geom_core import Segment, orient2d
from .polygon import RootedPolygon, SimplePolygon

__all__ = [
    "ConeSet", "Estimate", "PuncturedBox", "RootedPolygon", "Segment", "SimplePolygon",
    "comb_polygon", "cone_lift", "estimate_beer_index", "estimate_convexity_ratio", "estimate_k_chain",
    "estimate_k_index", "hyperplane_partition", "orient2d", "punctured_box_net",
]
