"""
超矩形细化为超椭球
"""
from .base import BoundaryFit, BoundaryParams, Pack, Provenance
from .ellipsoid import FeatureRule, Signature, feature_rules, make_pack, to_ellipsoid
from .refiner import (
    RectangleRefiner,
    RefinementOutcome,
    Vicinity,
    filter_vicinity,
    pareto_frontier,
    refine_rectangle,
)
from .solver import COEF_BOUND, fit_boundary

__all__ = [
    'BoundaryFit',
    'BoundaryParams',
    'Pack',
    'Provenance',
    'FeatureRule',
    'Signature',
    'feature_rules',
    'make_pack',
    'to_ellipsoid',
    'RectangleRefiner',
    'RefinementOutcome',
    'Vicinity',
    'filter_vicinity',
    'pareto_frontier',
    'refine_rectangle',
    'COEF_BOUND',
    'fit_boundary',
]
