"""Divergence-free positive symmetric tensor fields and their sharp
determinant inequalities: constructors, checkers, proof machinery, and
fluid/kinetic a priori estimates."""

from .domain import Ball, Box, ConvexPolytope, GridSpec, Torus
from .field import (
    ScalarField,
    TensorField,
    VectorField,
    boundary_trace_norm,
    congruence,
    discrete_divergence,
    divergence_mass,
    field_average,
    load_field,
    save_field,
)
from .report import CheckReport
from .symmat import SymMat, cofactor, det_power, psd_check, sphere_area

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "Box",
    "CheckReport",
    "ConvexPolytope",
    "GridSpec",
    "ScalarField",
    "SymMat",
    "TensorField",
    "Torus",
    "VectorField",
    "boundary_trace_norm",
    "cofactor",
    "congruence",
    "det_power",
    "discrete_divergence",
    "divergence_mass",
    "field_average",
    "load_field",
    "psd_check",
    "save_field",
    "sphere_area",
]
