"""Functionals of two-phase fields: quadrature, sampled fields, traces."""
from .fields import PreconditionError, SampledField, as_sampled
from .functionals import (Bump, EnergyBoundResult, FunctionalTrace, acf_phi, blowup_sample,
                          energy_bound_check, fitted_orders, functional_AB, gc_M,
                          geometric_radii, monotone_violations, oddson_check, phase_parts,
                          poincare_exponents, random_bumps, residual_convergence,
                          variational_residual, weiss_M)
from .quadrature import QuadratureToleranceError, chord_length, circle_integral, disk_integral

__all__ = [
    "PreconditionError", "SampledField", "as_sampled", "Bump", "EnergyBoundResult",
    "FunctionalTrace", "acf_phi", "blowup_sample", "energy_bound_check", "fitted_orders",
    "functional_AB", "gc_M", "geometric_radii", "monotone_violations", "oddson_check",
    "phase_parts", "poincare_exponents", "random_bumps", "residual_convergence",
    "variational_residual", "weiss_M", "QuadratureToleranceError", "chord_length",
    "circle_integral", "disk_integral",
]
