"""Plane-wave Trefftz discontinuous Galerkin solver for the Helmholtz equation.

Subpackages cover meshing on axis-aligned refinement forests, plane-wave
bases, quadrature, UWVF-type assembly, direct solves, a residual-style
error indicator, plane-wave direction adaptivity and hp refinement, the
built-in benchmark problems, and a driver with a small CLI.
"""

__version__ = "0.1.0"
