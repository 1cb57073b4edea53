"""Cyclic parabolic SO0(2,3)-Higgs bundle laboratory.

Submodules:

- ``liegroup``    KAK decomposition, Cartan projection, simple roots
- ``hypgeom``     Poincare-disk and cusp hyperbolic geometry
- ``bundle``      parabolic degrees, stability, pointwise spectral data
- ``modelmetric`` residues, weight filtrations, sl2 triples, local model metric
- ``hitchin``     radial solver for the coupled self-duality system
- ``transport``   flat connection assembly and parallel transport
- ``anosov``      Morse-function estimates and domination fits
- ``cli``         scenario files and pipeline orchestration
"""

__version__ = "0.1.0"
