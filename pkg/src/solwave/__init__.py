"""solwave: a desk-scale laboratory for solitary-wave dynamics of the
semiclassical nonlinear Schrodinger equation.

Subpackages:
  profile        radial ground-state solver, moments, linearization
  params         scaling-parameter algebra and rescalings
  potentials     the four external potential kinds
  dynamics       averaged forces, trajectory system, effective Hamiltonian
  nls            split-step spectral evolution of the full field
  decomposition  moving-frame error fields, symplectic pairings
  checks         numerical verification of the structural identities
  cli            batch driver (profile/trajectory/evolve/decompose/validate/scan/report)
"""

__version__ = "0.1.0"
