"""Rusanov theta-scheme for the KdV equation and a grid-refinement convergence harness."""
