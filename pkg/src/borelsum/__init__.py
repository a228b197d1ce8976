"""Borel-Laplace summation toolkit for quasilinear evolution equations.

Subpackages cover: problem normalization and cone checks (`problem`),
exact ramified series algebra (`series`), Borel-plane grids, norms and
convolution (`grid`), the fixed-point solver (`solver`), Laplace/inverse
Laplace transforms and kernel acceleration (`transforms`), and the
moving-singularity case study (`harrydym`).
"""

__version__ = "0.1.0"
