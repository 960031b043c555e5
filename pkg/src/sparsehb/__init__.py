"""Hierarchical basis preconditioning on generalized sparse grids.

Builds sparse grid spaces over monotone index sets with the tensor-product
Faber-Schauder basis, assembles the diagonally scaled Dirichlet Laplacian and
measures its extreme eigenvalues against combinatorial bounds.
"""
__version__ = "0.1.0"

from .index_sets import (IndexSet, bounds_quantities, gap_example, is_monotone, level_partition,
                         make_energy_optimized, make_full_grid, make_isotropic_full_grid,
                         make_standard_sparse, maximal_elements, monotone_closure, r0)
from .basis import SparseGridSpace
from .assembly import GalerkinSystem
from .spectral import dense_extremal_eigs, extremal_eigs, sandwich_check, system_lanczos_eigs
