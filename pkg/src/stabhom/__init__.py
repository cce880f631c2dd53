"""Exact integral homology toolkit for finite spherical buildings,
opposition complexes and relative spectral sequences."""

__version__ = "0.1.0"

from .intlinalg import (  # noqa: F401
    BudgetExceeded,
    FgAbGroup,
    PreconditionError,
    SmithForm,
    SparseIntMatrix,
    homology_at,
    snf,
    subquotient,
)
