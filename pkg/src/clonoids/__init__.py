"""Clonoids between finite modules: exact finite-field and Z/N linear algebra,
δ-interpolation over θ-spaces, uniform-generation certificates, clonoid
closure and the CompRep algorithm."""

from .scalars import (
    FieldSpec,
    NotCoprime,
    NotInvertible,
    NotPrime,
    Submodule,
    UnsupportedOrder,
    field_make,
    howell_form,
    solve_zn,
)
from .linalg import BudgetExceeded, Subspace, colspace, enumerate_subspaces, rank, rank_factorize
from .funcspace import FuncTable, ModuleSpec, delta, minor
from .theta import certificate_delta, coefficients, verify_identity
from .unifgen import (
    Certificate,
    MinorOperator,
    arity_certificate,
    build_JH,
    build_level_certificate,
    combine_product,
    lower_bound,
    op_apply,
    op_compose,
    solve_certificate_direct,
)
from .clonoid import ClonoidLevel, closure_level, enumerate_clonoids, generated_by_n_ary, member
from .comprep import (
    ClonoidCoords,
    LAOperator,
    comprep_bruteforce,
    comprep_solve,
    coords_from_level,
    decompose,
    invariant_submodules,
    lattice_count,
    recompose,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
