"""Exact-arithmetic star products on symplectic Lie algebroid charts."""

from .scalars import GaussianRational
from .multipoly import MultiPoly
from .hbar import HbarSeries, series_truncate
from .parsing import parse_poly, parse_series, ParseError
from .weyl import (
    WeylContext,
    WeylElement,
    center_test,
    grading_split,
    moyal_product,
    weyl_commutator,
)
from .charts import (
    AlgebroidChart,
    EForm,
    ValidationReport,
    catalogue,
    e_derham_d,
    hamiltonian_field,
    poisson_bracket,
    validate_algebroid,
    weyl_model_product,
)
from .errors import (
    GaugeObstruction,
    HbarFloorError,
    OrderOverflowError,
    StructureError,
)

__all__ = [name for name in dir() if not name.startswith("_")]
