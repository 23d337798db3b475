"""Symbolic-numeric engine for parametric oscillatory integrals.

Modules: ``kernel`` (exact exponents, strips, poles, coefficients),
``generators`` (the term model and its JSON format), ``rewrite``
(transforms, integration by parts, splitting, monomial integration),
``grid`` (grids and integration loci), ``asymptotics`` (expansions and
limits), ``numeric`` (quadrature oracles and equidistribution checks) and
``cli``.
"""

from .kernel import (
    Divergent, OracleFailure, OscintError, ParseError, PreconditionViolated, SCHEMA,
)
from .generators import GeneratorSum, dumps

__version__ = "0.1.0"

__all__ = ["Divergent", "GeneratorSum", "OracleFailure", "OscintError", "ParseError",
           "PreconditionViolated", "SCHEMA", "dumps", "__version__"]
