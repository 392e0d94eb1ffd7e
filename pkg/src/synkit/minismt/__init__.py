"""A small SMT-LIB 2 solver for quantifier-free linear arithmetic + booleans.

Shipped so the toolchain is self-contained: the BMC engine talks SMT-LIB 2
over a subprocess, and `synkit-smt` is the default solver binary. Any other
SMT-LIB 2.6 solver with model production can be configured instead.

Architecture: definition inlining and constant folding first (closed
deterministic unrollings collapse to literals), then Tseitin CNF over a
CDCL SAT core, with theory atoms checked lazily by an exact-rational
simplex plus branch-and-bound for integers.
"""
from .solver import Solver, MiniSmtError

__all__ = ["Solver", "MiniSmtError"]
