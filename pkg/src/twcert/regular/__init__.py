"""Terminal graphs, homomorphism-class algebras and the sequential DP."""

from .algebras import ALGEBRAS, Algebra, DominatingSet, IndependentSet, NonColorability, get_algebra
from .dp import (
    UNREALIZABLE,
    brute_force_optimum,
    brute_force_property,
    dp_evaluate,
    dp_optimum,
    max_weight_table,
)
from .terminal import (
    Expr,
    GlueError,
    GlueMatrix,
    TerminalGraph,
    decomposition_to_expression,
    evaluate_class,
    evaluate_graph,
    glue,
)
