"""Fair (soft) concurrent constraint programming.

Soft constraints over c-semirings, a parser for cc/scc programs with the fair
parallel operator ``par(A1, ..., Am)``, carpool and soft-section schedulers,
and a deterministic small-step interpreter that emits JSON-lines traces.
"""

from .constraints import (
    SCSP, ConstraintError, ConstraintSystem, SoftConstraint, Store, blevel,
    combine, entails, leq_constraint, project, solution, store_blevel,
    store_tell,
)
from .engine import (
    Configuration, Outcome, RunOptions, RunResult, TraceEvent, enabled_set,
    equivalence_check, initial, replay, run, step,
)
from .lang import ParseError, Program, parse, parse_file
from .semiring import (
    BOOLEAN, FUZZY, WEIGHTED, CSemiring, SemiringValue, get_semiring, leq,
    plus, times,
)

__version__ = "0.1.0"
