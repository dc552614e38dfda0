"""Workbench for a reversible, probabilistic pi-calculus with guards."""

from .syntax import (NIL, BoxSum, Ident, In, Nil, Out, Par, Process, Res, Sum, Tau,
                     alpha_equivalent, free_names, substitute)
from .parser import ParseError, parse, pretty_print
from .state import DataState, EffectModel
from .env import IdentifierEnv
from .semantics import (Config, forward_transitions, initial_config, prob_transitions,
                        reverse_transitions)
from .lts import build_lts, to_dot, to_json
from .equivalence import EquivOptions, check, step_bisimilar_fr
from .axioms import head_normal_form, normalize, prove_equal

__all__ = [
    "NIL", "BoxSum", "Ident", "In", "Nil", "Out", "Par", "Process", "Res", "Sum", "Tau",
    "alpha_equivalent", "free_names", "substitute", "ParseError", "parse", "pretty_print",
    "DataState", "EffectModel", "IdentifierEnv", "Config", "forward_transitions",
    "initial_config", "prob_transitions", "reverse_transitions", "build_lts", "to_dot",
    "to_json", "EquivOptions", "check", "step_bisimilar_fr", "head_normal_form",
    "normalize", "prove_equal",
]
__version__ = "0.1.0"
