"""Executable semantics for the update-pi calculus."""
from .congruence import canonical, normalize, struct_eq
from .engine import Configuration, Engine, EngineError, Flags, StaleStepError, StepRecord
from .lts import correspondence_check, tau_closure, transitions
from .state import match, state_of
from .subst import Substitution, apply
from .syntax import ParseError, parse, print_term
from .terms import Name, ProcessVar, StateMultiset, alpha_eq, free_names, free_vars
from .trace import export_trace, import_trace, replay
from .update import RecoveryLedger, comp, recover, try_update, version_gate

__all__ = [
    "canonical", "normalize", "struct_eq",
    "Configuration", "Engine", "EngineError", "Flags", "StaleStepError", "StepRecord",
    "correspondence_check", "tau_closure", "transitions",
    "match", "state_of", "Substitution", "apply",
    "ParseError", "parse", "print_term",
    "Name", "ProcessVar", "StateMultiset", "alpha_eq", "free_names", "free_vars",
    "export_trace", "import_trace", "replay",
    "RecoveryLedger", "comp", "recover", "try_update", "version_gate",
]
