"""Generalized Buchi acceptance and ALTL model checking for process rewrite systems."""
from .altl import model_check_inf, negate_to_dnf, parse_formula, parse_prop
from .decide import DecisionSession, accepts, decide_accepting
from .normalize import add_entry_rule, lift_query, normalize
from .oracle import oracle_accepting, oracle_holds_inf
from .syntax import format_system, parse_system, parse_term
from .system import Lasso, Mbrs, Rule, comps, step
from .terms import EPS, canonicalize, par, seq, var
from .verdict import SearchBudget, Verdict

__all__ = [
    "DecisionSession", "EPS", "Lasso", "Mbrs", "Rule", "SearchBudget", "Verdict",
    "accepts", "add_entry_rule", "canonicalize", "comps", "decide_accepting", "format_system",
    "lift_query", "model_check_inf", "negate_to_dnf", "normalize", "oracle_accepting",
    "oracle_holds_inf", "par", "parse_formula", "parse_prop", "parse_system", "parse_term",
    "seq", "step", "var",
]
