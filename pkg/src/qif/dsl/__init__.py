"""A small probabilistic while-language with ``leak`` statements."""

from .checker import Checked, check
from .compiler import DEFAULT_MAX_STATES, StateSpace, compile_program, compile_source, state_space
from .parser import parse
from .syntax import Program

__all__ = [
    "Checked",
    "DEFAULT_MAX_STATES",
    "Program",
    "StateSpace",
    "check",
    "compile_program",
    "compile_source",
    "parse",
    "state_space",
]
