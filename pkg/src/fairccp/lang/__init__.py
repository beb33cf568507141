from .ast import (
    Agent, Ask, Call, Choice, ConstraintRef, Cut, Declaration, Exists, Fail,
    FairPar, Level, Par, Program, Success, Tell, Threshold, all_variables, ask,
    free_variables, node_kinds, substitute,
)
from .parser import ParseError, parse, parse_file, tokenize
from .pretty import format_agent, format_program

__all__ = [
    "Agent", "Ask", "Call", "Choice", "ConstraintRef", "Cut", "Declaration",
    "Exists", "Fail", "FairPar", "Level", "Par", "ParseError", "Program",
    "Success", "Tell", "Threshold", "all_variables", "ask", "format_agent",
    "format_program", "free_variables", "node_kinds", "parse", "parse_file",
    "substitute", "tokenize",
]
