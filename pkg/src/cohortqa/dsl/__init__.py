"""Restricted program language: AST, parser, canonical formatter, static checks."""

from .checker import MIN_RETRIEVES, CheckReport, check_program, count_static_retrieves
from .formatter import format_program
from .nodes import (
    BINARY_OPS,
    BUILTINS,
    Append,
    Assign,
    Binary,
    BuiltinCall,
    Expr,
    ForEach,
    FormatString,
    If,
    Index,
    Interp,
    Literal,
    ParamRef,
    Program,
    RetrieveCall,
    Return,
    Span,
    Stmt,
    Unary,
    ValueKind,
    VarRef,
    statement_exprs,
    walk_exprs,
    walk_statements,
)
from .parser import (
    ForbiddenConstruct,
    ParseError,
    ProgramSyntaxError,
    SignatureMismatch,
    parse_header,
    parse_program,
)

__all__ = [
    "Append", "Assign", "Binary", "BuiltinCall", "CheckReport",
    "Expr", "ForEach", "ForbiddenConstruct", "FormatString", "If", "Index",
    "Interp", "Literal", "MIN_RETRIEVES", "ParamRef", "ParseError", "Program",
    "ProgramSyntaxError", "RetrieveCall", "Return", "SignatureMismatch",
    "Span", "Stmt", "Unary", "ValueKind", "VarRef", "BINARY_OPS", "BUILTINS",
    "check_program", "count_static_retrieves", "format_program",
    "parse_header", "parse_program", "statement_exprs", "walk_exprs",
    "walk_statements",
]
