"""Dihedral lamplighter groups, their diagonal products and random-walk speeds."""

__version__ = "0.1.0"

from .groups import (  # noqa: E402
    INF,
    DiagonalSpec,
    DihedralElem,
    FreeWord,
    GroupSpec,
    WreathElem,
    diagonal_eval,
    eval_word,
    evaluate,
    parse_spec,
)

__all__ = [
    "INF",
    "DiagonalSpec",
    "DihedralElem",
    "FreeWord",
    "GroupSpec",
    "WreathElem",
    "diagonal_eval",
    "eval_word",
    "evaluate",
    "parse_spec",
    "__version__",
]
