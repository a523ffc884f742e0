import typing
from pathlib import Path

import lark
import numpy as np
from lark.exceptions import LarkError

import zoomforge
from zoomforge.shared.errors import InputError
from zoomforge.shared.utils import ensure_registries

GRAMMAR = Path(__file__).with_name("threshold.lark")

BINARY = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
    "pow": np.power,
}


def threshold_parser() -> lark.Lark:
    if zoomforge.THRESHOLD_PARSER is None:
        with open(GRAMMAR, "r") as f:
            zoomforge.THRESHOLD_PARSER = lark.Lark(f.read(), parser="lalr")
    return zoomforge.THRESHOLD_PARSER


def _check_names(tree: lark.Tree):
    for node in tree.iter_subtrees():
        if node.data == "var" and node.children[0].value != "T":
            raise InputError(f"Unknown variable '{node.children[0].value}' in threshold; only T is allowed.")
        if node.data == "call" and node.children[0].value not in zoomforge.THRESHOLD_FUNCS:
            known = ", ".join(sorted(zoomforge.THRESHOLD_FUNCS))
            raise InputError(f"Unknown threshold function '{node.children[0].value}'. Known: {known}")


def parse_threshold(expression: str) -> lark.Tree:
    """
    Parse a b(T) expression. Raises InputError (a ValueError) for syntax errors, unknown
    functions or variables other than T.
    """
    expression = expression.strip()
    if expression not in zoomforge.THRESHOLD_CACHE:
        ensure_registries()
        try:
            tree = threshold_parser().parse(expression)
        except LarkError as err:
            raise InputError(f"Invalid threshold expression '{expression}': {err}") from err
        _check_names(tree)
        zoomforge.THRESHOLD_CACHE[expression] = tree
    return zoomforge.THRESHOLD_CACHE[expression]


def evaluate(node, t: np.ndarray) -> np.ndarray:
    if isinstance(node, lark.Token):
        raise InputError(f"Unexpected token '{node.value}' in threshold expression.")
    match node.data:
        case "number":
            return np.full(t.shape, float(node.children[0].value))
        case "var":
            return t
        case "neg":
            return -evaluate(node.children[0], t)
        case "call":
            func = zoomforge.THRESHOLD_FUNCS[node.children[0].value]
            args = node.children[1].children if len(node.children) > 1 else []
            return np.asarray(func(*[evaluate(a, t) for a in args]), dtype=float)
        case op if op in BINARY:
            left, right = (evaluate(c, t) for c in node.children)
            return BINARY[op](left, right)
    raise InputError(f"Unsupported node '{node.data}' in threshold expression.")


def threshold_function(expression: str) -> typing.Callable[[np.ndarray], np.ndarray]:
    tree = parse_threshold(expression)

    def b(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return evaluate(tree, t)

    return b


def validate_threshold(expression: str, horizon: int, ratio: float = 0.75, flat: float = 1e-3):
    """
    Check that log2 b(T) / T tends to 0 over the horizon grid T = 2, 4, ...,
    horizon. The ratio at the end of the grid must either be below `flat` or
    have fallen by the factor `ratio` since a quarter of the horizon.
    Returns the threshold function.
    """
    b = threshold_function(expression)
    grid = np.unique(np.concatenate([2 ** np.arange(1, int(np.log2(max(horizon, 2))) + 1), [max(horizon, 2)]]))
    values = b(grid.astype(float))
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise InputError(f"Threshold '{expression}' must be positive and finite for T in 2..{horizon}.")
    if len(grid) < 3:
        return b
    rate = np.log2(values) / grid
    last = rate[-1]
    quarter = rate[np.searchsorted(grid, grid[-1] / 4, side="right") - 1]
    if last > flat and last > ratio * quarter:
        raise InputError(
            f"Threshold '{expression}' grows exponentially: log2 b(T)/T = {last:.3g} at T = {grid[-1]}."
        )
    return b
