import math

import zoomforge

ROW_TOLERANCE = 1e-12


def threshold_expression(value: str) -> str:
    """
    Validate a b(T) expression: it must parse and only call registered
    threshold functions.
    """
    from zoomforge.estimators.thresholds import parse_threshold

    # parse_threshold raises ValueError with a readable message.
    parse_threshold(value)
    return value.strip()


def stochastic_kernel(value: list[list[float]]) -> list[list[float]]:
    if not value or not value[0]:
        raise ValueError("Transition kernel cannot be empty.")
    width = len(value[0])
    for i, row in enumerate(value):
        if len(row) != width:
            raise ValueError(f"Kernel row {i} has {len(row)} entries, expected {width}.")
        for p in row:
            if not (0.0 <= p <= 1.0) or math.isnan(p):
                raise ValueError(f"Kernel row {i} has an entry outside [0, 1]: {p}")
        if abs(math.fsum(row) - 1.0) > ROW_TOLERANCE:
            raise ValueError(f"Kernel row {i} sums to {math.fsum(row)!r}, not 1.")
    return value


def optional_stochastic_kernel(value: list[list[float]] | None) -> list[list[float]] | None:
    if value is None:
        return None
    return stochastic_kernel(value)


def increasing_times(value: list[int]) -> list[int]:
    if any(b <= a for a, b in zip(value, value[1:])):
        raise ValueError("Times must be strictly increasing.")
    return value


def box(value: dict[str, list[float]]) -> dict[str, list[float]]:
    lo, hi = value.get("lo"), value.get("hi")
    if lo is None or hi is None:
        raise ValueError("A box needs both 'lo' and 'hi' corners.")
    if len(lo) != len(hi):
        raise ValueError("Box corners have different dimensions.")
    if any(a >= b for a, b in zip(lo, hi)):
        raise ValueError("Box needs lo < hi on every axis.")
    return {"lo": [float(x) for x in lo], "hi": [float(x) for x in hi]}


def coprime_exponents(n_out: int, n_in: int) -> tuple[int, int]:
    if math.gcd(n_out, n_in) != 1:
        raise ValueError(
            f"zoomout_exp={n_out} and alpha_exp={n_in} must be relatively prime."
        )
    return n_out, n_in


def registered(kind: str, registry: dict, what: str) -> str:
    if registry and kind not in registry:
        raise ValueError(f"Unknown {what} '{kind}'. Known: {', '.join(sorted(registry))}")
    return kind


def model_name(value: str) -> str:
    return registered(value, zoomforge.MODEL_CLASSES, "model")


def coder_kind(value: str) -> str:
    return registered(value, zoomforge.CODER_CLASSES, "codec kind")
