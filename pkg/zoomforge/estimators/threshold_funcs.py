"""
Functions available inside b(T) threshold expressions. Every public
function here is registered under its own name.
"""

import numpy as np


def sqrt(x):
    return np.sqrt(x)


def log2(x):
    return np.log2(x)


def log(x):
    return np.log(x)


def exp2(x):
    return np.exp2(x)


def abs(x):
    return np.abs(x)


def min(*args):
    return np.minimum.reduce(np.broadcast_arrays(*args))


def max(*args):
    return np.maximum.reduce(np.broadcast_arrays(*args))
