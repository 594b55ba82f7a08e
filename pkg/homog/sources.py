from typing import Callable, Dict

import numpy as np

from errors import ConfigError

SourceFunction = Callable[[np.ndarray], np.ndarray]


def _one(x):
    return np.ones(x.shape[:-1])


def _zero(x):
    return np.zeros(x.shape[:-1])


def _sin_sin(x):
    return np.prod(np.sin(np.pi * x), axis=-1)


def _sin_sin_manufactured(x):
    # -Δ of sin(πx_1)...sin(πx_n)
    return x.shape[-1] * np.pi ** 2 * _sin_sin(x)


def _sin_2pi_x1(x):
    return np.sin(2.0 * np.pi * x[..., 0])


SOURCES: Dict[str, SourceFunction] = {
    "one": _one,
    "zero": _zero,
    "sin_sin": _sin_sin,
    "sin_sin_manufactured": _sin_sin_manufactured,
    "sin_2pi_x1": _sin_2pi_x1,
}


def source_function(name: str, scale: float = 1.0) -> SourceFunction:
    """
    Looks up a closed-form function of x (..., n) by its configuration name.
    """
    if name not in SOURCES:
        raise ConfigError("problem.source", f"unknown source {name!r}; expected one of {sorted(SOURCES)}")
    function = SOURCES[name]
    if scale == 1.0:
        return function
    return lambda x: scale * function(x)
