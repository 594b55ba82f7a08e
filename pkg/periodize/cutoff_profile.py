from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CutoffProfile:
    """
    Smooth even cutoff θ: equal to 1 for |t| <= inner, 0 for |t| >= outer, quintic
    smoothstep in between.
    """
    inner: float = 1.0 / 8.0
    outer: float = 3.0 / 8.0

    def __call__(self, t) -> np.ndarray:
        u = np.clip((np.abs(np.asarray(t, dtype=float)) - self.inner) / (self.outer - self.inner), 0.0, 1.0)
        return 1.0 - u ** 3 * (10.0 - 15.0 * u + 6.0 * u ** 2)

    def bracket(self, y) -> np.ndarray:
        """
        ½(θ(y) − θ(1 − y)): +½ near y = 0, −½ near y = 1.
        """
        y = np.asarray(y, dtype=float)
        return 0.5 * (self(y) - self(1.0 - y))
