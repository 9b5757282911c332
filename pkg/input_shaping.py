# input_shaping.py
import numpy as np


class InputShaper:
    """
    The input function g: optional first-order low-pass, then a per-channel clamp.

        y_t = c * y_{t-1} + (1 - c) * raw_t;   u_t = clip(y_t, lo, hi)

    With c = 0 (the default) smoothing is off and g is a pure clamp.
    Works on a single command (m,) or a batch (K, m).
    """

    def __init__(self, bounds, smoothing: float = 0.0):
        self.bounds = np.atleast_2d(np.asarray(bounds, dtype=np.float64))
        if not 0.0 <= smoothing < 1.0:
            raise ValueError(f"smoothing coefficient must lie in [0, 1), got {smoothing}")
        self.smoothing = float(smoothing)

    @property
    def lo(self) -> np.ndarray:
        return self.bounds[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.bounds[:, 1]

    def apply(self, raw, prev=None):
        """Return (shaped command, new filter state)."""
        raw = np.asarray(raw, dtype=np.float64)
        if self.smoothing > 0.0 and prev is not None:
            filt = prev + (1.0 - self.smoothing) * (raw - prev)
        else:
            filt = raw
        return np.clip(filt, self.lo, self.hi), filt

    def clamp(self, raw):
        return np.clip(np.asarray(raw, dtype=np.float64), self.lo, self.hi)
