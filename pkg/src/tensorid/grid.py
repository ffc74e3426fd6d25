"""Grid geometry: mapping real samples to cell indices and interpolation
weights, plus the tapped delay line used by every streaming learner.

A grid of size I with step dx covers rows 1..I; a sample x lands in cell k
(rows k and k+1 are the cell corners) with fractional position u in [0, 1):

    k = floor(x / dx) + ceil(I / 2),   u = x / dx - floor(x / dx)

clamped so that k stays in [1, I-1] and the interpolation cell is always
valid.  Out-of-range samples saturate: below the grid u pins to 0, above it
u pins to 1 - 2^-40 of the cell.
"""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass

#: Fractional weight used when a sample saturates at the top of the grid.
UPPER_SATURATION = 1.0 - 2.0 ** -40


@dataclass(frozen=True)
class InterpWeights:
    """Convex pair (1-u, u) for one mode; u in [0, 1)."""

    u: float

    def __post_init__(self):
        if not 0.0 <= self.u < 1.0:
            raise ValueError(f"u must lie in [0, 1), got {self.u}")

    @property
    def vec(self) -> tuple[float, float]:
        return (1.0 - self.u, self.u)

    def __getitem__(self, label: int) -> float:
        return self.vec[label]


@dataclass(frozen=True)
class Discretizer:
    """Uniform grid: step dx > 0, size I >= 2, center offset ceil(I/2)."""

    delta_x: float
    grid_size: int

    def __post_init__(self):
        if not (math.isfinite(self.delta_x) and self.delta_x > 0):
            raise ValueError(f"delta_x must be positive, got {self.delta_x}")
        if int(self.grid_size) != self.grid_size or self.grid_size < 2:
            raise ValueError(f"grid_size must be an integer >= 2, got {self.grid_size}")
        object.__setattr__(self, "grid_size", int(self.grid_size))

    @classmethod
    def from_half_range(cls, half_range: float, grid_size: int) -> "Discretizer":
        """Grid whose rows span roughly [-half_range, +half_range]."""
        return cls(2.0 * half_range / grid_size, grid_size)

    @property
    def offset(self) -> int:
        return -(-self.grid_size // 2)  # ceil(I/2)

    def locate0(self, x: float) -> tuple[int, float]:
        """(0-based lower-corner row, fractional u) with clamping applied."""
        if not math.isfinite(x):
            raise ValueError(f"sample must be finite, got {x}")
        q = x / self.delta_x
        f = math.floor(q)
        u = q - f
        if u >= 1.0:  # q a hair under an integer: u rounds up to 1.0
            f += 1
            u = 0.0
        k = f + self.offset
        if k < 1:
            return 0, 0.0
        if k > self.grid_size - 1:
            return self.grid_size - 2, UPPER_SATURATION
        return k - 1, u

    def cell_index(self, x: float) -> int:
        """1-based cell index k, clamped into [1, I-1]."""
        return self.locate0(x)[0] + 1

    def weights(self, x: float) -> InterpWeights:
        """Fractional weights for x, clamp-consistent with cell_index."""
        return InterpWeights(self.locate0(x)[1])

    def locate(self, x: float) -> tuple[int, InterpWeights]:
        k0, u = self.locate0(x)
        return k0 + 1, InterpWeights(u)


class TapDelayLine:
    """Fixed-length FIFO of the most recent entries, newest first.

    Entries are generic; slots start out as `fill` (zero for signal lines).
    """

    def __init__(self, length: int, fill=0.0):
        if length < 1:
            raise ValueError(f"length must be positive, got {length}")
        self._buf = collections.deque([fill] * length, maxlen=length)

    def push(self, entry) -> "TapDelayLine":
        """Insert the newest entry, dropping the oldest."""
        self._buf.appendleft(entry)
        return self

    def values(self) -> list:
        return list(self._buf)

    def __len__(self) -> int:
        return self._buf.maxlen

    def __iter__(self):
        return iter(self._buf)

    def __getitem__(self, i):
        return self._buf[i]
