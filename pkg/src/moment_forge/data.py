"""Dataset container: model inputs x plus optional conditioning block z."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows of model inputs x (n, x_dim) and, for conditional problems, z (n, z_dim)."""

    x: np.ndarray
    z: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        object.__setattr__(self, "x", x)
        if self.z is not None:
            z = np.asarray(self.z, dtype=float)
            if z.ndim == 1:
                z = z[:, None]
            if z.shape[0] != x.shape[0]:
                raise ValueError(f"x has {x.shape[0]} rows but z has {z.shape[0]}")
            object.__setattr__(self, "z", z)
        if x.shape[0] < 1:
            raise ValueError("dataset must be nonempty")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def x_dim(self) -> int:
        return self.x.shape[1]

    @property
    def z_dim(self) -> int:
        return 0 if self.z is None else self.z.shape[1]

    def joint(self) -> np.ndarray:
        """Concatenated (x, z) rows; just x when there is no conditioning block."""
        if self.z is None:
            return self.x
        return np.hstack([self.x, self.z])

    def subset(self, idx) -> "Dataset":
        return Dataset(self.x[idx], None if self.z is None else self.z[idx])
