"""Printed d = 2 and d = 3 Bell operators, transcribed entry by entry."""

from __future__ import annotations

import numpy as np

R2 = 2 * np.sqrt(2)
T3 = 2 / np.sqrt(3)

S2 = np.array(
    [
        [0, 0, 0, R2],
        [0, 0, 0, 0],
        [0, 0, 0, 0],
        [R2, 0, 0, 0],
    ]
)

S3 = np.array(
    [
        [0, 0, 0, 0, T3, 0, 0, 0, 2],
        [0, 0, 0, 0, 0, T3, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, T3, 0],
        [T3, 0, 0, 0, 0, 0, 0, 0, T3],
        [0, T3, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, T3, 0, 0, 0, 0, 0],
        [2, 0, 0, 0, T3, 0, 0, 0, 0],
    ]
)
