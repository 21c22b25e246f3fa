"""Published numbers that the computations are checked against.

Values are copied to the printed precision. Tables of measured S_d are keyed
by d and hold (S_d, sigma).
"""

from __future__ import annotations

# d -> (<psi|S_d|psi> for the maximally entangled state, largest eigenvalue of S_d)
VIOLATION_TABLE = {
    2: (2.8284, 2.8284),
    3: (2.8729, 2.9149),
    4: (2.8962, 2.9727),
    5: (2.9105, 3.0157),
    6: (2.9202, 3.0497),
    7: (2.9272, 3.0776),
    8: (2.9324, 3.1013),
    9: (2.9365, 3.1217),
    10: (2.9398, 3.1396),
    11: (2.9425, 3.1555),
    12: (2.9448, 3.1698),
    13: (2.9467, 3.1827),
    14: (2.9483, 3.1946),
}

# five largest eigenvalues of S_11 with the diagonal offset of each eigenvector's support
D11_SPECTRUM = ((3.1555, 0), (2.4107, 1), (2.4107, -1), (1.9709, 2), (1.9709, -2))


def _table(values, sigmas) -> dict[int, tuple[float, float]]:
    return {d: (s, e) for d, s, e in zip(range(2, 15), values, sigmas)}


# filtered, all radial modes
MEASURED_FILTERED = _table(
    (2.79, 2.78, 2.87, 2.73, 2.76, 2.62, 2.56, 2.46, 2.47, 2.39, 2.24, 2.07, 1.89),
    (0.03, 0.04, 0.04, 0.05, 0.06, 0.07, 0.07, 0.07, 0.07, 0.07, 0.08, 0.08, 0.08),
)
# filtered, radial index p = 0 only
MEASURED_FILTERED_P0 = _table(
    (2.45, 2.4, 2.67, 2.46, 2.79, 2.71, 2.65, 2.7, 2.54, 2.67, 2.1, 2.11, 1.69),
    (0.09, 0.1, 0.11, 0.12, 0.14, 0.14, 0.16, 0.2, 0.21, 0.22, 0.2, 0.22, 0.24),
)
# no entanglement concentration
MEASURED_UNFILTERED = _table(
    (2.76, 2.77, 2.71, 2.69, 2.53, 2.49, 2.31, 2.19, 1.95, 2.05, 1.75, 1.65, 1.32),
    (0.03, 0.04, 0.04, 0.05, 0.05, 0.06, 0.06, 0.07, 0.07, 0.07, 0.07, 0.07, 0.07),
)

WITNESS_BOUND_S11 = 2.14
MEASURED_S11 = MEASURED_FILTERED[11]
MEASURED_S11_P0 = MEASURED_FILTERED_P0[11]
