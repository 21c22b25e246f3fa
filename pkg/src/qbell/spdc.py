"""Down-conversion source model: spiral spectrum, reference states and fringes."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from ._io import text_sink
from .errors import ContractError, FitError
from .modes import angle_state, ell_list, mode_map

REFERENCE_GAMMA = 7.58
SERIES_THRESHOLD = 1e-6
FLAT_GAMMA = 1e3


@dataclass(frozen=True)
class ReferenceState:
    """Pure state sum_j coeffs[j] |j, j> on the OAM-conserving diagonal."""

    d: int
    coeffs: np.ndarray
    kind: str = "custom"
    gamma: float | None = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.d,):
            raise ContractError(f"expected {self.d} coefficients, got shape {c.shape}")
        n = np.linalg.norm(c)
        if n == 0:
            raise ContractError("reference state has zero norm")
        c = c / n
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def amplitudes_by_ell(self) -> dict[int, float]:
        """Signal-mode amplitudes c_ell keyed by ell."""
        sig = mode_map(self.d).signal_j_of_ell
        return {l: float(self.coeffs[sig[l]]) for l in ell_list(self.d)}

    def vector(self) -> np.ndarray:
        psi = np.zeros(self.d * self.d)
        psi[np.arange(self.d) * (self.d + 1)] = self.coeffs
        return psi

    def density(self) -> np.ndarray:
        psi = self.vector()
        return np.outer(psi, psi).astype(complex)


def lorentzian_amplitude(ell, gamma: float, amplitude: float = 1.0):
    """A gamma / (gamma^2 + ell^2)."""
    ell = np.asarray(ell, dtype=float)
    return amplitude * gamma / (gamma**2 + ell**2)


def lorentzian_state(gamma: float, d: int) -> ReferenceState:
    if not gamma > 0:
        raise ContractError(f"gamma must be positive, got {gamma}")
    sig = mode_map(d).signal_ell_of_j
    c = lorentzian_amplitude(np.array(sig), gamma)
    return ReferenceState(d, c, "lorentzian", float(gamma))


def max_entangled_state(d: int) -> ReferenceState:
    mode_map(d)
    return ReferenceState(d, np.ones(d), "max_entangled")


def coincidence_closed_form(theta_a: float, theta_b: float, d: int) -> float:
    """Normalised coincidence probability [cos(d D) - 1] / (d^3 [cos D - 1]), D = theta_a - theta_b."""
    delta = float(theta_a) - float(theta_b)
    # fold into (-pi, pi]; the expression is 2 pi periodic
    delta = delta - 2 * np.pi * np.round(delta / (2 * np.pi))
    if abs(delta) < SERIES_THRESHOLD:
        x2 = delta * delta
        return (1 - (d * d - 1) * x2 / 12 + (d * d - 1) * (2 * d * d - 3) * x2 * x2 / 720) / d
    # cos x - 1 = -2 sin^2(x / 2) evaluated without cancellation; + 0.0 drops a signed zero
    return float(np.sin(d * delta / 2) ** 2 / (d**3 * np.sin(delta / 2) ** 2)) + 0.0


def coincidence_numeric(theta_a: float, theta_b: float, d: int) -> float:
    """|<theta_A|<theta_B| Phi>|^2 from the angle-parametrised analyser states."""
    phi = np.zeros((d, d))
    ells = ell_list(d)
    pos = {l: i for i, l in enumerate(ells)}
    for l in ells:
        phi[pos[l], pos[-l]] = 1 / np.sqrt(d)
    sa = angle_state(theta_a, d)
    sb = angle_state(theta_b, d)
    return float(abs(sa.conj() @ phi @ sb.conj()) ** 2)


def fringe_grid(d: int, points: int, periods: float = 2.0) -> np.ndarray:
    half = periods * 2 * np.pi / d
    return np.linspace(-half, half, points)


def fringe_curve(d: int, deltas) -> list[tuple[float, float, float]]:
    return [(float(x), coincidence_closed_form(x, 0.0, d), coincidence_numeric(x, 0.0, d)) for x in deltas]


def fringe_equivalence_check(d: int, grid_points: int = 200, deltas=None) -> float:
    """Largest gap between the closed-form fringe and the analyser-state computation."""
    if d > 14:
        raise ContractError(f"fringe check supports d <= 14, got {d}")
    deltas = np.linspace(0, 2 * np.pi, grid_points) if deltas is None else deltas
    return max(abs(cf - num) for _, cf, num in fringe_curve(d, deltas))


def write_fringe_csv(rows, path) -> None:
    with text_sink(path) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["delta_radians", "probability_closed_form", "probability_numeric"])
        for x, cf, num in rows:
            wr.writerow([f"{x:.12g}", f"{cf:.12g}", f"{num:.12g}"])


def write_spectrum_csv(state: ReferenceState, path) -> None:
    with text_sink(path) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["ell", "amplitude", "probability"])
        for l, c in state.amplitudes_by_ell().items():
            wr.writerow([l, f"{c:.12g}", f"{c * c:.12g}"])


@dataclass(frozen=True)
class GammaFit:
    gamma: float
    amplitude: float
    residual: float
    flat: bool = False
    log_domain: bool = True


def fit_gamma(rates) -> GammaFit:
    """Least-squares fit of rate(ell) = [A gamma / (gamma^2 + ell^2)]^2.

    ``rates`` is an iterable of (ell, rate, sigma); sigma <= 0 means unweighted.
    Residuals are taken in log space when every rate is positive.
    """
    data = np.array([tuple(map(float, r)) for r in rates])
    if data.ndim != 2 or data.shape[1] != 3:
        raise FitError("rates must be (ell, rate, sigma) triples")
    ell, y, sig = data.T
    if len(np.unique(ell)) < 3:
        raise FitError("need at least three distinct ell values to fit gamma")
    if np.any(y < 0):
        raise FitError("rates must be nonnegative")
    if np.all(y == 0):
        raise FitError("all rates are zero")
    use_log = bool(np.all(y > 0))
    sig = np.where(sig > 0, sig, 1.0) if np.any(sig > 0) else np.ones_like(y)

    # parametrise gamma and the peak rate in log space so both stay positive
    def model(p):
        g = np.exp(p[0])
        peak = np.exp(p[1])
        return peak * (g * g / (g * g + ell * ell)) ** 2

    if use_log:
        def resid(p):
            return np.log(model(p)) - np.log(y)
    else:
        def resid(p):
            return (model(p) - y) / sig

    # initial gamma: median of the per-point estimates from sqrt(rate / rate at smallest |ell|)
    lo = np.argmin(np.abs(ell))
    ratio = np.sqrt(y / y[lo]) if y[lo] > 0 else np.zeros_like(y)
    ok = (ratio > 0) & (ratio < 1) & (np.abs(ell) > np.abs(ell[lo]))
    g2 = (ratio[ok] * ell[ok] ** 2 - ell[lo] ** 2) / (1 - ratio[ok])
    g2 = g2[g2 > 0]
    g0 = np.sqrt(np.median(g2)) if g2.size else 10 * FLAT_GAMMA
    p0 = np.array([np.log(g0), np.log(max(y.max(), 1e-300))])
    sol = least_squares(resid, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    g = float(np.exp(sol.x[0]))
    peak = float(np.exp(sol.x[1]))
    amplitude = np.sqrt(peak) * g
    return GammaFit(g, float(amplitude), float(np.sum(sol.fun**2)), g > FLAT_GAMMA, use_log)


def synthetic_rates(gamma: float = REFERENCE_GAMMA, ells=range(-5, 6), peak: float = 1.0, noise: float = 0.0, rng=None):
    """Squared-Lorentzian rates with optional multiplicative Gaussian noise."""
    rows = []
    for l in ells:
        r = peak * (gamma * gamma / (gamma * gamma + l * l)) ** 2
        if noise:
            r *= 1 + noise * rng.normal()
        rows.append((l, r, noise * r if noise else 0.0))
    return rows

