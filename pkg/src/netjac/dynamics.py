"""Time integration, equilibria and oscillation detection for realized systems.

The right-hand side is ``x' = S f(x)`` with Michaelis-Menten rates from
:mod:`netjac.kinetics`. Integration uses the Dormand-Prince 5(4) pair with
PI step-size control; states must stay in the open positive orthant.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .kinetics import MMParams, RateFunction
from .network import Network

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
MAX_STEP_FRACTION = 2000

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

# PI controller gains (Hairer & Wanner, order 5)
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message)
        self.t = t


class EquilibriumError(RuntimeError):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    species: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)

    def coordinate(self, coord: Union[int, str]) -> np.ndarray:
        idx = self.species.index(coord) if isinstance(coord, str) else int(coord)
        return self.states[:, idx]

    def to_csv(self, path=None) -> str:
        """CSV with header ``t,x_<species>...``; returned as text and optionally written to ``path``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x_{s}" for s in self.species])
        for t, x in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


@dataclass
class OscillationReport:
    oscillating: bool
    coordinate: str
    peak_times: list[float]
    peak_values: list[float]
    period: Optional[float]
    drift: Optional[float]

    def to_dict(self) -> dict:
        return {
            "oscillating": self.oscillating,
            "coordinate": self.coordinate,
            "peak_count": len(self.peak_times),
            "peak_times": self.peak_times,
            "peak_values": self.peak_values,
            "period": self.period,
            "amplitude_drift": self.drift,
        }


def _error_norm(err, y, y_new, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def integrate(
    net: Network,
    p: MMParams,
    x0,
    t_max: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_steps: int = 2_000_000,
    max_step: Optional[float] = None,
) -> Trajectory:
    """Dormand-Prince 5(4) solution of ``x' = S f(x)`` on ``[0, t_max]``.

    Every accepted step is stored; the step is capped at ``max_step``
    (default ``t_max / 2000``) so peaks are resolved. A trial state with a
    nonpositive entry is rejected and the step halved; if that drives the
    step below roundoff the integration aborts and reports the time.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (net.M,):
        raise ValueError(f"x0 must have length {net.M}")
    if np.any(x0 <= 0) or not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be strictly positive")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    rf = RateFunction(net, p)
    rhs = rf.rhs
    h_max = t_max / MAX_STEP_FRACTION if max_step is None else float(max_step)
    if not h_max > 0:
        raise ValueError("max_step must be positive")

    t, y = 0.0, x0.copy()
    k = np.empty((7, net.M))
    k[0] = rhs(y)
    # initial step from the scaled derivative size
    d0 = np.linalg.norm(y / (atol + rtol * np.abs(y))) / np.sqrt(net.M)
    d1 = np.linalg.norm(k[0] / (atol + rtol * np.abs(y))) / np.sqrt(net.M)
    h = min(h_max, 0.01 * d0 / d1 if d1 > 1e-5 and d0 > 1e-5 else 1e-6 * max(1.0, t_max))

    times, states = [t], [y.copy()]
    err_prev = 1e-4
    accepted = rejected = positivity_rejects = 0
    last_positivity = False
    while t < t_max:
        if accepted + rejected >= max_steps:
            raise IntegrationError(
                f"more than {max_steps} steps at t={t:.6g}; the system may be stiff, "
                "try looser tolerances or a shorter horizon",
                t,
            )
        h = min(h, t_max - t)
        if h <= 1e-14 * max(1.0, abs(t)):
            if last_positivity:
                raise IntegrationError(f"nonpositive state encountered at t={t:.17g}", t)
            raise IntegrationError(f"step size underflow at t={t:.17g}", t)
        for i in range(1, 7):
            yi = y + h * (np.asarray(_A[i]) @ k[:i])
            if np.any(yi <= 0):
                break
            k[i] = rhs(yi)
        else:
            y_new = y + h * (_B5 @ k)
            if np.all(y_new > 0) and np.all(np.isfinite(y_new)):
                err = _error_norm(h * (_E @ k), y, y_new, rtol, atol)
                last_positivity = False
                if err <= 1.0:
                    t = t + h if t + h < t_max else t_max
                    y = y_new
                    k[0] = k[6]  # FSAL
                    times.append(t)
                    states.append(y.copy())
                    accepted += 1
                    fac = _SAFETY * max(err, 1e-10) ** -_ALPHA * err_prev**_BETA
                    h = min(h_max, h * min(_FAC_MAX, max(_FAC_MIN, fac)))
                    err_prev = max(err, 1e-4)
                    continue
                rejected += 1
                h *= max(_FAC_MIN, _SAFETY * err**-_ALPHA)
                continue
        # some stage or the result left the positive orthant
        rejected += 1
        positivity_rejects += 1
        last_positivity = True
        h *= 0.5

    return Trajectory(
        np.array(times),
        np.array(states),
        tuple(net.species),
        {
            "method": "dopri5",
            "rtol": rtol,
            "atol": atol,
            "t_max": t_max,
            "max_step": h_max,
            "accepted_steps": accepted,
            "rejected_steps": rejected,
            "positivity_rejections": positivity_rejects,
        },
    )


def find_equilibrium(
    net: Network,
    p: MMParams,
    x_guess,
    tol: float = 1e-12,
    max_iter: int = 100,
    max_halvings: int = 30,
) -> np.ndarray:
    """Damped Newton iteration on ``S f(x) = 0`` with the analytic Jacobian.

    The full step is halved until the trial point is positive and the
    residual infinity-norm decreases.
    """
    x = np.asarray(x_guess, dtype=float).copy()
    if x.shape != (net.M,):
        raise ValueError(f"x_guess must have length {net.M}")
    if np.any(x <= 0):
        raise ValueError("x_guess must be strictly positive")
    rf = RateFunction(net, p)
    F = rf.rhs(x)
    res = float(np.max(np.abs(F)))
    for _ in range(max_iter):
        if res < tol:
            return x
        J = rf.jacobian(x)
        try:
            if np.linalg.cond(J) > 1e14:
                raise np.linalg.LinAlgError
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise EquilibriumError(f"singular Newton matrix at x={x.tolist()}") from None
        lam = 1.0
        for _ in range(max_halvings + 1):
            xn = x + lam * dx
            if np.all(xn > 0):
                Fn = rf.rhs(xn)
                rn = float(np.max(np.abs(Fn)))
                if rn < res or rn < tol:
                    break
            lam *= 0.5
        else:
            raise EquilibriumError(f"no admissible damped step after {max_halvings} halvings (residual {res:.3g})")
        x, F, res = xn, Fn, rn
    if res < tol:
        return x
    raise EquilibriumError(f"Newton did not converge in {max_iter} iterations (residual {res:.3g})")


def _refine_peak(t: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    """Maximum of the cubic through four samples around the local maximum ``i``."""
    lo = i - 2 if i + 2 >= len(t) or (i >= 2 and y[i - 1] > y[i + 1]) else i - 1
    lo = max(0, min(lo, len(t) - 4))
    ts, ys = t[lo : lo + 4], y[lo : lo + 4]
    t0, span = ts[1], ts[-1] - ts[0]
    u = (ts - t0) / span
    try:
        coef = np.polyfit(u, ys, 3)
    except (np.linalg.LinAlgError, ValueError):
        return float(t[i]), float(y[i])
    best_u, best_y = (t[i] - t0) / span, float(y[i])
    a, b = (t[i - 1] - t0) / span, (t[i + 1] - t0) / span
    for root in np.roots(np.polyder(coef)):
        if abs(root.imag) < 1e-12 and a <= root.real <= b:
            val = float(np.polyval(coef, root.real))
            if val > best_y:
                best_u, best_y = root.real, val
    return float(t0 + best_u * span), best_y


def detect_oscillation(
    traj: Trajectory,
    coord: Union[int, str] = 0,
    transient_fraction: float = 0.5,
    drift_threshold: float = 0.05,
    min_peaks: int = 5,
    min_amplitude: float = 1e-6,
) -> OscillationReport:
    """Sustained oscillation test on the tail of a trajectory.

    After dropping the first ``transient_fraction`` of the time span, strict
    local maxima of the chosen coordinate are located and refined. The
    amplitude of each cycle is the peak value minus the minimum up to the
    next peak. Oscillation requires ``min_peaks`` peaks, a mean amplitude
    above ``min_amplitude`` relative to the signal level, and a maximal
    relative deviation of the amplitudes below ``drift_threshold``.
    """
    if not 0 <= transient_fraction < 1:
        raise ValueError("transient_fraction must lie in [0, 1)")
    name = traj.species[coord] if isinstance(coord, int) and traj.species else str(coord)
    t_all, y_all = np.asarray(traj.times), traj.coordinate(coord)
    t_cut = t_all[0] + transient_fraction * (t_all[-1] - t_all[0])
    keep = t_all >= t_cut
    t, y = t_all[keep], y_all[keep]
    if len(t) < 8:
        raise ValueError(f"too few samples after the transient window ({len(t)})")

    idx = [i for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] > y[i + 1]]
    peaks = [_refine_peak(t, y, i) for i in idx]
    peak_t = [pt for pt, _ in peaks]
    peak_v = [pv for _, pv in peaks]
    if len(idx) < 2:
        return OscillationReport(False, name, peak_t, peak_v, None, None)

    period = float(np.mean(np.diff(peak_t)))
    amps = np.array([peak_v[k] - y[idx[k] : idx[k + 1] + 1].min() for k in range(len(idx) - 1)])
    mean_amp = float(np.mean(amps))
    drift = float(np.max(np.abs(amps - mean_amp)) / mean_amp) if mean_amp > 0 else float("inf")
    level = float(np.mean(np.abs(y)))
    oscillating = len(idx) >= min_peaks and mean_amp > min_amplitude * max(1.0, level) and drift < drift_threshold
    return OscillationReport(bool(oscillating), name, peak_t, peak_v, period, drift)
