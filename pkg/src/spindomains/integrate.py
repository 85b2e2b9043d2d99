"""Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)).

A small self-contained integrator for complex array-valued ODEs.  The fifth
order solution is propagated; the embedded fourth order solution provides the
local error estimate.  Dense output uses the standard quartic interpolant of
the pair, so solutions can be sampled on arbitrary grids without constraining
step selection.

Two hooks distinguish this from an off-the-shelf solver:

* ``postprocess(t, y) -> y``: applied after every accepted step (used by the
  master-equation engine to re-symmetrize density matrices).
* ``stop_when(t, y, dydt) -> bool``: checked after every accepted step with a
  fresh derivative (used for steady-state detection).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = ["StepSizeUnderflow", "OdeResult", "solve_dopri5"]

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b - b_hat: weights of the embedded error estimate (includes the FSAL stage).
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# Quartic dense-output coefficients (Shampine's interpolant for this pair).
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ORDER_EXP = 1 / 5


class StepSizeUnderflow(RuntimeError):
    """Step size shrank below machine resolution; integration cannot proceed."""

    def __init__(self, t: float, message: str | None = None):
        self.t = t
        super().__init__(message or f"step size underflow at t = {t!r}")


@dataclass
class OdeResult:
    """Outcome of :func:`solve_dopri5`.

    ``y_samples[i]`` interpolates the solution at ``t_samples[i]``; ``y`` is
    the state at ``t`` where integration actually ended (``t_end``, or earlier
    if ``stop_when`` fired).
    """

    t: float
    y: np.ndarray
    t_samples: np.ndarray
    y_samples: list
    n_steps: int
    n_rejected: int
    n_rhs_evals: int
    stopped_early: bool


def _error_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def _initial_step(fun, t0, y0, f0, t_end, rtol, atol):
    """Hairer-style starting step heuristic."""
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((np.abs(y0) / scale) ** 2))
    d1 = np.sqrt(np.mean((np.abs(f0) / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, abs(t_end - t0))
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1)
    d2 = np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** _ORDER_EXP
    return min(100 * h0, h1, abs(t_end - t0))


def solve_dopri5(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: np.ndarray,
    t_end: float,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    t_samples: Optional[Sequence[float]] = None,
    on_sample: Optional[Callable[[float, np.ndarray], None]] = None,
    postprocess: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
    postprocess_commutes: bool = False,
    stop_when: Optional[Callable[[float, np.ndarray, np.ndarray], bool]] = None,
    max_step: float = np.inf,
    first_step: Optional[float] = None,
) -> OdeResult:
    """Integrate dy/dt = fun(t, y) from t0 to t_end, forward in time.

    ``y0`` may be any complex or real ndarray; the shape is preserved.  When
    ``t_samples`` is given, every sample must lie in [t0, t_end] and dense
    output is evaluated at those times as integration passes them.  Samples
    beyond an early stop are filled with the final state.  With ``on_sample``
    each sampled state is handed to the callback instead of being stored on
    the result (constant memory for large states).

    ``postprocess`` is applied to the state after every accepted step.  It
    invalidates the FSAL derivative, costing one extra evaluation per step,
    unless ``postprocess_commutes`` declares that fun(post(y)) == post(fun(y))
    (true e.g. for Hermitian symmetrization under a Lindblad generator), in
    which case the cached stage is postprocessed instead.
    """
    if not (np.isfinite(rtol) and rtol > 0) or not (np.isfinite(atol) and atol >= 0):
        raise ValueError(f"invalid tolerances rtol={rtol!r}, atol={atol!r}")
    if t_end < t0:
        raise ValueError(f"t_end {t_end} precedes t0 {t0}")

    t_samples = np.array([] if t_samples is None else t_samples, dtype=float)
    if t_samples.size and (t_samples[0] < t0 or t_samples[-1] > t_end + 1e-12 * abs(t_end)):
        raise ValueError("t_samples must lie within [t0, t_end]")

    y = np.asarray(y0).copy()
    t = t0
    f = fun(t, y)
    n_evals = 1
    h = first_step if first_step is not None else _initial_step(fun, t, y, f, t_end, rtol, atol)
    n_evals += 0 if first_step is not None else 1
    h = min(h, max_step)

    y_samples: list = []
    sample_idx = 0
    n_steps = 0
    n_rejected = 0
    stopped = False

    def emit(t_s, y_s):
        if on_sample is not None:
            on_sample(t_s, y_s)
        else:
            y_samples.append(y_s)

    # Emit samples that coincide with the start point.
    while sample_idx < t_samples.size and t_samples[sample_idx] <= t:
        emit(t_samples[sample_idx], y.copy())
        sample_idx += 1

    if stop_when is not None and stop_when(t, y, f):
        stopped = True
        while sample_idx < t_samples.size:
            emit(t_samples[sample_idx], y.copy())
            sample_idx += 1

    k = [None] * 7
    while t < t_end and not stopped:
        h = min(h, t_end - t)
        tiny = 10 * np.abs(np.nextafter(t, np.inf) - t)
        if h < tiny:
            raise StepSizeUnderflow(t)

        # Attempt steps until one is accepted.
        while True:
            k[0] = f
            for s in range(1, 6):
                dy = h * sum(a * k[j] for j, a in enumerate(_A[s]))
                k[s] = fun(t + _C[s] * h, y + dy)
            y_new = y + h * sum(b * ks for b, ks in zip(_B[:6], k[:6]))
            k[6] = fun(t + h, y_new)
            n_evals += 6
            err_vec = h * sum(e * ks for e, ks in zip(_E, k))
            err = _error_norm(err_vec, y, y_new, rtol, atol)

            if err <= 1.0:
                factor = _MAX_FACTOR if err == 0 else min(
                    _MAX_FACTOR, _SAFETY * err ** (-_ORDER_EXP)
                )
                break
            n_rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** (-_ORDER_EXP))
            if h < tiny:
                raise StepSizeUnderflow(t)

        t_new = t + h
        n_steps += 1

        # Dense output over [t, t_new] for any samples passed by this step.
        if sample_idx < t_samples.size and t_samples[sample_idx] <= t_new:
            q = np.stack([ks.ravel() for ks in k])  # (7, n)
            while sample_idx < t_samples.size and t_samples[sample_idx] <= t_new:
                theta = (t_samples[sample_idx] - t) / h
                w = _P @ np.array([theta, theta**2, theta**3, theta**4])
                y_dense = y.ravel() + h * (w @ q)
                emit(t_samples[sample_idx], y_dense.reshape(y.shape))
                sample_idx += 1

        y = y_new
        t = t_new
        if postprocess is not None:
            y = postprocess(t, y)
            if postprocess_commutes:
                f = postprocess(t, k[6])
            else:
                f = fun(t, y)  # FSAL stage is stale once y was adjusted
                n_evals += 1
        else:
            f = k[6]
        if stop_when is not None and stop_when(t, y, f):
            stopped = True
        h = min(factor * h, max_step)

    # If stopped early, remaining samples hold the final state.
    while sample_idx < t_samples.size:
        emit(t_samples[sample_idx], y.copy())
        sample_idx += 1

    return OdeResult(
        t=t,
        y=y,
        t_samples=t_samples,
        y_samples=y_samples,
        n_steps=n_steps,
        n_rejected=n_rejected,
        n_rhs_evals=n_evals,
        stopped_early=stopped,
    )
