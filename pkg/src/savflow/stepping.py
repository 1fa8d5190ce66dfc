"""Time-step schedules and the energy-based adaptive controller."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import RatioCapConflictWarning

#: Default cap on the step-increase ratio of the adaptive controller;
#: sits just below the sigma = 1 stability threshold gamma**(1).
DEFAULT_RATIO_CAP = 4.8645


@dataclass
class Schedule:
    """A realized or parametric step-size sequence.

    For kinds "uniform", "perturbed" and "explicit" the full dt sequence
    is materialized in ``dts``.  Kind "adaptive" carries controller
    parameters only; the run driver generates steps on the fly.
    """

    kind: str
    T: float
    dts: Optional[np.ndarray] = None
    N: Optional[int] = None
    amplitude: float = 0.0
    seed: Optional[int] = None
    dt_min: Optional[float] = None
    dt_max: Optional[float] = None
    gamma_adp: Optional[float] = None
    ratio_cap: float = DEFAULT_RATIO_CAP
    dt_init: Optional[float] = None
    energy_source: str = "modified"

    def ratios(self) -> np.ndarray:
        if self.dts is None or len(self.dts) < 2:
            return np.array([])
        return self.dts[1:] / self.dts[:-1]

    def max_ratio(self) -> float:
        r = self.ratios()
        return float(r.max()) if r.size else 1.0


def uniform_schedule(T: float, N: int) -> Schedule:
    """t_n = n*T/N; all ratios exactly 1."""
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    if N < 2:
        raise ValueError(f"need at least 2 steps, got {N}")
    return Schedule(kind="uniform", T=float(T), N=N, dts=np.full(N, T / N))


def perturbed_schedule(T: float, N: int, amplitude: float, seed: int) -> Schedule:
    """Uniform nodes displaced by amplitude*tau*u_n, u_n ~ U(-1/2, 1/2).

    Endpoints stay fixed; amplitude < 1 guarantees monotone times.  The
    same seed reproduces the same schedule exactly.
    """
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    if N < 2:
        raise ValueError(f"need at least 2 steps, got {N}")
    if not 0.0 <= amplitude < 1.0:
        raise ValueError(f"amplitude must lie in [0, 1), got {amplitude}")
    tau = T / N
    times = np.arange(N + 1) * tau
    times[-1] = T
    if N > 1 and amplitude > 0.0:
        rng = np.random.default_rng(seed)
        u = rng.uniform(-0.5, 0.5, N - 1)
        times[1:-1] = times[1:-1] + amplitude * tau * u
    dts = np.diff(times)
    assert np.all(dts > 0)
    return Schedule(kind="perturbed", T=float(T), N=N, dts=dts,
                    amplitude=float(amplitude), seed=seed)


def explicit_schedule(dts) -> Schedule:
    """Wrap a caller-supplied positive dt sequence."""
    dts = np.asarray(dts, dtype=float)
    if dts.ndim != 1 or dts.size < 1:
        raise ValueError("need a 1D nonempty dt sequence")
    if not np.all(dts > 0):
        raise ValueError("all step sizes must be positive")
    return Schedule(kind="explicit", T=float(dts.sum()), dts=dts)


def adaptive_schedule(T: float, dt_min: float, dt_max: float, gamma_adp: float,
                      ratio_cap: float = DEFAULT_RATIO_CAP,
                      dt_init: Optional[float] = None,
                      energy_source: str = "modified") -> Schedule:
    """Controller parameters for on-the-fly step selection."""
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    if not 0 < dt_min <= dt_max:
        raise ValueError(f"need 0 < dt_min <= dt_max, got ({dt_min}, {dt_max})")
    if gamma_adp < 0:
        raise ValueError(f"gamma_adp must be nonnegative, got {gamma_adp}")
    if energy_source not in ("modified", "original"):
        raise ValueError(f"energy_source must be 'modified' or 'original', got {energy_source!r}")
    return Schedule(kind="adaptive", T=float(T), dt_min=float(dt_min),
                    dt_max=float(dt_max), gamma_adp=float(gamma_adp),
                    ratio_cap=float(ratio_cap),
                    dt_init=float(dt_init) if dt_init is not None else float(dt_min),
                    energy_source=energy_source)


def cap_first_step(dts: np.ndarray, cap: float) -> np.ndarray:
    """Enforce dt_1 <= cap by replacing the first interval with a ramp.

    The first interval is split into m pieces s, 2s, ..., 2^(m-1)*s with
    s = dts[0]/(2^m - 1) <= cap.  Internal ratios are exactly 2; the
    junction ratio into dts[1] is at most 2*dts[1]/dts[0].
    """
    if not cap > 0:
        raise ValueError(f"cap must be positive, got {cap}")
    dts = np.asarray(dts, dtype=float)
    if dts[0] <= cap:
        return dts
    m = math.ceil(math.log2(dts[0] / cap + 1.0))
    s = dts[0] / (2.0**m - 1.0)
    ramp = s * 2.0 ** np.arange(m)
    return np.concatenate([ramp, dts[1:]])


def energy_rate_estimate(E_n: float, E_nm1: float, dt_n: float) -> float:
    """Backward difference (E_n - E_nm1)/dt_n."""
    if not dt_n > 0:
        raise ValueError(f"step size must be positive, got {dt_n}")
    return (E_n - E_nm1) / dt_n


def adaptive_next_dt(dt_n: float, energy_rate: float, dt_min: float, dt_max: float,
                     gamma_adp: float, ratio_cap: float = DEFAULT_RATIO_CAP) -> float:
    """dt_{n+1} = min(max(dt_min, dt_max/sqrt(1 + gamma_adp*|E'|^2)), ratio_cap*dt_n).

    The cap constrains increases only (a decrease cannot violate the
    ratio bound).  If the dt_min floor and the cap conflict (possible
    only when dt_n < dt_min/ratio_cap), the floor wins and the cap
    violation is reported via RatioCapConflictWarning, not hidden.
    """
    if not 0 < dt_min <= dt_max:
        raise ValueError(f"need 0 < dt_min <= dt_max, got ({dt_min}, {dt_max})")
    if not dt_n > 0:
        raise ValueError(f"step size must be positive, got {dt_n}")
    inner = max(dt_min, dt_max / math.sqrt(1.0 + gamma_adp * energy_rate**2))
    out = min(inner, ratio_cap * dt_n)
    if out < dt_min:
        warnings.warn(
            f"dt_min = {dt_min:g} floor overrides the ratio cap "
            f"({ratio_cap:g} * {dt_n:g} = {ratio_cap * dt_n:g})",
            RatioCapConflictWarning, stacklevel=2,
        )
        out = dt_min
    return out
