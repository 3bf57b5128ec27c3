"""Time integration, steady-state metrics and stepped frequency sweeps.

The integrator is a compiled Dormand-Prince 5(4) pair with dense output.  Stopper
contact boundaries are located on the dense output by bisection and the step
is retaken so that it ends exactly on the boundary; the contact mode is then
switched, so the right-hand side is smooth inside every step.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .forces import (MagnetConfig, MagnetPlugin, StopperConfig, StopperPlugin, encode_plugins,
                     state_size, stopper_modal)
from .geometry import HarvesterConfig, build_sections
from .modal import ModeSet, mass_form, modal_analysis
from .reduced import ReducedModel, SystemState, build_reduced_model, event_values, rhs_core

log = logging.getLogger(__name__)

RTOL = 1e-8
ATOL = 1e-10
SAMPLES_PER_PERIOD = 64

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
D1, D3, D4 = -12715105075 / 11282082432, 87487479700 / 32700410799, -10690763975 / 1880347072
D5, D6, D7 = 701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423

STATUS_OK, STATUS_NONFINITE, STATUS_UNDERFLOW, STATUS_MAXSTEPS = 0, 1, 2, 3
STATUS_TEXT = {STATUS_OK: "ok", STATUS_NONFINITE: "non-finite state",
               STATUS_UNDERFLOW: "step-size underflow", STATUS_MAXSTEPS: "step limit reached"}


class IntegrationError(RuntimeError):
    def __init__(self, message: str, state: SystemState | None = None, drive_hz: float | None = None):
        super().__init__(message)
        self.state = state
        self.drive_hz = drive_hz


@njit(cache=True)
def _step(t, y, h, k1, p, plugins, engaged, ynew, k7, rc, err_vec):
    n = y.size
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    tmp = np.empty(n)
    for i in range(n):
        tmp[i] = y[i] + h * A21 * k1[i]
    rhs_core(t + C2 * h, tmp, p, plugins, engaged, k2)
    for i in range(n):
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
    rhs_core(t + C3 * h, tmp, p, plugins, engaged, k3)
    for i in range(n):
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    rhs_core(t + C4 * h, tmp, p, plugins, engaged, k4)
    for i in range(n):
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    rhs_core(t + C5 * h, tmp, p, plugins, engaged, k5)
    for i in range(n):
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
    rhs_core(t + h, tmp, p, plugins, engaged, k6)
    for i in range(n):
        ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
    rhs_core(t + h, ynew, p, plugins, engaged, k7)
    for i in range(n):
        err_vec[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        d = ynew[i] - y[i]
        rc[0, i] = y[i]
        rc[1, i] = d
        rc[2, i] = h * k1[i] - d
        rc[3, i] = d - h * k7[i] - rc[2, i]
        rc[4, i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])


@njit(cache=True)
def _dense(rc, theta, out):
    t1 = 1.0 - theta
    for i in range(out.size):
        out[i] = rc[0, i] + theta * (rc[1, i] + t1 * (rc[2, i] + theta * (rc[3, i] + t1 * rc[4, i])))


@njit(cache=True)
def _error_norm(y, ynew, err_vec, rtol, atol):
    acc = 0.0
    for i in range(y.size):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        acc += (err_vec[i] / sc) ** 2
    return np.sqrt(acc / y.size)


@njit(cache=True)
def _leaving(g, mode):
    # mode 1 leaves when g < 0, mode 0 leaves when g >= 0
    return g < 0.0 if mode == 1 else g >= 0.0


@njit(cache=True)
def _run(t0, t1, y0, p, plugins, engaged, rtol, atol, h0, hmax, sample_t, samples, onsets, max_steps):
    n = y0.size
    nplug = plugins.shape[0]
    y = y0.copy()
    ynew = np.empty(n)
    k1 = np.empty(n)
    k7 = np.empty(n)
    rc = np.empty((5, n))
    err_vec = np.empty(n)
    ybuf = np.empty(n)
    g = np.empty(max(nplug, 1))
    t = t0
    h = min(h0, hmax, t1 - t0)
    rhs_core(t, y, p, plugins, engaged, k1)
    ns = 0
    si = 0
    while si < sample_t.size and sample_t[si] < t0:
        si += 1
    if si < sample_t.size and sample_t[si] == t0:
        samples[si, :] = y
        si += 1
    steps = 0
    while t < t1:
        if steps >= max_steps:
            return STATUS_MAXSTEPS, t, y, h
        steps += 1
        if t + h > t1:
            h = t1 - t
        _step(t, y, h, k1, p, plugins, engaged, ynew, k7, rc, err_vec)
        finite = True
        for i in range(n):
            if not np.isfinite(ynew[i]):
                finite = False
        if not finite:
            h *= 0.1
            if h < 1e-14 * max(abs(t), 1.0):
                return STATUS_NONFINITE, t, y, h
            continue
        err = _error_norm(y, ynew, err_vec, rtol, atol)
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < 1e-14 * max(abs(t), 1.0):
                return STATUS_UNDERFLOW, t, y, h
            continue
        h_used = h
        # contact boundaries crossed inside this step
        switch = -1
        theta_ev = 1.0
        if nplug > 0:
            event_values(ynew, p, plugins, g)
            for r in range(nplug):
                if plugins[r, 0] != 1.0 or not _leaving(g[r], engaged[r]):
                    continue
                lo = 0.0
                hi = 1.0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    _dense(rc, mid, ybuf)
                    event_values(ybuf, p, plugins, g)
                    if _leaving(g[r], engaged[r]):
                        hi = mid
                    else:
                        lo = mid
                    if (hi - lo) * h_used < 1e-15 * max(abs(t), 1.0):
                        break
                if hi < theta_ev:
                    theta_ev = hi
                    switch = r
        if switch >= 0:
            h_ev = theta_ev * h_used
            if h_ev > 1e-13 * max(abs(t), 1.0):
                _step(t, y, h_ev, k1, p, plugins, engaged, ynew, k7, rc, err_vec)
                h_used = h_ev
            else:
                h_used = 0.0
                for i in range(n):
                    ynew[i] = y[i]
        t_new = t + h_used
        while si < sample_t.size and sample_t[si] <= t_new:
            if h_used > 0.0:
                _dense(rc, (sample_t[si] - t) / h_used, ybuf)
                samples[si, :] = ybuf
            else:
                samples[si, :] = ynew
            si += 1
        t = t_new
        for i in range(n):
            y[i] = ynew[i]
        if switch >= 0:
            engaged[switch] = 1 - engaged[switch]
            if engaged[switch] == 1:
                onsets[switch] += 1
            rhs_core(t, y, p, plugins, engaged, k1)
        else:
            for i in range(n):
                k1[i] = k7[i]
            fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h_used * fac, hmax)
        ns += 1
    return STATUS_OK, t, y, h


@dataclass
class Trajectory:
    """Uniformly sampled solution of one integration call."""

    t: np.ndarray
    y: np.ndarray
    final: np.ndarray
    t_final: float
    contact_onsets: np.ndarray
    engaged: np.ndarray
    status: int
    h_last: float

    @property
    def v(self) -> np.ndarray:
        return self.y[:, 4]


def integrate(model: ReducedModel, plugins, Omega: float, t_span, state0, *, rtol: float = RTOL,
              atol: float = ATOL, samples_per_period: int = SAMPLES_PER_PERIOD, sample_from: float | None = None,
              h0: float | None = None, engaged=None, max_steps: int = 50_000_000) -> Trajectory:
    """Integrate the reduced system over ``t_span``.

    ``state0`` is a ``SystemState`` or a raw state vector.  Samples are taken
    every ``1 / samples_per_period`` excitation period from ``sample_from``
    (default ``t_span[0]``).  Raises ``IntegrationError`` on failure with the
    last good state attached.
    """
    if samples_per_period < 50:
        raise ValueError("need at least 50 samples per excitation period")
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")
    if Omega != model.Omega:
        model = model.replace(Omega=Omega)
    t0, t1 = map(float, t_span)
    size = state_size(plugins)
    y0 = state0.to_vector(size) if isinstance(state0, SystemState) else np.asarray(state0, float).copy()
    if y0.size != size:
        raise ValueError(f"state has {y0.size} entries, plugins need {size}")
    arr = encode_plugins(plugins)
    p = model.packed()
    if engaged is None:
        g = np.zeros(arr.shape[0])
        event_values(y0, p, arr, g)
        engaged = (g >= 0).astype(np.int64)
    engaged = np.array(engaged, dtype=np.int64)
    period = 2 * np.pi / Omega
    dt = period / samples_per_period
    start = t0 if sample_from is None else float(sample_from)
    count = int(np.floor((t1 - start) / dt * (1 + 1e-12))) + 1
    sample_t = start + dt * np.arange(max(count, 0))
    sample_t = sample_t[sample_t <= t1 * (1 + 1e-15)]
    samples = np.full((sample_t.size, size), np.nan)
    onsets = np.zeros(arr.shape[0], dtype=np.int64)
    hmax = period / 16
    status, t, y, h = _run(t0, t1, y0, p, arr, engaged, rtol, atol, h0 or period / 200, hmax,
                           sample_t, samples, onsets, max_steps)
    if status != STATUS_OK:
        raise IntegrationError(f"integration failed at t={t:.6g}: {STATUS_TEXT[status]}",
                               SystemState.from_vector(y, t) if np.all(np.isfinite(y)) else None,
                               Omega / (2 * np.pi))
    return Trajectory(t=sample_t, y=samples, final=y, t_final=t, contact_onsets=onsets,
                      engaged=engaged, status=status, h_last=h)


# --------------------------------------------------------------------------- metrics


@dataclass(frozen=True)
class SteadyMetrics:
    v_rms: float
    v_peak: float
    p_mean: float
    steadiness: float
    steady: bool


def steady_state_metrics(trajectory: Trajectory, Omega: float, measure_cycles: int, Rl: float,
                         tolerance: float = 0.02) -> SteadyMetrics:
    """Voltage RMS, peak and mean power over exactly the last ``measure_cycles`` periods.

    ``steadiness`` is the spread of per-cycle RMS values relative to their
    mean; the response is flagged unsteady above ``tolerance``.
    """
    t, v = trajectory.t, trajectory.v
    period = 2 * np.pi / Omega
    per = int(round(period / (t[1] - t[0]))) if t.size > 1 else 0
    need = per * measure_cycles
    if per == 0 or v.size < need + 1:
        raise ValueError("trajectory shorter than the measurement window")
    # the closing sample is excluded so the window is exactly measure_cycles periods
    window = v[v.size - 1 - need:v.size - 1]
    cycles = window.reshape(measure_cycles, per)
    rms_c = np.sqrt(np.mean(cycles**2, axis=1))
    v_rms = float(np.sqrt(np.mean(window**2)))
    spread = float((rms_c.max() - rms_c.min()) / v_rms) if v_rms > 0 else 0.0
    return SteadyMetrics(v_rms=v_rms, v_peak=float(np.max(np.abs(window))) if window.size else 0.0,
                         p_mean=v_rms**2 / Rl, steadiness=spread, steady=spread <= tolerance)


# --------------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepPlan:
    direction: str = "up"
    f_start: float = 11.0
    f_end: float = 16.5
    df: float = 0.05
    settle_cycles: int = 200
    measure_cycles: int = 20
    carry_state: bool = True

    def __post_init__(self):
        if self.direction not in ("up", "down"):
            raise ValueError("direction must be 'up' or 'down'")
        if not self.df > 0:
            raise ValueError("df must be positive")
        if self.settle_cycles < 10:
            raise ValueError("settle_cycles must be at least 10")
        if self.measure_cycles < 5:
            raise ValueError("measure_cycles must be at least 5")
        if not 0 < min(self.f_start, self.f_end):
            raise ValueError("frequencies must be positive")

    def frequencies(self) -> np.ndarray:
        lo, hi = sorted((self.f_start, self.f_end))
        n = int(round((hi - lo) / self.df)) + 1
        f = lo + self.df * np.arange(n)
        f = f[f <= hi + 1e-9]
        return f if self.direction == "up" else f[::-1]

    def replace(self, **changes) -> "SweepPlan":
        return dataclasses.replace(self, **changes)


@dataclass
class SweepCurve:
    direction: str
    f: np.ndarray
    v_rms: np.ndarray
    v_peak: np.ndarray
    p_mean: np.ndarray
    steady: np.ndarray
    contacts: np.ndarray
    metadata: dict = field(default_factory=dict)

    def sorted(self) -> "SweepCurve":
        idx = np.argsort(self.f)
        return dataclasses.replace(self, f=self.f[idx], v_rms=self.v_rms[idx], v_peak=self.v_peak[idx],
                                   p_mean=self.p_mean[idx], steady=self.steady[idx],
                                   contacts=self.contacts[idx])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh)
            out.writerow(["direction", "f_hz", "v_rms", "v_peak", "p_mean_mw", "steady_flag"])
            for k in range(self.f.size):
                out.writerow([self.direction, f"{self.f[k]:.6f}", f"{self.v_rms[k]:.10e}",
                              f"{self.v_peak[k]:.10e}", f"{self.p_mean[k] * 1e3:.10e}", int(self.steady[k])])


class ModelFamily:
    """Reduced model, modes and plugins re-assembled per rotation speed (memoised)."""

    def __init__(self, config: HarvesterConfig, stoppers=(), magnets=(), linear: bool = False):
        self.config = config
        self.sections = build_sections(config)
        self.stoppers = tuple(stoppers)
        self.magnets = tuple(magnets)
        self.linear = linear
        self._cache = lru_cache(maxsize=4096)(self._assemble)

    def _assemble(self, key: float):
        Omega = 2 * np.pi * key
        modes = modal_analysis(self.sections, Omega)
        model = build_reduced_model(self.config, self.sections, modes)
        if self.linear:
            model = model.linear()
        plugins = [StopperPlugin(c, stopper_modal(c, Omega, self.config.g)) for c in self.stoppers]
        plugins += [MagnetPlugin(c) for c in self.magnets]
        return modes, model, tuple(plugins)

    def at(self, drive_hz: float):
        """``(ModeSet, ReducedModel, plugins)`` at drive frequency ``drive_hz``."""
        return self._cache(round(float(drive_hz), 10))


def transfer_state(y, old: tuple, new: tuple) -> np.ndarray:
    """Carry a state to new modes by mass-projecting the physical beam fields."""
    modes_old, _, plugins_old = old
    modes_new, _, plugins_new = new
    sec = modes_new.sections
    T = np.array([[mass_form(sec, a, b) for b in modes_old.shapes] for a in modes_new.shapes])
    y = np.array(y, dtype=float)
    out = y.copy()
    out[0:2] = T @ y[0:2]
    out[2:4] = T @ y[2:4]
    k = 5
    for po, pn in zip(plugins_old, plugins_new):
        if isinstance(pn, StopperPlugin):
            ratio = po.modal.phi_tip / pn.modal.phi_tip
            out[k:k + 2] = y[k:k + 2] * ratio
            k += 2
    return out


def sweep(family: ModelFamily, plan: SweepPlan, *, rtol: float = RTOL, atol: float = ATOL,
          samples_per_period: int = SAMPLES_PER_PERIOD, state0=None) -> SweepCurve:
    """Stepped-frequency sweep; each step settles then measures over whole periods."""
    freqs = plan.frequencies()
    n = freqs.size
    v_rms, v_peak, p_mean = np.zeros(n), np.zeros(n), np.zeros(n)
    steady = np.zeros(n, dtype=bool)
    contacts = np.zeros((n, len(family.stoppers)), dtype=np.int64)
    prev = None
    y = None
    for k, f in enumerate(freqs):
        current = family.at(f)
        _, model, plugins = current
        size = state_size(plugins)
        if y is None or not plan.carry_state:
            y = np.zeros(size) if state0 is None else np.asarray(state0, float).copy()
        else:
            y = transfer_state(y, prev, current)
        Omega = 2 * np.pi * f
        period = 2 * np.pi / Omega
        t_settle = plan.settle_cycles * period
        t_end = t_settle + plan.measure_cycles * period
        try:
            settle = integrate(model, plugins, Omega, (0.0, t_settle), y, rtol=rtol, atol=atol,
                               samples_per_period=samples_per_period, sample_from=t_settle)
            traj = integrate(model, plugins, Omega, (t_settle, t_end), settle.final, rtol=rtol, atol=atol,
                             samples_per_period=samples_per_period, h0=settle.h_last, engaged=settle.engaged)
        except IntegrationError as exc:
            exc.drive_hz = f
            raise IntegrationError(f"sweep failed at {f:.4f} Hz: {exc}", exc.state, f) from exc
        m = steady_state_metrics(traj, Omega, plan.measure_cycles, model.Rl)
        v_rms[k], v_peak[k], p_mean[k], steady[k] = m.v_rms, m.v_peak, m.p_mean, m.steady
        contacts[k] = traj.contact_onsets
        y = traj.final
        prev = current
    meta = {"scenario_hash": config_hash(family.config, family.stoppers, family.magnets),
            "rtol": rtol, "atol": atol, "settle_cycles": plan.settle_cycles,
            "measure_cycles": plan.measure_cycles, "df": plan.df, "carry_state": plan.carry_state}
    return SweepCurve(direction=plan.direction, f=freqs, v_rms=v_rms, v_peak=v_peak, p_mean=p_mean,
                      steady=steady, contacts=contacts, metadata=meta)


def config_hash(config: HarvesterConfig, stoppers=(), magnets=()) -> str:
    blob = json.dumps({"config": dataclasses.asdict(config),
                       "stoppers": [dataclasses.asdict(s) for s in stoppers],
                       "magnets": [dataclasses.asdict(m) for m in magnets]}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --------------------------------------------------------------------------- curve metrics


def power_area(curve: SweepCurve) -> float:
    """Trapezoidal integral of mean power over the swept band, in mW*Hz."""
    if curve.f.size < 2:
        raise ValueError("need at least two samples")
    c = curve.sorted()
    return float(np.trapezoid(c.p_mean, c.f) * 1e3)


@dataclass(frozen=True)
class PeakBand:
    f_peak: float
    v_peak: float
    f_low: float
    f_high: float

    @property
    def width(self) -> float:
        return self.f_high - self.f_low


class BandwidthError(ValueError):
    pass


def _vertex(f, v, k):
    if 0 < k < f.size - 1:
        x0, x1, x2 = f[k - 1:k + 2]
        y0, y1, y2 = v[k - 1:k + 2]
        denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
        A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
        B = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
        if A < 0:
            xv = -B / (2 * A)
            if x0 <= xv <= x2:
                C = y1 - A * x1**2 - B * x1
                return xv, A * xv**2 + B * xv + C
    return f[k], v[k]


def _edge(f, v, level, k, step, stop):
    """Walk from sample ``k`` until ``v`` drops below ``level``; interpolate the crossing."""
    j = k
    while j != stop and v[j + step] >= level:
        j += step
    if j == stop:
        return f[j]
    f0, f1, v0, v1 = f[j], f[j + step], v[j], v[j + step]
    return f0 + (level - v0) * (f1 - f0) / (v1 - v0)


def bandwidth(curve: SweepCurve, threshold_fraction: float = 1 / np.sqrt(2)) -> list[PeakBand]:
    """Bands of the two dominant peaks where ``v_rms >= threshold * local peak``.

    Each band is bounded by the anti-resonance dip between the peaks.
    """
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    c = curve.sorted()
    f, v = c.f, c.v_rms
    interior = [k for k in range(1, f.size - 1) if v[k] >= v[k - 1] and v[k] > v[k + 1]]
    if len(interior) < 2:
        raise BandwidthError(f"found {len(interior)} interior peak(s); need two")
    # the two largest maxima whose separating dip falls below both band levels
    order = sorted(interior, key=lambda k: -v[k])
    first = order[0]
    second = None
    for k in order[1:]:
        lo, hi = sorted((first, k))
        dip = lo + int(np.argmin(v[lo:hi + 1]))
        if v[dip] < threshold_fraction * min(v[lo], v[hi]):
            second = k
            break
    if second is None:
        raise BandwidthError("peaks are not separated by an anti-resonance dip")
    lo, hi = sorted((first, second))
    dip = lo + int(np.argmin(v[lo:hi + 1]))
    bands = []
    for k, bounds in ((lo, (0, dip)), (hi, (dip, f.size - 1))):
        fp, vp = _vertex(f, v, k)
        level = threshold_fraction * vp
        left = _edge(f, v, level, k, -1, bounds[0])
        right = _edge(f, v, level, k, +1, bounds[1])
        bands.append(PeakBand(f_peak=float(fp), v_peak=float(vp), f_low=float(left), f_high=float(right)))
    return bands
