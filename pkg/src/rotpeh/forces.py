"""External nonlinear force plugins: stopper impact and cuboid magnets.

Plugins are small frozen descriptions that encode themselves into a row of
numbers for the compiled right-hand side.  Forces reported here are the
transverse force acting ON the harvester tip (positive along positive tip
deflection); the modal right-hand side then gains ``force * phi_tip``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import ConfigError
from .modal import ModeShape, cantilever_modes, gauss_legendre, rms_value

MU0 = 4e-7 * np.pi
PLUGIN_WIDTH = 16
KIND_STOPPER = 1.0
KIND_MAGNET = 2.0
TARGETS = {"main": 0, "auxiliary": 1}
SIDES = {"below": -1.0, "above": 1.0}
DEFAULT_SIDE = {"main": "below", "auxiliary": "above"}


def _target_index(target: str) -> int:
    if target not in TARGETS:
        raise ConfigError("target", f"expected one of {tuple(TARGETS)}, got {target!r}")
    return TARGETS[target]


# --------------------------------------------------------------------------- stopper


@dataclass(frozen=True)
class StopperConfig:
    """Cantilever stopper with a tip mass.  Defaults are stopper A (main beam).

    ``side`` is the side of the beam the stopper sits on: ``below`` engages
    when the relative displacement drops to ``-d``, ``above`` when it reaches
    ``+d``.  ``None`` picks below for the main beam and above for the
    auxiliary beam.
    """

    target: str = "main"
    d: float = 14.4e-3
    L_st: float = 70e-3
    b_st: float = 20e-3
    h_st: float = 1e-3
    Y_st: float = 193e9
    rho_st: float = 7930.0
    M_st: float = 2.92e-3
    mass_length: float = 7e-3
    zeta_st: float = 0.1
    R_st: float = 90e-3
    side: str | None = None

    def __post_init__(self):
        _target_index(self.target)
        for name in ("d", "L_st", "b_st", "h_st", "Y_st", "rho_st", "mass_length", "R_st"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(name, f"must be strictly positive, got {value!r}")
        if not np.isfinite(self.M_st) or self.M_st < 0:
            raise ConfigError("M_st", f"must be non-negative, got {self.M_st!r}")
        if not 0 < self.zeta_st < 1:
            raise ConfigError("zeta_st", f"damping ratio must lie in (0, 1), got {self.zeta_st!r}")
        if self.side is not None and self.side not in SIDES:
            raise ConfigError("side", f"expected one of {tuple(SIDES)}")

    @property
    def contact_side(self) -> float:
        return SIDES[self.side or DEFAULT_SIDE[self.target]]

    def replace(self, **changes) -> "StopperConfig":
        return dataclasses.replace(self, **changes)


def stopper_preset(name: str, **changes) -> StopperConfig:
    """Prototype stopper ``A`` (main beam) or ``B`` (auxiliary beam)."""
    presets = {
        "A": StopperConfig(),
        "B": StopperConfig(target="auxiliary", d=15.4e-3, L_st=55e-3, M_st=1.05e-3, R_st=60e-3),
    }
    if name not in presets:
        raise ConfigError("stopper", f"unknown preset {name!r}")
    return presets[name].replace(**changes)


@dataclass(frozen=True, eq=False)
class StopperModal:
    """Single-mode reduction of the stopper: frequency, tip value and gravity forcing."""

    omega: float
    phi_tip: float
    F_st: float
    shape: ModeShape | None = None


def stopper_modal(cfg: StopperConfig, Omega: float = 0.0, g: float = 9.81) -> StopperModal:
    """First mode of the rotating stopper cantilever with its tip mass."""
    m = cfg.rho_st * cfg.b_st * cfg.h_st
    YI = cfg.Y_st * cfg.b_st * cfg.h_st**3 / 12
    L, R, Mt = cfg.L_st, cfg.R_st, cfg.M_st
    IM = Mt * cfg.mass_length**2 / 12

    def fc(x):
        return m * (R * (L - x) + (L**2 - x**2) / 2) + Mt * (R + L)

    fc_bar = rms_value(fc, L)
    omegas, shapes = cantilever_modes(YI, m, L, Omega, 1, Mt=Mt, IM=IM, fc_bar=fc_bar, f_max=20000.0)
    shape = shapes[0]
    xq, wq = gauss_legendre()
    F_st = g * (m * L * np.sum(wq * shape(0, xq * L)) + Mt * shape.tip(0))
    return StopperModal(omega=float(omegas[0]), phi_tip=shape.tip(0), F_st=float(F_st), shape=shape)


@njit(cache=True)
def contact_force(y_rel, v_rel, side, d, omega_st, zeta_st, phi_st, engaged):
    """Spring-damper contact force on the beam tip; zero when not engaged."""
    if not engaged:
        return 0.0
    k = omega_st**2 / phi_st**2
    c = 2.0 * zeta_st * omega_st / phi_st**2
    return -c * v_rel - k * (y_rel - side * d)


def impact_force(state, cfg: StopperConfig, stopper: StopperModal, model) -> tuple[float, float]:
    """Contact force on the beam tip and the equal and opposite reaction on the stopper tip.

    ``state`` is a ``SystemState`` with stopper coordinates; ``model`` supplies
    the tip values of the harvester modes (``phi_main`` / ``phi_aux``).
    """
    phi = model.phi_main if cfg.target == "main" else model.phi_aux
    y_rel = float(np.dot(phi, state.eta)) - stopper.phi_tip * state.eta_st
    v_rel = float(np.dot(phi, state.eta_dot)) - stopper.phi_tip * state.eta_st_dot
    side = cfg.contact_side
    engaged = side * y_rel >= cfg.d
    f = contact_force(y_rel, v_rel, side, cfg.d, stopper.omega, cfg.zeta_st, stopper.phi_tip, engaged)
    return f, -f


# --------------------------------------------------------------------------- magnets


@dataclass(frozen=True)
class MagnetConfig:
    """Moving cuboid magnet on a beam tip facing a fixed cuboid below it.

    ``d`` is the rest centre-to-centre distance along the magnetisation axis.
    ``opening`` = +1 means positive tip deflection moves the magnets apart.
    Edge lengths default to the 3 mm (beam) and 4 mm (fixed) cubes of the prototype.
    """

    target: str = "main"
    a1: float = 3e-3
    b1: float = 3e-3
    c1: float = 3e-3
    a2: float = 4e-3
    b2: float = 4e-3
    c2: float = 4e-3
    B1: float = 1.2
    B2: float = 1.2
    d: float = 48.5e-3
    polarity: str = "repelling"
    opening: float = 1.0

    def __post_init__(self):
        _target_index(self.target)
        for name in ("a1", "b1", "c1", "a2", "b2", "c2", "d"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(name, f"must be strictly positive, got {value!r}")
        for name in ("B1", "B2"):
            if not np.isfinite(getattr(self, name)) or getattr(self, name) < 0:
                raise ConfigError(name, "remanence must be non-negative")
        if self.polarity not in ("attracting", "repelling"):
            raise ConfigError("polarity", "expected 'attracting' or 'repelling'")
        if self.opening not in (1.0, -1.0):
            raise ConfigError("opening", "expected +1 or -1")
        if self.d <= (self.c1 + self.c2) / 2:
            raise ConfigError("d", "magnets overlap at rest")

    @property
    def prefactor(self) -> float:
        sign = 1.0 if self.polarity == "attracting" else -1.0
        return sign * self.B1 * self.B2 / (4 * np.pi * MU0)

    def replace(self, **changes) -> "MagnetConfig":
        return dataclasses.replace(self, **changes)


@njit(cache=True)
def _kernels(u, v, w):
    r = np.sqrt(u * u + v * v + w * w)
    lu = np.log(r - u) if r - u > 0.0 else 0.0
    lv = np.log(r - v) if r - v > 0.0 else 0.0
    at = np.arctan(u * v / (w * r)) if w * r != 0.0 else 0.0
    px = 0.5 * (v * v - w * w) * lu + u * v * lv + v * w * at + 0.5 * r * u
    py = 0.5 * (u * u - w * w) * lv + u * v * lu + u * w * at + 0.5 * r * v
    pz = -w * u * lu - w * v * lv + u * v * at - r * w
    return px, py, pz


@njit(cache=True)
def cuboid_force(a1, b1, c1, a2, b2, c2, alpha, beta, gamma, prefactor):
    """Force on magnet 2, centred at (alpha, beta, gamma) from magnet 1.

    Both are magnetised along +z when ``prefactor > 0``.
    """
    fx = 0.0
    fy = 0.0
    fz = 0.0
    for i in range(2):
        for j in range(2):
            u = alpha + (-1.0) ** j * a2 / 2 - (-1.0) ** i * a1 / 2
            for k in range(2):
                for l in range(2):
                    v = beta + (-1.0) ** l * b2 / 2 - (-1.0) ** k * b1 / 2
                    for m in range(2):
                        for n in range(2):
                            w = gamma + (-1.0) ** n * c2 / 2 - (-1.0) ** m * c1 / 2
                            s = (-1.0) ** (i + j + k + l + m + n)
                            px, py, pz = _kernels(u, v, w)
                            fx += s * px
                            fy += s * py
                            fz += s * pz
    return prefactor * fx, prefactor * fy, prefactor * fz


def _check_overlap(cfg: MagnetConfig, alpha, beta, gamma):
    if (abs(alpha) < (cfg.a1 + cfg.a2) / 2 and abs(beta) < (cfg.b1 + cfg.b2) / 2
            and abs(gamma) < (cfg.c1 + cfg.c2) / 2):
        raise ValueError(f"magnets overlap at offset ({alpha}, {beta}, {gamma})")


def magnet_force(cfg: MagnetConfig, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Force vector (N) on the beam magnet at offset ``(alpha, beta, gamma)`` from the fixed one."""
    _check_overlap(cfg, alpha, beta, gamma)
    return np.array(cuboid_force(cfg.a2, cfg.b2, cfg.c2, cfg.a1, cfg.b1, cfg.c1,
                                 alpha, beta, gamma, cfg.prefactor))


def magnet_gap_kinematics(state, cfg: MagnetConfig, model) -> tuple[float, float, float]:
    """Offsets of the beam magnet: pure transverse motion along the gap axis."""
    phi = model.phi_main if cfg.target == "main" else model.phi_aux
    y_tip = float(np.dot(phi, state.eta))
    return 0.0, 0.0, cfg.d + cfg.opening * y_tip


def magnet_tip_force(state, cfg: MagnetConfig, model) -> float:
    """Transverse force on the beam tip (positive along positive deflection)."""
    alpha, beta, gamma = magnet_gap_kinematics(state, cfg, model)
    return cfg.opening * magnet_force(cfg, alpha, beta, gamma)[2]


# --------------------------------------------------------------------------- encoding


@dataclass(frozen=True)
class StopperPlugin:
    """A stopper bound to its modal reduction at one rotation speed."""

    cfg: StopperConfig
    modal: StopperModal

    def encode(self, state_index: int) -> np.ndarray:
        row = np.zeros(PLUGIN_WIDTH)
        row[:9] = [KIND_STOPPER, TARGETS[self.cfg.target], self.cfg.contact_side, self.cfg.d,
                   self.modal.omega, self.cfg.zeta_st, self.modal.phi_tip, self.modal.F_st, state_index]
        return row


@dataclass(frozen=True)
class MagnetPlugin:
    cfg: MagnetConfig

    def encode(self, state_index: int = -1) -> np.ndarray:
        c = self.cfg
        row = np.zeros(PLUGIN_WIDTH)
        row[:11] = [KIND_MAGNET, TARGETS[c.target], c.prefactor, c.a1, c.b1, c.c1,
                    c.a2, c.b2, c.c2, c.d, c.opening]
        return row


def encode_plugins(plugins) -> np.ndarray:
    """Stack plugin rows; stopper coordinates follow the five harvester states."""
    rows = []
    next_state = 5
    for plugin in plugins:
        if isinstance(plugin, StopperPlugin):
            rows.append(plugin.encode(next_state))
            next_state += 2
        elif isinstance(plugin, MagnetPlugin):
            rows.append(plugin.encode())
        else:
            raise TypeError(f"unsupported plugin {type(plugin).__name__}")
    if not rows:
        return np.zeros((0, PLUGIN_WIDTH))
    return np.vstack(rows)


def state_size(plugins) -> int:
    return 5 + 2 * sum(isinstance(p, StopperPlugin) for p in plugins)
