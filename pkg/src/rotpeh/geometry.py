"""Device description and per-section beam properties.

The cut-out beam is split into four uniform sections.  Sections 0-2 form the
main beam running outward from the clamp; section 3 is the auxiliary beam that
folds back from the tip of section 2.  Every quantity here is SI.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

CENTRIFUGAL_MODELS = ("consistent", "as_printed")
COUPLING_FORMS = ("slope_difference", "point")


class ConfigError(ValueError):
    """Invalid device or scenario parameter.  ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class HarvesterConfig:
    """Physical description of the harvester.  Defaults are the prototype values.

    ``rail_width`` is the total width of the two side rails left around the
    auxiliary-beam slot in section 2 of the main beam; ``None`` means
    ``b1 - b2``.  ``inner_thickness`` enables an optional layer of modulus
    ``Ype`` between substrate and patch (off by default).
    """

    rotation_radius: float = 30e-3
    L1: float = 33e-3
    L2: float = 34e-3
    L3: float = 57e-3
    L4: float = 41e-3
    mass_length: float = 6e-3
    pzt_length: float = 34e-3
    pzt_offset: float = 0.0
    b1: float = 20e-3
    b2: float = 12e-3
    be: float = 12e-3
    rail_width: float | None = None
    hs: float = 0.3e-3
    he: float = 0.4e-3
    inner_thickness: float = 0.0
    Ys: float = 193e9
    Yp: float = 45e9
    Ype: float = 4e9
    rho_s: float = 7930.0
    rho_e: float = 1780.0
    M1: float = 2.42e-3
    M2: float = 1.25e-3
    d31: float = -23e-12
    Cp: float = 1.38e-9
    Rl: float = 1e6
    zeta1: float = 0.028
    zeta2: float = 0.034
    g: float = 9.81
    include_pzt_mass: bool = True
    tip_inertia: tuple[float, float] | None = None
    centrifugal_model: str = "consistent"
    coupling_form: str = "slope_difference"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        positive = ("rotation_radius", "L1", "L2", "L3", "L4", "mass_length", "pzt_length",
                    "b1", "b2", "be", "hs", "he", "Ys", "Yp", "Ype", "rho_s", "rho_e", "Cp", "Rl")
        for name in positive:
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(name, f"must be strictly positive, got {value!r}")
        for name in ("M1", "M2", "pzt_offset", "inner_thickness", "g"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(name, f"must be non-negative, got {value!r}")
        for name in ("zeta1", "zeta2"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ConfigError(name, f"damping ratio must lie in (0, 1), got {value!r}")
        if self.pzt_offset + self.pzt_length > self.L2 * (1 + 1e-12):
            raise ConfigError("pzt_length", "PZT patch (pzt_offset + pzt_length) extends past section L2")
        if self.rail_width is not None and self.rail_width <= 0:
            raise ConfigError("rail_width", f"must be strictly positive, got {self.rail_width!r}")
        if self.rail_width is None and self.b1 <= self.b2:
            raise ConfigError("b2", "auxiliary beam must be narrower than the main beam "
                                    "unless rail_width is given")
        if self.be > self.b1:
            raise ConfigError("be", "PZT patch is wider than the main beam")
        if self.tip_inertia is not None and (len(self.tip_inertia) != 2 or min(self.tip_inertia) < 0):
            raise ConfigError("tip_inertia", "expects two non-negative values (I_M1, I_M2)")
        if self.centrifugal_model not in CENTRIFUGAL_MODELS:
            raise ConfigError("centrifugal_model", f"expected one of {CENTRIFUGAL_MODELS}")
        if self.coupling_form not in COUPLING_FORMS:
            raise ConfigError("coupling_form", f"expected one of {COUPLING_FORMS}")
        if self.centrifugal_model == "consistent" and self.L4 >= self.rotation_radius + self.L1 + self.L2 + self.L3:
            raise ConfigError("L4", "auxiliary beam reaches past the rotation axis")

    def replace(self, **changes) -> "HarvesterConfig":
        return dataclasses.replace(self, **changes)

    @property
    def section_lengths(self) -> np.ndarray:
        return np.array([self.L1, self.L2, self.L3, self.L4])

    @property
    def main_length(self) -> float:
        """Main-beam length as quoted for the prototype (sections plus mass block)."""
        return self.L1 + self.L2 + self.L3 + self.mass_length


@dataclass(frozen=True, eq=False)
class SectionModel:
    """Derived per-section quantities, all arrays of length 4.

    ``direction`` is +1 where the local coordinate runs away from the rotation
    axis and -1 where it runs back toward it (the folded auxiliary beam under
    the consistent model).  ``fold_index`` is the first auxiliary section; the
    device has four sections, but the modal solver accepts any chain (see
    ``split_section``).
    """

    L: np.ndarray
    m: np.ndarray
    YI: np.ndarray
    R: np.ndarray
    Mt: np.ndarray
    IM: np.ndarray
    direction: np.ndarray
    h_b: float
    h_c: float
    neutral_axis: float
    g: float
    centrifugal_model: str = "consistent"
    widths: np.ndarray = field(default_factory=lambda: np.zeros(4))
    fold_index: int = 3

    def __post_init__(self):
        for name in ("L", "m", "YI", "R", "Mt", "IM", "direction", "widths"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def main_tip(self) -> int:
        """Index of the section whose end carries the main-beam mass."""
        return self.fold_index - 1

    @property
    def aux_tip(self) -> int:
        return self.L.size - 1

    def scaled(self, factor: float) -> "SectionModel":
        """Same geometry with stiffness and every mass quantity multiplied by ``factor``."""
        return dataclasses.replace(self, m=self.m * factor, YI=self.YI * factor,
                                   Mt=self.Mt * factor, IM=self.IM * factor)


def _layer_stack(config: HarvesterConfig):
    """(modulus, width, thickness, bottom z) for the PZT-bearing section."""
    layers = [(config.Ys, config.b1, config.hs, 0.0)]
    z = config.hs
    if config.inner_thickness > 0:
        layers.append((config.Ype, config.be, config.inner_thickness, z))
        z += config.inner_thickness
    layers.append((config.Yp, config.be, config.he, z))
    return layers


def composite_section(config: HarvesterConfig) -> tuple[float, float, float, float]:
    """Transformed-section bending stiffness of the patch-bearing section.

    Returns ``(YI, neutral_axis, h_b, h_c)`` with the neutral axis measured
    from the substrate bottom and h_b/h_c the patch bottom/top measured from it.
    """
    layers = _layer_stack(config)
    EA = sum(Y * b * h for Y, b, h, _ in layers)
    zbar = sum(Y * b * h * (z0 + h / 2) for Y, b, h, z0 in layers) / EA
    YI = sum(Y * (b * h**3 / 12 + b * h * (z0 + h / 2 - zbar) ** 2) for Y, b, h, z0 in layers)
    z_bottom = layers[-1][3]
    return YI, zbar, z_bottom - zbar, z_bottom + config.he - zbar


def build_sections(config: HarvesterConfig) -> SectionModel:
    config.validate()
    rail = config.rail_width if config.rail_width is not None else config.b1 - config.b2
    widths = np.array([config.b1, config.b1, rail, config.b2])
    m = config.rho_s * widths * config.hs
    if config.include_pzt_mass:
        m[1] += config.rho_e * config.be * (config.he + config.inner_thickness)
    YI = config.Ys * widths * config.hs**3 / 12
    YI2, zbar, h_b, h_c = composite_section(config)
    YI[1] = YI2

    L = config.section_lengths
    R = config.rotation_radius + np.concatenate([[0.0], np.cumsum(L[:3])])
    Mt = np.array([0.0, 0.0, config.M1, config.M2])
    if config.tip_inertia is not None:
        IM = np.array([0.0, 0.0, *config.tip_inertia])
    else:
        IM = Mt * config.mass_length**2 / 12
    direction = np.array([1.0, 1.0, 1.0, -1.0 if config.centrifugal_model == "consistent" else 1.0])
    return SectionModel(L=L, m=m, YI=YI, R=R, Mt=Mt, IM=IM, direction=direction,
                        h_b=h_b, h_c=h_c, neutral_axis=zbar, g=config.g,
                        centrifugal_model=config.centrifugal_model, widths=widths)


def split_section(sections: SectionModel, i: int) -> SectionModel:
    """Same structure with section ``i`` cut into two identical halves.

    Any tip mass stays at the outer end of the second half.
    """
    def dup(arr, first=None, second=None):
        arr = np.asarray(arr, dtype=float)
        a = arr[i] if first is None else first
        b = arr[i] if second is None else second
        return np.concatenate([arr[:i], [a, b], arr[i + 1:]])

    half = sections.L[i] / 2
    return dataclasses.replace(
        sections, L=dup(sections.L, half, half), m=dup(sections.m), YI=dup(sections.YI),
        R=dup(sections.R, sections.R[i], sections.R[i] + sections.direction[i] * half),
        Mt=dup(sections.Mt, 0.0), IM=dup(sections.IM, 0.0), direction=dup(sections.direction),
        widths=dup(sections.widths), fold_index=sections.fold_index + (1 if i < sections.fold_index else 0))


def _check_domain(x, length):
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12 * length) or np.any(x > length * (1 + 1e-12)):
        raise ValueError(f"position outside section domain [0, {length}]")
    return x


def centrifugal_profile(sections: SectionModel, i: int) -> Callable:
    """Centrifugal coefficient ``fc_i(x)`` of section ``i`` (0-based), in kg*m.

    Mass outboard of ``x`` times its rotation radius; multiply by the squared
    rotation speed for a force.
    """
    L, m, R, Mt, s = sections.L[i], sections.m[i], sections.R[i], sections.Mt[i], sections.direction[i]

    def fc(x):
        x = _check_domain(x, L)
        return m * (R * (L - x) + s * (L**2 - x**2) / 2) + Mt * (R + s * L)

    return fc


def gravity_profile(sections: SectionModel, i: int) -> Callable:
    """Gravity coefficient ``fg_i(x) = [(L_i - x) m_i + Mt_i] g`` in N."""
    L, m, Mt, g = sections.L[i], sections.m[i], sections.Mt[i], sections.g

    def fg(x):
        x = _check_domain(x, L)
        return ((L - x) * m + Mt) * g

    return fg


def combine_junctions(profiles, sections: SectionModel, tip_sign: float = 1.0) -> list[Callable]:
    """Axial-load profiles assembled through the junction force balances.

    ``profiles[i](x)`` is the load carried by section ``i`` from its own mass
    outboard of ``x``.  The folded section contributes ``tip_sign * p_3`` and
    pulls the main-beam tip against its own axis.  Under the consistent model
    sections 0 and 1 carry everything outboard; under ``as_printed`` they see
    only the next section.
    """
    p = list(profiles)
    cumulative = sections.centrifugal_model == "consistent"

    def n3(x):
        return tip_sign * p[3](x)

    def n2(x):
        return p[2](x) - n3(0.0)

    if cumulative:
        def n1(x):
            return p[1](x) + n2(0.0)

        def n0(x):
            return p[0](x) + n1(0.0)
    else:
        def n1(x):
            return p[1](x) + p[2](0.0)

        def n0(x):
            return p[0](x) + p[1](0.0)

    return [n0, n1, n2, n3]


def axial_centrifugal(sections: SectionModel) -> list[Callable]:
    """Signed centrifugal axial-load coefficient per section (tension positive), kg*m."""
    fcs = [centrifugal_profile(sections, i) for i in range(4)]
    return combine_junctions(fcs, sections, tip_sign=sections.direction[3])


def axial_gravity(sections: SectionModel) -> list[Callable]:
    """Coefficient of ``cos(Omega t)`` in the axial load of each section, N.

    Gravity pulls sections 0-2 toward the root and, in the flipped frame of the
    folded section, along its own axis.
    """
    fgs = [gravity_profile(sections, i) for i in range(4)]
    if sections.centrifugal_model == "consistent":
        neg = [lambda x, f=f: -f(x) for f in fgs[:3]] + [fgs[3]]
        return combine_junctions(neg, sections, tip_sign=1.0)

    def n3(x):
        return fgs[3](x)

    def n2(x):
        return -(fgs[2](x) + fgs[3](0.0))

    def n1(x):
        return -(fgs[1](x) - fgs[2](0.0))

    def n0(x):
        return -(fgs[0](x) - fgs[1](0.0))

    return [n0, n1, n2, n3]
