"""Two-mode nonlinear electromechanical model and its compiled right-hand side.

Per mode ``i`` the modal coordinate obeys

    (1 + Kn eta^2) eta'' = F sin(Omega t) - 2 zeta omega eta' - (omega^2 - Kg cos(Omega t)) eta
                           - (Rs - Omega^2 Kn / 2) eta^3 - Kn eta eta'^2 - theta v + plugin forces

and the load circuit ``Cp v' + v / Rl - sum(theta eta') = 0``.  With this
circuit sign the unforced system has the energy

    E = sum[(1 + Kn eta^2) eta'^2 / 2 + omega^2 eta^2 / 2 + (Rs - Omega^2 Kn / 2) eta^4 / 4] + Cp v^2 / 2

and ``dE/dt = -sum(2 zeta omega eta'^2) - v^2 / Rl`` exactly.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .forces import KIND_MAGNET, KIND_STOPPER, contact_force, cuboid_force, encode_plugins
from .geometry import HarvesterConfig, SectionModel, axial_gravity
from .modal import ModeSet, gauss_legendre

log = logging.getLogger(__name__)

OFFDIAG_LIMIT = 0.05
# layout of the packed parameter vector handed to the compiled code
P_OMEGA, P_W, P_Z, P_KG, P_RS, P_KN, P_F, P_TH, P_CP, P_RL, P_PHM, P_PHA = (
    0, 1, 3, 5, 7, 9, 11, 13, 15, 16, 17, 19)
N_PARAMS = 21


# --------------------------------------------------------------------------- coefficients


class _Quad:
    """Quadrature of products of mode-shape derivatives on one section."""

    def __init__(self, sections: SectionModel, modes: ModeSet, i: int):
        xq, wq = gauss_legendre()
        self.x = xq * sections.L[i]
        self.w = wq * sections.L[i]
        self.d = [[s(i, self.x, k) for k in range(3)] for s in modes.shapes]


@dataclass(frozen=True, eq=False)
class ModalCoefficients:
    """Projected coefficient matrices (2x2) and forcing vector.

    ``Mb_translational`` excludes the tip rotary inertia and enters the
    frequency identity ``Kb + Omega^2 (Ks - Mb_translational) = omega^2``.
    """

    Mb: np.ndarray
    Mb_translational: np.ndarray
    Kb: np.ndarray
    Ks: np.ndarray
    Kg: np.ndarray
    Rs: np.ndarray
    Kn: np.ndarray
    F: np.ndarray
    Omega: float
    off_diagonal: dict = field(default_factory=dict)

    @property
    def stiffness(self) -> np.ndarray:
        return self.Kb + self.Omega**2 * (self.Ks - self.Mb_translational)

    def frequency_identity(self) -> np.ndarray:
        return np.diag(self.stiffness)

    @property
    def orthogonal(self) -> bool:
        return max(self.off_diagonal.get("Mb", 0.0), self.off_diagonal.get("K", 0.0)) <= OFFDIAG_LIMIT


def _ratio(A: np.ndarray) -> float:
    scale = np.sqrt(abs(A[0, 0] * A[1, 1]))
    return float(abs(A[0, 1]) / scale) if scale > 0 else 0.0


def _bilinear(quads, coef, order):
    n = len(quads[0].d)
    out = np.zeros((n, n))
    for i, q in enumerate(quads):
        c = coef[i](q.x) if callable(coef[i]) else coef[i]
        for j in range(n):
            for k in range(n):
                out[j, k] += np.sum(q.w * c * q.d[j][order] * q.d[k][order])
    return out


def shortening_inertia(sections: SectionModel, modes: ModeSet, j: int) -> float:
    """``Kn`` of mode ``j``: kinetic form of the axial motion due to quadratic shortening.

    Along the main beam the axial displacement is ``-eta^2 W / 2`` with
    ``W(x) = int_0^x phi'^2`` accumulated from the clamp.  The folded beam
    points back toward the axis, so its own shortening moves it outward while
    it is carried inward with the main-beam tip: ``W = U_aux(x) - W_tip``.
    ``Kn = sum int m W^2 + Mt W(L)^2``.
    """
    xq, wq = gauss_legendre()
    shape = modes.shapes[j]
    total = 0.0
    main = 0.0   # shortening accumulated from the clamp to the current main section
    aux = 0.0    # shortening accumulated along the folded chain
    for i in range(len(sections.L)):
        L, m, Mt = sections.L[i], sections.m[i], sections.Mt[i]
        x = xq * L
        U = x * ((shape(i, x[:, None] * xq[None, :], 1) ** 2) @ wq)
        UL = L * np.sum(wq * shape(i, x, 1) ** 2)
        if i < sections.fold_index:
            W, W_end = main + U, main + UL
            main += UL
        else:
            W, W_end = aux + U - main, aux + UL - main
            aux += UL
        total += m * np.sum(wq * L * W**2) + Mt * W_end**2
    return float(total)


def modal_coefficients(modes: ModeSet, sections: SectionModel) -> ModalCoefficients:
    """Project the beam equations on the mass-normalised modes by Gauss quadrature."""
    nsec = len(sections.L)
    quads = [_Quad(sections, modes, i) for i in range(nsec)]
    n = len(modes.shapes)
    tips = [[(s.tip(i), s.tip(i, 1)) for s in modes.shapes] for i in range(nsec)]

    Mb_t = _bilinear(quads, sections.m, 0)
    rot = np.zeros((n, n))
    for i in range(nsec):
        for j in range(n):
            for k in range(n):
                Mb_t[j, k] += sections.Mt[i] * tips[i][j][0] * tips[i][k][0]
                rot[j, k] += sections.IM[i] * tips[i][j][1] * tips[i][k][1]
    Mb = Mb_t + rot
    Kb = _bilinear(quads, sections.YI, 2)
    Ks = _bilinear(quads, modes.fc_bar, 1)
    gravity = axial_gravity(sections)
    Kg = -_bilinear(quads, gravity, 1)

    Rs = np.zeros(n)
    Kn = np.zeros(n)
    for j in range(n):
        Rs[j] = 2 * sum(np.sum(q.w * sections.YI[i] * (q.d[j][1] * q.d[j][2]) ** 2)
                        for i, q in enumerate(quads))
        Kn[j] = shortening_inertia(sections, modes, j)

    # transverse gravity acts along +w on the main beam and -w in the folded frame
    F = np.zeros(n)
    for j in range(n):
        for i, q in enumerate(quads):
            sign = -1.0 if i >= sections.fold_index else 1.0
            F[j] += sign * sections.g * (sections.m[i] * np.sum(q.w * q.d[j][0]) + sections.Mt[i] * tips[i][j][0])

    Omega = modes.Omega
    K = Kb + Omega**2 * (Ks - Mb_t)
    off = {"Mb": _ratio(Mb), "K": _ratio(K), "Kg": _ratio(Kg)} if n == 2 else {}
    coeffs = ModalCoefficients(Mb=Mb, Mb_translational=Mb_t, Kb=Kb, Ks=Ks, Kg=Kg, Rs=Rs,
                               Kn=np.diag(Kn), F=F, Omega=Omega, off_diagonal=off)
    if not coeffs.orthogonal:
        log.warning("off-diagonal modal terms exceed %.0f%% at Omega=%.4g rad/s: %s",
                    100 * OFFDIAG_LIMIT, Omega, off)
    return coeffs


def coupling_coefficient(modes: ModeSet, sections: SectionModel, config: HarvesterConfig) -> np.ndarray:
    """Electromechanical coupling of each mode (N/V per unit modal coordinate).

    ``slope_difference`` integrates the electrode over the patch,
    ``point`` evaluates the slope at the patch end only.
    """
    e31 = config.d31 * config.Yp
    hp = config.he
    factor = -e31 * config.be * (sections.h_c**2 - sections.h_b**2) / (2 * hp)
    start, end = config.pzt_offset, config.pzt_offset + config.pzt_length
    slopes = []
    for s in modes.shapes:
        slope = s(1, end, 1)
        if config.coupling_form == "slope_difference":
            slope = slope - s(1, start, 1)
        slopes.append(float(slope))
    return factor * np.array(slopes)


# --------------------------------------------------------------------------- model


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """Diagonal two-mode model at one rotation speed."""

    Omega: float
    omega: np.ndarray
    zeta: np.ndarray
    Kg: np.ndarray
    Rs: np.ndarray
    Kn: np.ndarray
    F: np.ndarray
    theta: np.ndarray
    Cp: float
    Rl: float
    phi_main: np.ndarray
    phi_aux: np.ndarray
    coefficients: ModalCoefficients | None = None

    def __post_init__(self):
        for name in ("omega", "zeta", "Kg", "Rs", "Kn", "F", "theta", "phi_main", "phi_aux"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def replace(self, **changes) -> "ReducedModel":
        return dataclasses.replace(self, **changes)

    def linear(self) -> "ReducedModel":
        """Same model with every nonlinear and parametric coefficient zeroed."""
        zero = np.zeros(2)
        return self.replace(Kg=zero, Rs=zero, Kn=zero)

    def packed(self) -> np.ndarray:
        p = np.zeros(N_PARAMS)
        p[P_OMEGA] = self.Omega
        for offset, values in ((P_W, self.omega), (P_Z, self.zeta), (P_KG, self.Kg), (P_RS, self.Rs),
                               (P_KN, self.Kn), (P_F, self.F), (P_TH, self.theta),
                               (P_PHM, self.phi_main), (P_PHA, self.phi_aux)):
            p[offset:offset + 2] = values
        p[P_CP], p[P_RL] = self.Cp, self.Rl
        return p

    def report_rows(self) -> list[dict]:
        rows = []
        for i in range(2):
            row = {"mode": i + 1, "omega_rad_s": self.omega[i], "zeta": self.zeta[i], "Kg": self.Kg[i],
                   "Rs": self.Rs[i], "Kn": self.Kn[i], "F": self.F[i], "theta": self.theta[i],
                   "phi_main_tip": self.phi_main[i], "phi_aux_tip": self.phi_aux[i]}
            if self.coefficients is not None:
                c = self.coefficients
                row.update(Mb=c.Mb[i, i], Kb=c.Kb[i, i], Ks=c.Ks[i, i])
            rows.append(row)
        return rows

    def write_report(self, path) -> None:
        rows = self.report_rows()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.DictWriter(fh, fieldnames=list(rows[0]))
            out.writeheader()
            for row in rows:
                out.writerow({k: (f"{v:.10e}" if isinstance(v, float) else v) for k, v in row.items()})


def build_reduced_model(config: HarvesterConfig, sections: SectionModel, modes: ModeSet) -> ReducedModel:
    coeffs = modal_coefficients(modes, sections)
    return ReducedModel(
        Omega=modes.Omega, omega=modes.omegas, zeta=np.array([config.zeta1, config.zeta2]),
        Kg=np.diag(coeffs.Kg), Rs=coeffs.Rs, Kn=np.diag(coeffs.Kn), F=coeffs.F,
        theta=coupling_coefficient(modes, sections, config), Cp=config.Cp, Rl=config.Rl,
        phi_main=modes.tip_values(sections.main_tip), phi_aux=modes.tip_values(sections.aux_tip), coefficients=coeffs)


# --------------------------------------------------------------------------- state and rhs


@dataclass
class SystemState:
    """Modal coordinates, voltage and (optionally) one stopper coordinate pair."""

    eta: np.ndarray = field(default_factory=lambda: np.zeros(2))
    eta_dot: np.ndarray = field(default_factory=lambda: np.zeros(2))
    v: float = 0.0
    eta_st: float = 0.0
    eta_st_dot: float = 0.0
    t: float = 0.0
    extra: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_vector(self, size: int = 5) -> np.ndarray:
        y = np.zeros(size)
        y[0:2], y[2:4], y[4] = self.eta, self.eta_dot, self.v
        if size > 5:
            y[5], y[6] = self.eta_st, self.eta_st_dot
            y[7:] = self.extra[:size - 7] if self.extra.size else 0.0
        return y

    @classmethod
    def from_vector(cls, y, t: float = 0.0) -> "SystemState":
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError("non-finite state")
        st = (y[5], y[6]) if y.size > 5 else (0.0, 0.0)
        return cls(eta=y[0:2].copy(), eta_dot=y[2:4].copy(), v=float(y[4]), eta_st=float(st[0]),
                   eta_st_dot=float(st[1]), t=t, extra=y[7:].copy())


@njit(cache=True)
def tip_displacement(y, p, target):
    off = P_PHM if target == 0 else P_PHA
    return p[off] * y[0] + p[off + 1] * y[1], p[off] * y[2] + p[off + 1] * y[3]


@njit(cache=True)
def event_values(y, p, plugins, out):
    """Signed distance into contact for every stopper row (engaged when >= 0)."""
    for r in range(plugins.shape[0]):
        row = plugins[r]
        if row[0] == KIND_STOPPER:
            k = int(row[8])
            yt, _ = tip_displacement(y, p, int(row[1]))
            out[r] = row[2] * (yt - row[6] * y[k]) - row[3]
        else:
            out[r] = -1.0


@njit(cache=True)
def rhs_core(t, y, p, plugins, engaged, dy):
    """Compiled right-hand side; ``engaged[r]`` fixes each stopper's contact mode."""
    Om = p[P_OMEGA]
    s, c = np.sin(Om * t), np.cos(Om * t)
    gen0 = 0.0
    gen1 = 0.0
    for r in range(plugins.shape[0]):
        row = plugins[r]
        target = int(row[1])
        off = P_PHM if target == 0 else P_PHA
        yt, vt = tip_displacement(y, p, target)
        if row[0] == KIND_STOPPER:
            k = int(row[8])
            phi_st = row[6]
            f = contact_force(yt - phi_st * y[k], vt - phi_st * y[k + 1], row[2], row[3],
                              row[4], row[5], phi_st, engaged[r] != 0)
            w_st, z_st = row[4], row[5]
            dy[k] = y[k + 1]
            dy[k + 1] = row[7] * s - 2.0 * z_st * w_st * y[k + 1] - w_st**2 * y[k] - f * phi_st
        elif row[0] == KIND_MAGNET:
            gamma = row[9] + row[10] * yt
            _, _, fz = cuboid_force(row[6], row[7], row[8], row[3], row[4], row[5], 0.0, 0.0, gamma, row[2])
            f = row[10] * fz
        else:
            f = 0.0
        gen0 += f * p[off]
        gen1 += f * p[off + 1]
    v = y[4]
    for i in range(2):
        eta, ed = y[i], y[2 + i]
        w, z, kn = p[P_W + i], p[P_Z + i], p[P_KN + i]
        num = (p[P_F + i] * s - 2.0 * z * w * ed - (w * w - p[P_KG + i] * c) * eta
               - (p[P_RS + i] - 0.5 * Om * Om * kn) * eta**3 - kn * eta * ed * ed - p[P_TH + i] * v)
        num += gen0 if i == 0 else gen1
        dy[i] = ed
        dy[2 + i] = num / (1.0 + kn * eta * eta)
    dy[4] = (p[P_TH] * y[2] + p[P_TH + 1] * y[3] - v / p[P_RL]) / p[P_CP]


def engagement(y, model: ReducedModel, plugins_array: np.ndarray) -> np.ndarray:
    g = np.zeros(plugins_array.shape[0])
    event_values(np.asarray(y, float), model.packed(), plugins_array, g)
    return (g >= 0).astype(np.int64)


def ode_rhs(state: SystemState, t: float, model: ReducedModel, plugins=()) -> np.ndarray:
    """State derivative as a vector ``[eta', eta'', v', (eta_st', eta_st'')...]``."""
    from .forces import state_size

    arr = encode_plugins(plugins)
    y = state.to_vector(state_size(plugins))
    dy = np.zeros_like(y)
    rhs_core(t, y, model.packed(), arr, engagement(y, model, arr), dy)
    return dy


def energy(y, model: ReducedModel) -> float:
    """Stored energy of the harvester (modes plus capacitor), plugins excluded."""
    y = np.asarray(y, dtype=float)
    eta, ed, v = y[0:2], y[2:4], y[4]
    Om2 = model.Omega**2
    return float(np.sum(0.5 * (1 + model.Kn * eta**2) * ed**2 + 0.5 * model.omega**2 * eta**2
                        + 0.25 * (model.Rs - 0.5 * Om2 * model.Kn) * eta**4) + 0.5 * model.Cp * v**2)


def dissipation(y, model: ReducedModel) -> float:
    """Rate of energy loss ``sum(2 zeta omega eta'^2) + v^2 / Rl``."""
    y = np.asarray(y, dtype=float)
    return float(np.sum(2 * model.zeta * model.omega * y[2:4] ** 2) + y[4] ** 2 / model.Rl)


# --------------------------------------------------------------------------- linear oracle


def linear_response(model: ReducedModel, Omega: float | None = None) -> tuple[np.ndarray, complex]:
    """Steady-state complex amplitudes of the linear model under ``F sin(Omega t)``.

    Returns ``(H, V)`` with ``eta_i = Im(H_i exp(j Omega t))`` and likewise for v.
    """
    Om = model.Omega if Omega is None else Omega
    n = 2
    A = np.zeros((n + 1, n + 1), dtype=complex)
    b = np.zeros(n + 1, dtype=complex)
    for i in range(n):
        A[i, i] = model.omega[i] ** 2 - Om**2 + 2j * model.zeta[i] * model.omega[i] * Om
        A[i, n] = model.theta[i]
        b[i] = model.F[i]
    A[n, :n] = -1j * Om * model.theta
    A[n, n] = 1j * Om * model.Cp + 1 / model.Rl
    x = np.linalg.solve(A, b)
    return x[:n], complex(x[n])
