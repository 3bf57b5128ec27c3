"""Rotation-dependent natural frequencies and mode shapes of the cut-out beam.

Each section obeys ``YI phi'''' - T phi'' - m (omega^2 + Omega^2) phi = 0`` with
``T = fc_bar * Omega^2`` the section's RMS centrifugal axial load.  The 16x16
boundary matrix collects the clamp, two straight junctions, the fold-back
junction and the free end; its determinant vanishes at natural frequencies.

Hyperbolic basis functions are stored scaled by ``exp(-a L)`` so that the
matrix stays finite for stiff sections at high frequency.  This is a positive
column scaling and leaves determinant signs untouched.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import SectionModel, axial_centrifugal

log = logging.getLogger(__name__)

QUAD_POINTS = 64


class ModalError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def gauss_legendre(n: int = QUAD_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = (x + 1) / 2, w / 2
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def rms_value(profile, length: float, signed: bool = False) -> float:
    """Root-mean-square of ``profile`` over ``[0, length]``.

    With ``signed`` the result carries the sign of the profile's mean, so a
    compressive load stays compressive.
    """
    xq, wq = gauss_legendre()
    values = np.asarray(profile(xq * length), dtype=float)
    rms = np.sqrt(np.sum(wq * values**2))
    if signed and np.sum(wq * values) < 0:
        return -rms
    return float(rms)


def rms_centrifugal(sections: SectionModel) -> np.ndarray:
    """Per-section RMS centrifugal coefficient ``fc_bar`` (kg*m), independent of speed."""
    signed = sections.centrifugal_model == "consistent"
    profiles = axial_centrifugal(sections)
    return np.array([rms_value(profiles[i], sections.L[i], signed) for i in range(4)])


def section_wavenumbers(YI, m, fc_bar, Omega, omega):
    """Characteristic wavenumbers ``(a, b)`` of one uniform rotating section.

    ``a`` multiplies the hyperbolic and ``b`` the trigonometric terms.  Works
    elementwise; ``omega`` may be an array.
    """
    omega = np.asarray(omega, dtype=float)
    T = fc_bar * Omega**2
    lam = omega**2 + Omega**2
    root = np.sqrt(T**2 + 4 * YI * m * lam)
    a = np.sqrt((T + root) / (2 * YI))
    b = np.sqrt((root - T) / (2 * YI))
    return a, b


def _basis(a, b, x, L):
    """Shape-function rows for derivative orders 0..3, shape (..., 4, 4).

    Columns are ``cosh(ax), sinh(ax)`` scaled by ``exp(-aL)`` then ``cos(bx), sin(bx)``.
    """
    a, b, x = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(x, float))
    ep = np.exp(a * (x - L))
    em = np.exp(-a * (x + L))
    ch, sh = 0.5 * (ep + em), 0.5 * (ep - em)
    c, s = np.cos(b * x), np.sin(b * x)
    a2, b2 = a * a, b * b
    rows = [
        [ch, sh, c, s],
        [a * sh, a * ch, -b * s, b * c],
        [a2 * ch, a2 * sh, -b2 * c, -b2 * s],
        [a2 * a * sh, a2 * a * ch, b2 * b * s, -b2 * b * c],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def _wavenumbers_lam(YI, m, T, lam):
    root = np.sqrt(T**2 + 4 * YI * m * lam)
    return np.sqrt((T + root) / (2 * YI)), np.sqrt((root - T) / (2 * YI))


def _matrix(sections: SectionModel, Omega: float, lam, w2, fc_bar) -> np.ndarray:
    """Core assembler; ``lam = omega^2 + Omega^2`` drives the wavenumbers, ``w2``
    the rotary-inertia rows.  Both are 1-d arrays."""
    n = lam.size
    ns = sections.L.size
    T = np.asarray(fc_bar) * Omega**2
    L, YI, Mt, IM = sections.L, sections.YI, sections.Mt, sections.IM
    start, end = [], []
    for i in range(ns):
        a, b = _wavenumbers_lam(YI[i], sections.m[i], T[i], lam)
        start.append(_basis(a, b, 0.0, L[i]))
        end.append(_basis(a, b, L[i], L[i]))

    size = 4 * ns
    M = np.zeros((n, size, size))
    M[:, 0, 0:4] = start[0][:, 0]
    M[:, 1, 0:4] = start[0][:, 1]
    r = 2
    for i in range(ns - 1):
        ci, cj = slice(4 * i, 4 * i + 4), slice(4 * i + 4, 4 * i + 8)
        fold = -1.0 if i + 1 == sections.fold_index else 1.0
        e, s = end[i], start[i + 1]
        M[:, r, ci], M[:, r, cj] = e[:, 0], -fold * s[:, 0]
        M[:, r + 1, ci], M[:, r + 1, cj] = e[:, 1], -s[:, 1]
        M[:, r + 2, ci] = YI[i] * e[:, 2] - (IM[i] * w2)[:, None] * e[:, 1]
        M[:, r + 2, cj] = -YI[i + 1] * s[:, 2]
        M[:, r + 3, ci] = YI[i] * e[:, 3] - T[i] * e[:, 1] + (Mt[i] * lam)[:, None] * e[:, 0]
        M[:, r + 3, cj] = -fold * (YI[i + 1] * s[:, 3] - T[i + 1] * s[:, 1])
        r += 4
    e, k = end[-1], ns - 1
    M[:, r, 4 * k:] = YI[k] * e[:, 2] - (IM[k] * w2)[:, None] * e[:, 1]
    M[:, r + 1, 4 * k:] = YI[k] * e[:, 3] - T[k] * e[:, 1] + (Mt[k] * lam)[:, None] * e[:, 0]
    return M


def assemble_boundary_matrix(sections: SectionModel, Omega: float, omega, fc_bar=None) -> np.ndarray:
    """Boundary/continuity matrix acting on ``[A_i, B_i, C_i, D_i]`` for i = 0..3.

    Row order: clamp (2), junction 0-1 (4), junction 1-2 (4), fold 2-3 (4),
    free end (2) for the four-section device; longer chains add four rows per
    extra junction.  Shear rows carry the linear centrifugal axial load and the
    tip-mass inertia; moment rows at the fold and free end carry the rotary
    inertia of the mass blocks.  Returns shape (4n, 4n), or (N, 4n, 4n) for
    an array of ``omega``.
    """
    if fc_bar is None:
        fc_bar = rms_centrifugal(sections)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    M = _matrix(sections, Omega, w**2 + Omega**2, w**2, fc_bar)
    return M[0] if np.ndim(omega) == 0 else M


def _row_scaled(M: np.ndarray) -> np.ndarray:
    return M / np.abs(M).max(axis=-1, keepdims=True)


def determinant_sign(sections: SectionModel, Omega: float, omega, fc_bar=None) -> np.ndarray:
    """Sign of the row-scaled boundary determinant (LU with pivot parity)."""
    if fc_bar is None:
        fc_bar = rms_centrifugal(sections)
    return np.linalg.slogdet(_row_scaled(assemble_boundary_matrix(sections, Omega, omega, fc_bar)))[0]


def bisect_sign(sign_of, lo: float, hi: float, s_lo: float, rtol: float = 1e-10) -> float:
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        s_mid = sign_of(mid)
        if s_mid == 0:
            return mid
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_roots(det_sign, count: int, f_min: float = 0.1, df: float = 0.01,
               f_max: float = 500.0, chunk: int = 2000, rtol: float = 1e-10) -> list[float]:
    """Find the lowest ``count`` sign changes of ``det_sign(omega_array)``.

    The scan runs in Hz from ``f_min`` in steps of ``df``; each bracket is
    refined by bisection.  Returns angular frequencies.
    """
    roots: list[float] = []
    prev_f = prev_s = None
    f0 = f_min
    while len(roots) < count and f0 <= f_max:
        f = f0 + df * np.arange(chunk)
        f = f[f <= f_max]
        s = det_sign(2 * np.pi * f)
        if prev_f is not None:
            f, s = np.concatenate([[prev_f], f]), np.concatenate([[prev_s], s])
        for k in np.nonzero(s[:-1] * s[1:] < 0)[0]:
            roots.append(bisect_sign(lambda w: det_sign(np.array([w]))[0],
                                     2 * np.pi * f[k], 2 * np.pi * f[k + 1], s[k], rtol))
            if len(roots) == count:
                break
        prev_f, prev_s = f[-1], s[-1]
        f0 = f[-1] + df
    return roots


def check_stability(sections: SectionModel, Omega: float, fc_bar=None, f_min: float = 0.1) -> None:
    """Raise ``ModalError`` if some mode has negative squared frequency below ``f_min``."""
    if Omega == 0:
        return
    if fc_bar is None:
        fc_bar = rms_centrifugal(sections)
    w2 = np.linspace(-(Omega**2) * (1 - 1e-9), (2 * np.pi * f_min) ** 2, 401)
    signs = np.linalg.slogdet(_row_scaled(_matrix(sections, Omega, w2 + Omega**2, w2, fc_bar)))[0]
    # The determinant at f_min varies continuously with Omega and only flips
    # when a root passes below f_min, so comparing with the static sign also
    # catches modes that have dropped past lambda = 0.
    w_min = np.array([2 * np.pi * f_min])
    static = np.linalg.slogdet(_row_scaled(_matrix(sections, 0.0, w_min**2, w_min**2, fc_bar)))[0]
    if np.any(signs[:-1] * signs[1:] < 0) or signs[-1] != static[0]:
        raise ModalError(f"mode with negative stiffness at drive {Omega / (2 * np.pi):.3f} Hz "
                         "(centrifugal buckling of the linearised beam)")


def natural_frequencies(sections: SectionModel, Omega: float, count: int = 2, *,
                        f_min: float = 0.1, df: float = 0.01, f_max: float = 500.0,
                        fc_bar=None, stability_check: bool = True) -> np.ndarray:
    """Lowest ``count`` natural frequencies (rad/s) at rotation speed ``Omega``.

    Raises ``ModalError`` when fewer than ``count`` roots lie below ``f_max`` Hz
    or, with ``stability_check``, when a mode has buckled.
    """
    if count < 1 or Omega < 0:
        raise ValueError("need count >= 1 and Omega >= 0")
    if fc_bar is None:
        fc_bar = rms_centrifugal(sections)
    if stability_check:
        check_stability(sections, Omega, fc_bar, f_min)
    roots = scan_roots(lambda w: determinant_sign(sections, Omega, w, fc_bar), count,
                       f_min=f_min, df=df, f_max=f_max)
    if len(roots) < count:
        raise ModalError(f"found {len(roots)} of {count} natural frequencies below {f_max} Hz "
                         f"at Omega={Omega:.4g} rad/s")
    return np.array(roots)


@dataclass(frozen=True, eq=False)
class ModeShape:
    """Piecewise mode shape ``A cosh(ax) + B sinh(ax) + C cos(bx) + D sin(bx)``.

    ``coeffs[i]`` holds the section-``i`` amplitudes with the hyperbolic pair
    scaled by ``exp(a_i L_i)`` (see module notes); use ``A``..``D`` for the
    plain values.  ``fold_sign`` records the convention at the fold-back
    junction, ``phi_2(L_2) = fold_sign * phi_3(0)``.
    """

    coeffs: np.ndarray
    a: np.ndarray
    b: np.ndarray
    L: np.ndarray
    fold_sign: float = -1.0

    def __call__(self, i: int, x, deriv: int = 0):
        rows = _basis(self.a[i], self.b[i], np.asarray(x, float), self.L[i])[..., deriv, :]
        return rows @ self.coeffs[i]

    def tip(self, i: int, deriv: int = 0) -> float:
        return float(self(i, self.L[i], deriv))

    def _plain(self, col):
        scale = np.exp(-self.a * self.L) if col < 2 else 1.0
        return self.coeffs[:, col] * scale

    A = property(lambda self: self._plain(0))
    B = property(lambda self: self._plain(1))
    C = property(lambda self: self._plain(2))
    D = property(lambda self: self._plain(3))

    def scaled(self, factor: float) -> "ModeShape":
        return dataclasses.replace(self, coeffs=self.coeffs * factor)


def _section_samples(sections: SectionModel, shape: ModeShape, i: int, deriv: int):
    xq, wq = gauss_legendre()
    return shape(i, xq * sections.L[i], deriv), wq * sections.L[i]


def mass_form(sections: SectionModel, s1: ModeShape, s2: ModeShape, rotary: bool = True) -> float:
    """Generalised mass: distributed + tip masses (+ tip rotary inertia)."""
    total = 0.0
    for i in range(len(sections.L)):
        p1, w = _section_samples(sections, s1, i, 0)
        p2, _ = _section_samples(sections, s2, i, 0)
        total += sections.m[i] * np.sum(w * p1 * p2)
        total += sections.Mt[i] * s1.tip(i) * s2.tip(i)
        if rotary:
            total += sections.IM[i] * s1.tip(i, 1) * s2.tip(i, 1)
    return float(total)


def stiffness_form(sections: SectionModel, s1: ModeShape, s2: ModeShape, Omega: float,
                   fc_bar=None) -> float:
    """Bending + centrifugal stiffness minus the in-plane ``Omega^2`` mass softening."""
    if fc_bar is None:
        fc_bar = rms_centrifugal(sections)
    total = 0.0
    for i in range(len(sections.L)):
        c1, w = _section_samples(sections, s1, i, 2)
        c2, _ = _section_samples(sections, s2, i, 2)
        d1, _ = _section_samples(sections, s1, i, 1)
        d2, _ = _section_samples(sections, s2, i, 1)
        p1, _ = _section_samples(sections, s1, i, 0)
        p2, _ = _section_samples(sections, s2, i, 0)
        total += sections.YI[i] * np.sum(w * c1 * c2)
        total += fc_bar[i] * Omega**2 * np.sum(w * d1 * d2)
        total -= Omega**2 * (sections.m[i] * np.sum(w * p1 * p2) + sections.Mt[i] * s1.tip(i) * s2.tip(i))
    return float(total)


def mac(sections: SectionModel, s1: ModeShape, s2: ModeShape) -> float:
    """Mass-weighted modal assurance criterion."""
    m12 = mass_form(sections, s1, s2)
    return m12**2 / (mass_form(sections, s1, s1) * mass_form(sections, s2, s2))


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Natural frequencies and mass-normalised shapes at one rotation speed."""

    Omega: float
    omegas: np.ndarray
    shapes: tuple
    orthonormality: np.ndarray
    frequency_residual: np.ndarray
    fc_bar: np.ndarray
    sections: SectionModel

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.omegas / (2 * np.pi)

    def tip_values(self, i: int) -> np.ndarray:
        """``phi_j(L_i)`` for every mode ``j``."""
        return np.array([s.tip(i) for s in self.shapes])

    def aux_dominance(self) -> np.ndarray:
        """|auxiliary tip| / |main tip| per mode."""
        return np.abs(self.tip_values(self.sections.aux_tip)) / np.abs(self.tip_values(self.sections.main_tip))


def mode_shapes(sections: SectionModel, Omega: float, omegas, *, fc_bar=None,
                null_tol: float = 1e-6) -> ModeSet:
    """Null-space shapes at each root, mass-normalised, with orthonormality residuals."""
    if fc_bar is None:
        fc_bar = rms_centrifugal(sections)
    omegas = np.asarray(omegas, dtype=float)
    shapes = []
    for w in omegas:
        M = _row_scaled(assemble_boundary_matrix(sections, Omega, w, fc_bar))
        _, sv, vt = np.linalg.svd(M)
        if sv[-1] > null_tol * sv[0]:
            raise ModalError(f"omega={w:.6g} rad/s is not a root (sigma_min/sigma_max={sv[-1] / sv[0]:.2e})")
        if sv[-2] <= null_tol * sv[0]:
            raise ModalError(f"omega={w:.6g} rad/s has a degenerate null space")
        a, b = section_wavenumbers(sections.YI, sections.m, fc_bar, Omega, w)
        shape = ModeShape(coeffs=vt[-1].reshape(-1, 4), a=a, b=b, L=sections.L)
        shape = shape.scaled(1.0 / np.sqrt(mass_form(sections, shape, shape)))
        tips = (shape.tip(sections.main_tip), shape.tip(sections.aux_tip))
        if tips[int(np.argmax(np.abs(tips)))] < 0:
            shape = shape.scaled(-1.0)
        shapes.append(shape)
    n = len(shapes)
    ortho = np.array([[mass_form(sections, shapes[j], shapes[k]) for k in range(n)] for j in range(n)])
    resid = np.array([stiffness_form(sections, s, s, Omega, fc_bar) - w**2 for s, w in zip(shapes, omegas)])
    resid = resid / omegas**2
    return ModeSet(Omega=float(Omega), omegas=omegas, shapes=tuple(shapes), orthonormality=ortho,
                   frequency_residual=resid, fc_bar=np.asarray(fc_bar), sections=sections)


def modal_analysis(sections: SectionModel, Omega: float, count: int = 2, **scan) -> ModeSet:
    fc_bar = rms_centrifugal(sections)
    omegas = natural_frequencies(sections, Omega, count, fc_bar=fc_bar, **scan)
    return mode_shapes(sections, Omega, omegas, fc_bar=fc_bar)


@dataclass
class FrequencyMap:
    """Natural frequencies against drive frequency, with MAC-based tracking.

    ``mac[k, j]`` compares ordered mode ``j`` at row ``k`` with ordered mode
    ``j`` at row ``k-1``; ``branch[k, j]`` is the tracked shape identity of
    ordered mode ``j`` (0 = the shape that was lower at the first row).
    """

    Omega: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    mac: np.ndarray
    branch: np.ndarray
    aux_dominance: np.ndarray
    unstable_from: float | None = None

    @property
    def drive_hz(self) -> np.ndarray:
        return self.Omega / (2 * np.pi)

    @property
    def gap_hz(self) -> np.ndarray:
        return self.f2 - self.f1

    def veering_drive_hz(self) -> float:
        """Drive frequency of the minimum gap, refined by a parabola through the neighbours."""
        gap = self.gap_hz
        k = int(np.nanargmin(gap))
        f = self.drive_hz
        if 0 < k < len(gap) - 1:
            return float(parabola_vertex(f[k - 1:k + 2], gap[k - 1:k + 2])[0])
        return float(f[k])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh)
            out.writerow(["omega_rpm", "drive_hz", "f1_hz", "f2_hz", "mac_1", "mac_2"])
            for k in range(len(self.Omega)):
                out.writerow([f"{self.Omega[k] * 60 / (2 * np.pi):.6f}", f"{self.drive_hz[k]:.6f}",
                              f"{self.f1[k]:.8f}", f"{self.f2[k]:.8f}",
                              f"{self.mac[k, 0]:.6f}", f"{self.mac[k, 1]:.6f}"])


def parabola_vertex(x, y) -> tuple[float, float]:
    """Vertex of the parabola through three points (falls back to the middle point)."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    B = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if A == 0:
        return x1, y1
    xv = -B / (2 * A)
    if not min(x0, x2) <= xv <= max(x0, x2):
        return x1, y1
    C = y1 - A * x1**2 - B * x1
    return xv, A * xv**2 + B * xv + C


def frequency_map(sections: SectionModel, Omegas, *, truncate: bool = False, **scan) -> FrequencyMap:
    """Two lowest natural frequencies over a range of rotation speeds.

    With ``truncate`` the map stops at the first speed where a mode has gone
    unstable and records that speed in ``unstable_from`` instead of raising.
    """
    Omegas = np.asarray(Omegas, dtype=float)
    n = len(Omegas)
    f = np.zeros((n, 2))
    macs = np.ones((n, 2))
    branch = np.zeros((n, 2), dtype=int)
    dom = np.zeros((n, 2))
    prev = None
    unstable = None
    for k, Om in enumerate(Omegas):
        try:
            ms = modal_analysis(sections, Om, 2, **scan)
        except ModalError:
            if not truncate or k == 0:
                raise
            unstable, n = float(Om), k
            break
        f[k] = ms.frequencies_hz
        dom[k] = ms.aux_dominance()
        if prev is None:
            branch[k] = [0, 1]
        else:
            C = np.array([[mac(sections, p, c) for c in ms.shapes] for p in prev.shapes])
            macs[k] = np.diag(C)
            same = C[0, 0] + C[1, 1] >= C[0, 1] + C[1, 0]
            branch[k] = branch[k - 1] if same else branch[k - 1][::-1]
        prev = ms
    return FrequencyMap(Omega=Omegas[:n], f1=f[:n, 0], f2=f[:n, 1], mac=macs[:n], branch=branch[:n],
                        aux_dominance=dom[:n], unstable_from=unstable)


@dataclass(frozen=True)
class Resonance:
    """Drive frequency at which ordered mode ``mode`` (0-based) equals the drive."""

    mode: int
    drive_hz: float
    aux_dominance: float

    @property
    def main_dominant(self) -> bool:
        return self.aux_dominance < 1.0


def resonances(sections: SectionModel, f_lo: float = 1.0, f_hi: float = 25.0, df: float = 0.1,
               xtol: float = 1e-6) -> list[Resonance]:
    """Crossings of the natural-frequency loci with the line ``f_n = f_drive``.

    Scans the drive band on a ``df`` grid (stopping at any rotational
    instability) and refines each sign change by Brent's method.
    """
    from scipy.optimize import brentq

    grid = np.arange(f_lo, f_hi + df / 2, df)
    fmap = frequency_map(sections, 2 * np.pi * grid, truncate=True)
    drive = fmap.drive_hz
    out = []
    for j, fn in enumerate((fmap.f1, fmap.f2)):
        g = fn - drive
        for k in np.nonzero(np.sign(g[:-1]) != np.sign(g[1:]))[0]:
            def mismatch(fd, j=j):
                return natural_frequencies(sections, 2 * np.pi * fd, 2)[j] / (2 * np.pi) - fd
            root = brentq(mismatch, drive[k], drive[k + 1], xtol=xtol)
            ms = modal_analysis(sections, 2 * np.pi * root)
            out.append(Resonance(mode=j, drive_hz=float(root), aux_dominance=float(ms.aux_dominance()[j])))
    return sorted(out, key=lambda r: r.drive_hz)


def cantilever_matrix(YI: float, m: float, L: float, Omega: float, omega, *, Mt: float = 0.0,
                      IM: float = 0.0, fc_bar: float = 0.0) -> np.ndarray:
    """4x4 clamp/free matrix of a single rotating section with a tip mass."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    lam, T = w**2 + Omega**2, fc_bar * Omega**2
    a, b = _wavenumbers_lam(YI, m, T, lam)
    s, e = _basis(a, b, 0.0, L), _basis(a, b, L, L)
    M = np.stack([s[:, 0], s[:, 1],
                  YI * e[:, 2] - (IM * w**2)[:, None] * e[:, 1],
                  YI * e[:, 3] - T * e[:, 1] + (Mt * lam)[:, None] * e[:, 0]], axis=1)
    return M[0] if np.ndim(omega) == 0 else M


def cantilever_modes(YI: float, m: float, L: float, Omega: float = 0.0, count: int = 1, *,
                     Mt: float = 0.0, IM: float = 0.0, fc_bar: float = 0.0,
                     f_min: float = 0.1, df: float = 0.01, f_max: float = 5000.0):
    """Natural frequencies (rad/s) and mass-normalised shapes of a single clamped section."""
    def det_sign(w):
        return np.linalg.slogdet(_row_scaled(cantilever_matrix(YI, m, L, Omega, w, Mt=Mt, IM=IM,
                                                               fc_bar=fc_bar)))[0]

    roots = scan_roots(det_sign, count, f_min=f_min, df=df, f_max=f_max)
    if len(roots) < count:
        raise ModalError(f"found {len(roots)} of {count} cantilever frequencies below {f_max} Hz")
    one = SectionModel(L=[L], m=[m], YI=[YI], R=[0.0], Mt=[Mt], IM=[IM], direction=[1.0],
                       h_b=0.0, h_c=0.0, neutral_axis=0.0, g=0.0, widths=[0.0])
    shapes = []
    for w in roots:
        _, _, vt = np.linalg.svd(_row_scaled(cantilever_matrix(YI, m, L, Omega, w, Mt=Mt, IM=IM,
                                                               fc_bar=fc_bar)))
        a, b = _wavenumbers_lam(YI, m, fc_bar * Omega**2, w**2 + Omega**2)
        shape = ModeShape(coeffs=vt[-1].reshape(1, 4), a=np.array([a]), b=np.array([b]), L=np.array([L]))
        shape = shape.scaled(1.0 / np.sqrt(mass_form(one, shape, shape)))
        if shape.tip(0) < 0:
            shape = shape.scaled(-1.0)
        shapes.append(shape)
    return np.array(roots), shapes
