"""Detailed-balance efficiency of split-spectrum and multi-junction solar cell stacks.

Photon energies are in eV, current densities in A/m^2 and powers in W/m^2.
Each cell converts the photons of its own band ``[E_lo, E_hi)`` and loses
carriers only to radiative recombination, modelled as generalized black-body
emission above its gap.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence, Union

import numpy as np
from scipy import constants
from scipy.special import spence, zeta

from .objective import ObjectiveSpec

HC_EV_NM = 1239.8419  # photon energy in eV times wavelength in nm
Q = constants.e
E_MAX = 10.0  # upper limit of the emission integral, eV
GAP_MARGIN = 1e-3


class DomainError(ValueError):
    """Input outside the physical domain of the model."""


class ParseError(ValueError):
    """Malformed spectrum file."""


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    """Photon flux per unit energy (photons s^-1 m^-2 eV^-1) on an ascending energy grid."""

    energy_grid: np.ndarray
    photon_flux: np.ndarray
    p_in: float
    _cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        e = np.array(self.energy_grid, dtype=float)
        phi = np.array(self.photon_flux, dtype=float)
        if e.ndim != 1 or e.shape != phi.shape or e.size < 2:
            raise DomainError("energy grid and flux must be 1-D arrays of equal length >= 2")
        if not np.all(np.diff(e) > 0):
            raise DomainError("energy grid must be strictly increasing")
        if np.any(phi < 0):
            raise DomainError("photon flux must be non-negative")
        if not self.p_in > 0:
            raise DomainError("incident power must be positive")
        cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (phi[1:] + phi[:-1]) * np.diff(e))])
        for name, arr in (("energy_grid", e), ("photon_flux", phi), ("_cumulative", cumulative)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def e_min(self) -> float:
        return float(self.energy_grid[0])

    @property
    def e_max(self) -> float:
        return float(self.energy_grid[-1])

    def photons_below(self, e: float) -> float:
        """Trapezoidal photon count between the grid's lower edge and ``e``."""
        grid, phi = self.energy_grid, self.photon_flux
        if e <= grid[0]:
            return 0.0
        if e >= grid[-1]:
            return float(self._cumulative[-1])
        k = int(np.searchsorted(grid, e, side="right")) - 1
        t = (e - grid[k]) / (grid[k + 1] - grid[k])
        phi_e = phi[k] + t * (phi[k + 1] - phi[k])
        return float(self._cumulative[k] + 0.5 * (phi[k] + phi_e) * (e - grid[k]))

    def energy_at_photons(self, count: float) -> float:
        """Inverse of :meth:`photons_below` (piecewise-quadratic, solved exactly)."""
        total = self._cumulative[-1]
        if not 0 <= count <= total:
            raise DomainError("photon count outside the table's range")
        k = int(np.searchsorted(self._cumulative, count, side="right")) - 1
        k = min(k, len(self.energy_grid) - 2)
        rest = count - self._cumulative[k]
        e0, e1 = self.energy_grid[k], self.energy_grid[k + 1]
        p0, p1 = self.photon_flux[k], self.photon_flux[k + 1]
        slope = (p1 - p0) / (e1 - e0)
        # rest = p0*x + slope*x^2/2
        if abs(slope) < 1e-300:
            x = rest / p0 if p0 > 0 else 0.0
        else:
            disc = max(p0 * p0 + 2 * slope * rest, 0.0)
            x = 2 * rest / (p0 + math.sqrt(disc)) if p0 + math.sqrt(disc) > 0 else 0.0
        return float(min(e0 + x, e1))


def _parse_rows(lines):
    rows = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            values = [float(p) for p in parts]
        except ValueError:
            if not rows:
                continue  # header line
            raise ParseError(f"line {lineno}: not numeric: {line!r}") from None
        if len(values) < 2:
            raise ParseError(f"line {lineno}: expected wavelength and irradiance")
        rows.append(values[:2])
    if not rows:
        raise ParseError("no data rows")
    return np.array(rows)


def load_spectrum(path) -> SpectrumTable:
    """Read a ``wavelength_nm,irradiance_W_m2_nm`` CSV into a photon-flux table.

    ``p_in`` is the trapezoid of irradiance over the wavelength grid. Each row
    becomes ``E = 1239.8419 / lambda`` with flux ``I * |d lambda / dE| / (q E)``.
    """
    with open(path, encoding="utf-8") as fh:
        data = _parse_rows(fh)
    if len(data) < 2:
        raise ParseError("at least two rows are required")
    lam, irr = data[:, 0], data[:, 1]
    if np.any(lam <= 0):
        raise DomainError("wavelengths must be positive")
    if np.any(irr < 0):
        raise DomainError("irradiance must be non-negative")
    order = np.argsort(lam, kind="stable")
    lam, irr = lam[order], irr[order]
    if np.any(np.diff(lam) == 0):
        raise ParseError("duplicate wavelength")
    p_in = float(np.trapezoid(irr, lam))
    energy = HC_EV_NM / lam
    flux = irr * HC_EV_NM / energy**2 / (energy * Q)
    return SpectrumTable(energy[::-1], flux[::-1], p_in)


def default_spectrum_path() -> str:
    return str(resources.files("nmcs") / "data" / "am15g.csv")


def flux_integral(table: SpectrumTable, e_lo: float, e_hi: float = math.inf) -> float:
    """Photocurrent ``q * integral phi(E) dE`` over ``[e_lo, e_hi]`` in A/m^2."""
    if not e_lo > 0:
        raise DomainError("e_lo must be positive")
    if e_hi < e_lo:
        raise DomainError("e_hi must not be below e_lo")
    hi = table.e_max if math.isinf(e_hi) else e_hi
    if hi <= e_lo:
        return 0.0
    return Q * (table.photons_below(hi) - table.photons_below(e_lo))


@dataclass(frozen=True)
class RadiativeModel:
    temperature: float = 300.0
    # None -> 2*pi*q / (h^3 c^2) with h in eV s, so E in eV gives A/m^2
    prefactor: Optional[float] = None
    ideality: float = 1.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise DomainError("temperature must be positive")
        if self.prefactor is not None and not self.prefactor > 0:
            raise DomainError("prefactor must be positive")
        if not 0 < self.ideality <= 1:
            raise DomainError("ideality must lie in (0, 1]")
        if self.prefactor is None:
            h_ev = constants.h / constants.e
            object.__setattr__(
                self, "prefactor", 2 * math.pi * Q / (h_ev**3 * constants.c**2)
            )

    @property
    def kT(self) -> float:
        return constants.k * self.temperature / constants.e


def _check_voltage(model: RadiativeModel, e_lo: float, voltage: float) -> float:
    if not e_lo > 0:
        raise DomainError("gap must be positive")
    x0 = (e_lo - model.ideality * voltage) / model.kT
    if not x0 > 0:
        raise DomainError("ideality * V must stay below the gap")
    return x0


_ZETA_NEG = zeta(3.0 - np.arange(3, 40))  # zeta(3 - k) for k = 3..39
_FACT = np.array([math.factorial(k) for k in range(3, 40)], dtype=float)


def _polylogs(x: float) -> tuple[float, float, float, float]:
    """``Li_s(exp(-x))`` for s = 0..3 and ``0 < x < 1`` (near the Bose divergence)."""
    li0 = 1.0 / math.expm1(x)
    li1 = -math.log(-math.expm1(-x))
    li2 = float(spence(-math.expm1(-x)))
    mu = -x
    # Li_3(e^mu) = zeta(3) + zeta(2) mu + mu^2/2 (3/2 - ln x) + sum_{k>=3} zeta(3-k) mu^k / k!
    tail = float(np.sum(_ZETA_NEG * mu ** np.arange(3, 40) / _FACT))
    li3 = zeta(3.0) + zeta(2.0) * mu + 0.5 * mu * mu * (1.5 - math.log(x)) + tail
    return li0, li1, li2, float(li3)


def _jr_series(model: RadiativeModel, e_lo: float, x0: float) -> float:
    # sum_m e^{-m x0} (kT/m) (E^2 + 2 E kT/m + 2 (kT/m)^2), exact for the integral to infinity
    kT = model.kT
    if x0 >= 1.0:
        total = 0.0
        ratio = math.exp(-x0)
        decay = 1.0
        for m in range(1, 400):
            decay *= ratio
            a = kT / m
            term = decay * a * (e_lo * e_lo + 2 * e_lo * a + 2 * a * a)
            total += term
            if term <= 1e-17 * total:
                break
        return model.prefactor * total
    _, li1, li2, li3 = _polylogs(x0)
    return model.prefactor * kT * (e_lo * e_lo * li1 + 2 * e_lo * kT * li2 + 2 * kT * kT * li3)


def _simpson_adaptive(g, a: float, b: float, rtol: float) -> float:
    def simpson(lo, f_lo, hi, f_hi):
        mid = 0.5 * (lo + hi)
        f_mid = g(mid)
        return mid, f_mid, (hi - lo) / 6 * (f_lo + 4 * f_mid + f_hi)

    # coarse pass sets the absolute tolerance
    edges = np.linspace(a, b, 65)
    f_edges = [g(x) for x in edges]
    pieces = []
    for i in range(64):
        mid, f_mid, whole = simpson(edges[i], f_edges[i], edges[i + 1], f_edges[i + 1])
        pieces.append((edges[i], f_edges[i], mid, f_mid, edges[i + 1], f_edges[i + 1], whole, 0))
    estimate = abs(sum(p[6] for p in pieces))
    atol = rtol * estimate if estimate > 0 else 1e-300
    total = 0.0
    stack = pieces
    while stack:
        lo, f_lo, mid, f_mid, hi, f_hi, whole, depth = stack.pop()
        _, _, left = simpson(lo, f_lo, mid, f_mid)
        _, _, right = simpson(mid, f_mid, hi, f_hi)
        err = left + right - whole
        scale = (hi - lo) / (b - a)
        if abs(err) <= 15 * atol * scale or depth >= 50:
            total += left + right + err / 15
        else:
            lm, f_lm, _ = simpson(lo, f_lo, mid, f_mid)
            rm, f_rm, _ = simpson(mid, f_mid, hi, f_hi)
            stack.append((lo, f_lo, lm, f_lm, mid, f_mid, left, depth + 1))
            stack.append((mid, f_mid, rm, f_rm, hi, f_hi, right, depth + 1))
    return total


def radiative_current(
    model: RadiativeModel, e_lo: float, voltage: float, method: str = "series"
) -> float:
    """Radiative recombination current ``a * int_{e_lo}^{E_max} E^2 / (exp((E - gamma V)/kT) - 1) dE``.

    ``method="simpson"`` integrates adaptively to relative tolerance 1e-9;
    ``"series"`` (the default) sums the equivalent closed-form Bose series,
    which agrees to well below that tolerance and is orders of magnitude faster.
    """
    x0 = _check_voltage(model, e_lo, voltage)
    if e_lo >= E_MAX:
        return 0.0
    if method == "series":
        return _jr_series(model, e_lo, x0)
    if method != "simpson":
        raise ValueError(f"unknown method {method!r}")
    kT, mu = model.kT, model.ideality * voltage

    def g(e):
        return e * e / math.expm1((e - mu) / kT)

    # the integrand decays on the scale kT, so the bulk of it sits right above the gap
    split = min(e_lo + 60 * kT, E_MAX)
    value = _simpson_adaptive(g, e_lo, split, 1e-10)
    if split < E_MAX:
        value += _simpson_adaptive(g, split, E_MAX, 1e-10)
    return model.prefactor * value


def _jr_log_slope(model: RadiativeModel, e_lo: float, x0: float) -> float:
    # d ln J_r / dV; each series term carries a factor m gamma / kT
    kT = model.kT
    if x0 >= 1.0:
        num = den = 0.0
        for m in range(1, 400):
            a = kT / m
            term = math.exp(-m * x0) * a * (e_lo * e_lo + 2 * e_lo * a + 2 * a * a)
            num += m * term
            den += term
            if term <= 1e-17 * den:
                break
        return model.ideality / kT * num / den
    li0, li1, li2, li3 = _polylogs(x0)
    num = e_lo * e_lo * li0 + 2 * e_lo * kT * li1 + 2 * kT * kT * li2
    den = e_lo * e_lo * li1 + 2 * e_lo * kT * li2 + 2 * kT * kT * li3
    return model.ideality / kT * num / den


def voltage_for_current(model: RadiativeModel, e_lo: float, j_rad: float, tol: float = 1e-12) -> float:
    """Voltage at which the radiative current equals ``j_rad > 0``.

    The voltage may be negative (reverse bias). ``ln J_r`` is almost linear in
    ``V``, so a Newton iteration on it from the Boltzmann estimate converges in
    a couple of steps; it is safeguarded by bisection.
    """
    if not j_rad > 0:
        raise DomainError("target current must be positive")
    kT, gamma = model.kT, model.ideality
    first = model.prefactor * kT * (e_lo * e_lo + 2 * e_lo * kT + 2 * kT * kT)
    # Boltzmann estimate: j = first * exp(-(e_lo - gamma V)/kT)
    v = (e_lo + kT * math.log(j_rad / first)) / gamma
    hi = e_lo / gamma
    v = min(v, hi - 1e-3 * kT / gamma)
    lo = -math.inf
    target = math.log(j_rad)
    for _ in range(100):
        x0 = (e_lo - gamma * v) / kT
        resid = math.log(_jr_series(model, e_lo, x0)) - target
        if resid > 0:
            hi = v
        else:
            lo = v
        step = resid / _jr_log_slope(model, e_lo, x0)
        v_new = v - step
        if not lo < v_new < hi:
            v_new = 0.5 * (lo + hi) if math.isfinite(lo) else hi - 2 * (hi - v)
        if abs(v_new - v) <= tol * max(1.0, abs(v)):
            v = v_new
            break
        v = v_new
    x0 = (e_lo - gamma * v) / kT
    if not x0 > 0 or abs(math.log(_jr_series(model, e_lo, x0)) - target) > 1e-6:
        # J_r diverges only logarithmically at the gap, so huge targets are out of reach
        raise DomainError(f"radiative current {j_rad:g} A/m^2 unreachable below the gap {e_lo} eV")
    return v


@dataclass(frozen=True)
class StackSpec:
    n_cells: int
    topology: str  # "ss" (split spectrum) or "mj" (series multi-junction)
    spectrum: SpectrumTable
    model: RadiativeModel = field(default_factory=RadiativeModel)
    gap_bounds: tuple = (0.0, 4.0)

    def __post_init__(self):
        if self.n_cells < 1:
            raise DomainError("n_cells must be at least 1")
        topology = self.topology.lower()
        if topology not in ("ss", "mj"):
            raise DomainError(f"unknown topology {self.topology!r}")
        object.__setattr__(self, "topology", topology)


@dataclass(frozen=True)
class CellOperatingPoint:
    gap_interval: tuple
    voltage: float
    j_gen: float
    j_rad: float
    j_net: float
    efficiency_share: float


def _golden_max(fn, a: float, b: float, tol: float) -> tuple[float, float]:
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


_SERIES_TERMS = 40


def _series_coefficients(model: RadiativeModel, e: np.ndarray) -> np.ndarray:
    # c[i, m-1] = prefactor (kT/m) (E_i^2 + 2 E_i kT/m + 2 (kT/m)^2)
    a = model.kT / np.arange(1, _SERIES_TERMS + 1)
    e = e[:, None]
    return model.prefactor * a * (e * e + 2 * e * a + 2 * a * a)


def _jr_many(model: RadiativeModel, e: np.ndarray, v: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Radiative currents of several cells; falls back to the scalar series near the gap."""
    x0 = (e - model.ideality * v) / model.kT
    if np.all(x0 >= 1.0):
        powers = np.exp(-np.outer(x0, np.arange(1, _SERIES_TERMS + 1)))
        return np.sum(coef * powers, axis=1)
    return np.array([_jr_series(model, ei, xi) for ei, xi in zip(e, x0)])


def _voltages_for_currents(model: RadiativeModel, e: np.ndarray, j_rad: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Vectorized :func:`voltage_for_current`.

    With ``y = exp(-x0)`` the series reads ``sum_m c_m y^m = j``; for small
    ``y`` the fixed point ``y = j / sum_m c_m y^(m-1)`` contracts quickly.
    Cells too close to the gap for that use the scalar Newton solver.
    """
    y = j_rad / coef[:, 0]
    exponents = np.arange(_SERIES_TERMS)
    for _ in range(60):
        poly = np.sum(coef * np.power.outer(np.minimum(y, 1.0), exponents), axis=1)
        y_new = j_rad / poly
        done = np.abs(y_new - y) <= 1e-15 * y_new
        y = y_new
        if np.all(done | (y > 0.05)):
            break
    v = (e + model.kT * np.log(y)) / model.ideality
    slow = ~(y <= 0.05)
    for i in np.flatnonzero(slow):
        v[i] = voltage_for_current(model, float(e[i]), float(j_rad[i]))
    return v


def _cell_powers(model: RadiativeModel, e: np.ndarray, j_gen: np.ndarray) -> np.ndarray:
    """Maximum power of each cell, by a golden-section search run in lockstep over cells."""
    powers = np.zeros(len(e))
    coef = _series_coefficients(model, e)
    j_dark = _jr_many(model, e, np.zeros(len(e)), coef)
    live = j_gen > j_dark
    if not np.any(live):
        return powers
    e, j_gen, coef = e[live], j_gen[live], coef[live]
    # V * J(V) is strictly concave and negative beyond open circuit
    a = np.zeros(len(e))
    b = _voltages_for_currents(model, e, j_gen, coef)

    def power(v):
        return v * (j_gen - _jr_many(model, e, v, coef))

    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = power(c), power(d)
    while np.max(b - a) > 1e-7:
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = np.where(left, b - invphi * (b - a), d)
        d_new = np.where(left, c, a + invphi * (b - a))
        fresh = np.where(left, c_new, d_new)
        f_fresh = power(fresh)
        fc, fd = np.where(left, f_fresh, fd), np.where(left, fc, f_fresh)
        c, d = c_new, d_new
    powers[live] = np.maximum(power(0.5 * (a + b)), 0.0)
    return powers


def _cell_power(model: RadiativeModel, e_lo: float, j_gen: float) -> tuple[float, float]:
    if j_gen <= 0:
        return 0.0, 0.0
    kT, gamma = model.kT, model.ideality

    def power(v):
        return v * (j_gen - _jr_series(model, e_lo, (e_lo - gamma * v) / kT))

    if j_gen <= _jr_series(model, e_lo, e_lo / kT):
        return 0.0, 0.0
    v_oc = voltage_for_current(model, e_lo, j_gen)
    v, p = _golden_max(power, 0.0, v_oc, 1e-7)
    return (v, p) if p > 0 else (0.0, 0.0)


def optimal_cell_power(stack: StackSpec, e_lo: float, e_hi: float = math.inf) -> tuple[float, float]:
    """Maximum power point ``(V, P)`` of one cell absorbing ``[e_lo, e_hi)``."""
    if not e_lo < e_hi:
        raise DomainError("e_lo must be below e_hi")
    _check_voltage(stack.model, e_lo, 0.0)
    return _cell_power(stack.model, e_lo, flux_integral(stack.spectrum, e_lo, e_hi))


def _checked_gaps(stack: StackSpec, gaps) -> np.ndarray:
    g = np.sort(np.atleast_1d(np.asarray(gaps, dtype=float)))
    lo, hi = stack.gap_bounds
    if g.size == 0 or not np.all((g > lo) & (g < hi)):
        raise DomainError(f"gaps must lie in ({lo}, {hi}): {gaps}")
    return g


def _band_currents(stack: StackSpec, g: np.ndarray) -> np.ndarray:
    table = stack.spectrum
    below = np.array([table.photons_below(e) for e in g] + [table.photons_below(table.e_max)])
    return Q * np.diff(below)


def ss_operating_points(stack: StackSpec, gaps) -> list[CellOperatingPoint]:
    g = _checked_gaps(stack, gaps)
    j_gen = _band_currents(stack, g)
    upper = list(g[1:]) + [math.inf]
    points = []
    for e_lo, e_hi, jg in zip(g, upper, j_gen):
        v, p = _cell_power(stack.model, e_lo, jg)
        jr = radiative_current(stack.model, e_lo, v)
        points.append(CellOperatingPoint((e_lo, e_hi), v, jg, jr, jg - jr, p / stack.spectrum.p_in))
    return points


def ss_efficiency(stack: StackSpec, gaps) -> float:
    """Split spectrum: every cell runs at its own maximum power point."""
    g = _checked_gaps(stack, gaps)
    j_gen = _band_currents(stack, g)
    return float(np.sum(_cell_powers(stack.model, g, j_gen))) / stack.spectrum.p_in


def mj_efficiency(stack: StackSpec, gaps) -> float:
    """Series stack: all cells carry one current ``J``; maximize ``J * sum V_i(J)``."""
    g = _checked_gaps(stack, gaps)
    j_gen = _band_currents(stack, g)
    j_max = float(j_gen.min())
    if j_max <= 0:
        return 0.0
    model = stack.model
    coef = _series_coefficients(model, g)

    def power(j):
        return j * float(np.sum(_voltages_for_currents(model, g, j_gen - j, coef)))

    _, p = _golden_max(power, 0.0, j_max, 1e-9 * j_max)
    return max(p, 0.0) / stack.spectrum.p_in


def efficiency(stack: StackSpec, gaps) -> float:
    return ss_efficiency(stack, gaps) if stack.topology == "ss" else mj_efficiency(stack, gaps)


def informed_starts(stack: StackSpec, n: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Two physically motivated gap vectors.

    A places the gaps at the ``k/(n+1)`` quantiles of the cumulative photon
    count, so every band (the top one included) collects the same
    photocurrent. B spaces the gaps evenly over [0.5, 3.5] eV at the centres
    of ``n`` equal slots.
    """
    n = stack.n_cells if n is None else n
    if n < 1:
        raise DomainError("n must be at least 1")
    table = stack.spectrum
    total = table.photons_below(table.e_max)
    lo, hi = stack.gap_bounds
    a = np.array([table.energy_at_photons(total * k / (n + 1)) for k in range(1, n + 1)])
    a = np.clip(a, lo + GAP_MARGIN, hi - GAP_MARGIN)
    b = 0.5 + 3.0 * (np.arange(n) + 0.5) / n
    return a, b


def objective_for(stack: StackSpec) -> ObjectiveSpec:
    """Minimization objective ``1 - eta`` on ``(1e-3, 4 - 1e-3)^n``."""
    lo, hi = stack.gap_bounds

    def evaluate(gaps):
        return 1.0 - efficiency(stack, gaps)

    return ObjectiveSpec(
        f"{stack.topology.upper()}-{stack.n_cells}",
        stack.n_cells,
        lo + GAP_MARGIN,
        hi - GAP_MARGIN,
        evaluate,
    )


def make_stack(n_cells: int, topology: str, spectrum: Union[SpectrumTable, str, None] = None, **kw) -> StackSpec:
    if spectrum is None:
        spectrum = os.environ.get("SPECTRUM_PATH") or default_spectrum_path()
    if not isinstance(spectrum, SpectrumTable):
        spectrum = load_spectrum(spectrum)
    return StackSpec(n_cells, topology, spectrum, **kw)
