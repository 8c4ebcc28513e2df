"""Lean C_xH_y combustion bookkeeping with exhaust gas recirculation.

Compositions are mole-fraction 4-vectors over (N2, CO2, H2O, O2). The
ambient "others" fraction (mostly argon) is folded into N2.

Per mole of fuel the fresh air carries ``lam * (x + y/4)`` mol O2, i.e.
``lam * (x + y/4) / f_O2,0`` mol of ambient mixture. Recirculation is
mixed on a molar basis: of the total trapped charge, a fraction ``x_egr``
is cylinder exhaust and the rest is fresh air.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, RichMixtureError, ValidationError
from .thermo import DIESEL, MOLAR_MASS, SPECIES, FuelThermo, R_GAS, atom_counts

N2_PER_O2 = 3.76
R_AIR = 287.0  # J/(kg K)
SMOKE_LIMIT = 1.2
EGR_MAX = 0.6

_I_N2, _I_CO2, _I_H2O, _I_O2 = range(4)


class SmokeLimitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Composition:
    """Mole fractions of N2, CO2, H2O, O2."""

    N2: float
    CO2: float
    H2O: float
    O2: float

    def __post_init__(self):
        arr = self.as_array()
        if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
            raise ValidationError(f"mole fractions must lie in [0, 1]: {arr}")
        if abs(arr.sum() - 1.0) > 1e-12:
            raise ValidationError(f"mole fractions sum to {arr.sum()!r}, not 1")

    @classmethod
    def from_moles(cls, moles) -> Composition:
        n = np.asarray(moles, dtype=float)
        total = n.sum()
        if total <= 0:
            raise ValidationError("cannot normalise an empty mixture")
        f = n / total
        # push the rounding residue into the largest entry so the sum is 1
        f[np.argmax(f)] += 1.0 - f.sum()
        return cls(*(float(v) for v in f))

    def as_array(self) -> np.ndarray:
        return np.array([self.N2, self.CO2, self.H2O, self.O2])

    def __getitem__(self, species) -> float:
        return getattr(self, getattr(species, "value", species))

    @property
    def molar_mass(self) -> float:
        return float(self.as_array() @ np.array([MOLAR_MASS[s] for s in SPECIES]))


# humid ambient air, with the 0.0092 of other gases folded into N2
HUMID_AMBIENT = Composition(N2=0.7659, CO2=0.0003, H2O=0.0303, O2=0.2035)
DRY_AIR = Composition(N2=N2_PER_O2 / (1 + N2_PER_O2), CO2=0.0, H2O=0.0, O2=1 / (1 + N2_PER_O2))


@dataclass(frozen=True)
class ReferenceState:
    T0: float = 293.15  # K
    P0: float = 1e5  # Pa
    composition: Composition = HUMID_AMBIENT
    r_gas: float = R_GAS

    def __post_init__(self):
        if not (self.T0 > 0 and self.P0 > 0):
            raise ValidationError(f"reference state needs T0 > 0 and P0 > 0, got {self.T0}, {self.P0}")

    def with_T0(self, T0: float) -> ReferenceState:
        return ReferenceState(T0, self.P0, self.composition, self.r_gas)


@dataclass(frozen=True)
class IntakeState:
    T_I: float = 323.15  # K
    P_I: float = 1e5  # Pa

    def __post_init__(self):
        if not (self.T_I > 0 and self.P_I > 0):
            raise ValidationError(f"intake state needs T_I > 0 and P_I > 0, got {self.T_I}, {self.P_I}")


@dataclass(frozen=True)
class Stoichiometry:
    """Species moles per mole of fuel in the trapped charge (``nu_in``) and
    in the cylinder exhaust (``nu_out``)."""

    nu_in: np.ndarray
    nu_out: np.ndarray
    lam: float
    x_egr: float

    def __post_init__(self):
        if self.lam < 1:
            raise RichMixtureError(f"lambda = {self.lam} < 1")
        if not 0 <= self.x_egr <= EGR_MAX:
            raise ValidationError(f"x_EGR = {self.x_egr} outside [0, {EGR_MAX}]")

    def atom_imbalance(self, fuel: FuelThermo) -> np.ndarray:
        """Relative C, H, O, N residual of charge + fuel -> exhaust."""
        lhs = atom_counts(self.nu_in) + np.array([fuel.x, fuel.y, 0.0, 0.0])
        rhs = atom_counts(self.nu_out)
        return np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)


@dataclass(frozen=True)
class FlowState:
    m_fuel: float  # kg/s
    n_fuel: float  # mol/s
    n_fresh: float  # mol/s, fresh ambient air
    n_intake: float  # mol/s, fresh air + EGR
    n_exhaust: float  # mol/s, leaving the cylinders
    f_intake: Composition
    f_exhaust: Composition
    stoich: Stoichiometry

    def __post_init__(self):
        for name in ("m_fuel", "n_fuel", "n_fresh", "n_intake", "n_exhaust"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")


def stoich_air_fuel_ratio(fuel: FuelThermo = DIESEL) -> float:
    """Stoichiometric air/fuel mass ratio for dry air (O2 + 3.76 N2)."""
    m_air = (MOLAR_MASS[SPECIES[3]] + N2_PER_O2 * MOLAR_MASS[SPECIES[0]])
    return fuel.o2_demand * m_air / fuel.molar_mass


def air_mass_flow(omega, intake: IntakeState, v_disp: float, eta_v: float = 0.90,
                  boost_ratio: float = 1.0, r_air: float = R_AIR):
    """Speed-density fresh air mass flow of a four-stroke engine [kg/s].

    ``boost_ratio`` multiplies the intake pressure for breathing purposes
    (charge-air pressure after the compressor).
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise DomainError(f"engine speed must be non-negative, got {omega}")
    rho = boost_ratio * intake.P_I / (r_air * intake.T_I)
    out = eta_v * rho * v_disp * omega / (4 * np.pi)
    return float(out) if out.ndim == 0 else out


def air_fuel_lambda(air_flow: float, fuel_flow: float, fuel: FuelThermo = DIESEL,
                    warn: bool = True) -> float:
    """Air-fuel equivalence ratio. Raises below 1, warns below the smoke limit."""
    if fuel_flow <= 0:
        raise DomainError("lambda undefined for zero fuel flow")
    lam = air_flow / (fuel_flow * stoich_air_fuel_ratio(fuel))
    if lam < 1:
        raise RichMixtureError(
            f"lambda = {lam:.3f} < 1: complete combustion assumption violated"
        )
    if warn and lam < SMOKE_LIMIT:
        warnings.warn(f"lambda = {lam:.3f} below smoke limit {SMOKE_LIMIT}", SmokeLimitWarning, stacklevel=2)
    return lam


def _fuel_delta(fuel: FuelThermo) -> np.ndarray:
    # species change per mole fuel burnt: N2, CO2, H2O, O2
    return np.array([0.0, fuel.x, fuel.y / 2, -fuel.o2_demand])


def _burn(charge: np.ndarray, fuel: FuelThermo) -> np.ndarray:
    """Charge moles plus fuel products; round-off below zero (oxygen at
    lambda = 1) is snapped to exactly zero."""
    out = charge + _fuel_delta(fuel)
    tiny = 1e-13 * charge.sum()
    if np.any(out < -tiny):
        raise RichMixtureError("not enough oxygen in the charge for complete combustion")
    out[np.abs(out) <= tiny] = 0.0
    return out


def _fresh_moles(lam: float, fuel: FuelThermo, ambient: Composition) -> np.ndarray:
    f0 = ambient.as_array()
    if f0[_I_O2] <= 0:
        raise ValidationError("ambient composition contains no oxygen")
    return lam * fuel.o2_demand / f0[_I_O2] * f0


def exhaust_composition(lam: float, fuel: FuelThermo = DIESEL,
                        ambient: Composition = HUMID_AMBIENT) -> Composition:
    """Products of complete lean combustion in fresh air (no recirculation)."""
    if lam < 1:
        raise RichMixtureError(f"lambda = {lam} < 1")
    return Composition.from_moles(_burn(_fresh_moles(lam, fuel, ambient), fuel))


def _check_egr(x_egr: float):
    if not 0 <= x_egr <= EGR_MAX:
        raise ValidationError(f"x_EGR = {x_egr} outside [0, {EGR_MAX}]")


def egr_fixed_point(lam: float, x_egr: float, ambient: Composition = HUMID_AMBIENT,
                    fuel: FuelThermo = DIESEL, tol: float = 1e-12, max_iter: int = 200):
    """Steady-state intake and exhaust compositions of the EGR loop.

    Successive substitution on f_I = (1 - x_egr) f_0 + x_egr f_E, where f_E
    is the burnt charge f_I plus the fuel products. Returns ``(f_I, f_E)``.
    """
    if lam < 1:
        raise RichMixtureError(f"lambda = {lam} < 1")
    _check_egr(x_egr)
    f0 = ambient.as_array()
    if x_egr == 0:
        return ambient, exhaust_composition(lam, fuel, ambient)
    n_charge = _fresh_moles(lam, fuel, ambient).sum() / (1 - x_egr)

    def exhaust_of(f_in):
        n = _burn(n_charge * f_in, fuel)
        return n / n.sum()

    f_in = f0.copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        new = (1 - x_egr) * f0 + x_egr * exhaust_of(f_in)
        residual = float(np.max(np.abs(new - f_in)))
        f_in = new
        if residual < tol:
            break
    else:
        raise ConvergenceError("EGR composition loop did not converge", residual, max_iter)
    f_i = Composition.from_moles(f_in)
    f_e = Composition.from_moles(_burn(n_charge * f_i.as_array(), fuel))
    return f_i, f_e


def stoichiometry(lam: float, x_egr: float, ambient: Composition = HUMID_AMBIENT,
                  fuel: FuelThermo = DIESEL) -> tuple[Stoichiometry, Composition, Composition]:
    f_i, f_e = egr_fixed_point(lam, x_egr, ambient, fuel)
    n_charge = _fresh_moles(lam, fuel, ambient).sum() / (1 - x_egr)
    nu_in = n_charge * f_i.as_array()
    nu_out = _burn(nu_in, fuel)
    return Stoichiometry(nu_in, nu_out, lam, x_egr), f_i, f_e


def molar_flows(m_fuel: float, lam: float, x_egr: float, fuel: FuelThermo = DIESEL,
                ambient: Composition = HUMID_AMBIENT) -> FlowState:
    """Molar flow bookkeeping for a fuel mass flow at given lambda and EGR rate."""
    if m_fuel < 0:
        raise ValidationError(f"fuel flow must be non-negative, got {m_fuel}")
    st, f_i, f_e = stoichiometry(lam, x_egr, ambient, fuel)
    n_f = m_fuel / fuel.molar_mass
    return FlowState(
        m_fuel=m_fuel,
        n_fuel=n_f,
        n_fresh=n_f * _fresh_moles(lam, fuel, ambient).sum(),
        n_intake=n_f * st.nu_in.sum(),
        n_exhaust=n_f * st.nu_out.sum(),
        f_intake=f_i,
        f_exhaust=f_e,
        stoich=st,
    )
