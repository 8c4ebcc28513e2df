"""Ideal-gas molar properties for N2, CO2, H2O, O2 and a diesel surrogate fuel.

Species data are NASA 7-coefficient polynomials (two ranges split at
1000 K). Enthalpies include the heat of formation, entropies are absolute
at the 1 bar standard state. Pressure and mixing corrections are not
applied here; the exergy module carries them through its log terms.

All evaluation functions accept a float or a numpy array of temperatures.
"""

from __future__ import annotations

import math

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ThermoRangeError, ValidationError

R_GAS = 8.314  # J/(mol K)
T_STD = 298.15  # K

# kg/mol
M_C = 0.012011
M_H = 0.001008


class Species(str, Enum):
    N2 = "N2"
    CO2 = "CO2"
    H2O = "H2O"
    O2 = "O2"


SPECIES: tuple[Species, ...] = (Species.N2, Species.CO2, Species.H2O, Species.O2)

MOLAR_MASS = {
    Species.N2: 0.028014,
    Species.CO2: 0.044009,
    Species.H2O: 0.018015,
    Species.O2: 0.031998,
}

# atoms per molecule, columns C, H, O, N
ATOMS = np.array(
    [
        [0.0, 0.0, 0.0, 2.0],  # N2
        [1.0, 0.0, 2.0, 0.0],  # CO2
        [0.0, 2.0, 1.0, 0.0],  # H2O
        [0.0, 0.0, 2.0, 0.0],  # O2
    ]
)


def as_species(s) -> Species:
    """Coerce ``s`` to a :class:`Species`; anything outside the set is rejected."""
    if isinstance(s, Species):
        return s
    try:
        return Species(s)
    except ValueError:
        raise ValidationError(
            f"unknown species {s!r}; expected one of {[x.value for x in SPECIES]}"
        ) from None


@dataclass(frozen=True)
class PropertyCurve:
    """Two-range NASA polynomial for one species.

    ``low`` applies on [t_low, t_mid], ``high`` on [t_mid, t_high]. Each is
    the 7 dimensionless coefficients a1..a7 (cp/R = a1 + a2 T + ... + a5 T^4,
    a6 and a7 the enthalpy and entropy integration constants).
    """

    species: Species
    t_low: float
    t_mid: float
    t_high: float
    low: tuple[float, ...]
    high: tuple[float, ...]
    r_gas: float = R_GAS

    def __post_init__(self):
        object.__setattr__(self, "species", as_species(self.species))
        if len(self.low) != 7 or len(self.high) != 7:
            raise ValidationError(f"{self.species.value}: need 7 coefficients per range")
        if not self.t_low < self.t_mid < self.t_high:
            raise ValidationError(
                f"{self.species.value}: ranges must satisfy t_low < t_mid < t_high"
            )
        tm = self.t_mid
        for name, fn in (("enthalpy", _h_poly), ("entropy", _s_poly)):
            lo = fn(np.asarray(self.low), tm)
            hi = fn(np.asarray(self.high), tm)
            if abs(lo - hi) > 1e-3 * max(abs(lo), abs(hi)):
                raise ValidationError(
                    f"{self.species.value}: {name} discontinuous at {tm} K "
                    f"({lo:.6g} vs {hi:.6g})"
                )

    def _coeffs(self, T: np.ndarray) -> np.ndarray:
        if np.any(T < self.t_low) or np.any(T > self.t_high) or np.any(np.isnan(T)):
            bad = T[(T < self.t_low) | (T > self.t_high) | np.isnan(T)]
            raise ThermoRangeError(self.species.value, bad.ravel()[0], self.t_low, self.t_high)
        lo = np.asarray(self.low)
        hi = np.asarray(self.high)
        return np.where((T <= self.t_mid)[..., None], lo, hi)

    def _scalar_coeffs(self, T: float):
        if not self.t_low <= T <= self.t_high:
            raise ThermoRangeError(self.species.value, T, self.t_low, self.t_high)
        return self.low if T <= self.t_mid else self.high

    def cp(self, T):
        if np.ndim(T) == 0:
            T = float(T)
            a = self._scalar_coeffs(T)
            return self.r_gas * (a[0] + T * (a[1] + T * (a[2] + T * (a[3] + T * a[4]))))
        T = np.asarray(T, dtype=float)
        a = self._coeffs(T)
        a = np.moveaxis(a, -1, 0)
        return _ret(self.r_gas * (a[0] + T * (a[1] + T * (a[2] + T * (a[3] + T * a[4])))))

    def enthalpy(self, T):
        if np.ndim(T) == 0:
            T = float(T)
            return self.r_gas * _h_poly(self._scalar_coeffs(T), T)
        T = np.asarray(T, dtype=float)
        a = np.moveaxis(self._coeffs(T), -1, 0)
        return _ret(self.r_gas * _h_poly(a, T))

    def entropy(self, T):
        if np.ndim(T) == 0:
            T = float(T)
            return self.r_gas * _s_poly(self._scalar_coeffs(T), T)
        T = np.asarray(T, dtype=float)
        a = np.moveaxis(self._coeffs(T), -1, 0)
        return _ret(self.r_gas * _s_poly(a, T))


def _h_poly(a, T):
    # h/R
    return T * (a[0] + T * (a[1] / 2 + T * (a[2] / 3 + T * (a[3] / 4 + T * a[4] / 5)))) + a[5]


def _s_poly(a, T):
    # s/R
    log = math.log if isinstance(T, float) else np.log
    return a[0] * log(T) + T * (a[1] + T * (a[2] / 2 + T * (a[3] / 3 + T * a[4] / 4))) + a[6]


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


# O2, CO2, H2O: GRI-Mech 3.0. N2: Burcat (the GRI N2 fit starts at 300 K,
# too high for sub-zero reference temperatures).
_DEFAULT_CURVES = (
    PropertyCurve(
        Species.N2, 200.0, 1000.0, 6000.0,
        (3.53100528e00, -1.23660988e-04, -5.02999433e-07, 2.43530612e-09,
         -1.40881235e-12, -1.04697628e03, 2.96747038e00),
        (2.95257637e00, 1.39690040e-03, -4.92631603e-07, 7.86010195e-11,
         -4.60755204e-15, -9.23948688e02, 5.87188762e00),
    ),
    PropertyCurve(
        Species.CO2, 200.0, 1000.0, 3500.0,
        (2.35677352e00, 8.98459677e-03, -7.12356269e-06, 2.45919022e-09,
         -1.43699548e-13, -4.83719697e04, 9.90105222e00),
        (3.85746029e00, 4.41437026e-03, -2.21481404e-06, 5.23490188e-10,
         -4.72084164e-14, -4.87591660e04, 2.27163806e00),
    ),
    PropertyCurve(
        Species.H2O, 200.0, 1000.0, 3500.0,
        (4.19864056e00, -2.03643410e-03, 6.52040211e-06, -5.48797062e-09,
         1.77197817e-12, -3.02937267e04, -8.49032208e-01),
        (3.03399249e00, 2.17691804e-03, -1.64072518e-07, -9.70419870e-11,
         1.68200992e-14, -3.00042971e04, 4.96677010e00),
    ),
    PropertyCurve(
        Species.O2, 200.0, 1000.0, 3500.0,
        (3.78245636e00, -2.99673416e-03, 9.84730201e-06, -9.68129509e-09,
         3.24372837e-12, -1.06394356e03, 3.65767573e00),
        (3.28253784e00, 1.48308754e-03, -7.57966669e-07, 2.09470555e-10,
         -2.16717794e-14, -1.08845772e03, 5.45323129e00),
    ),
)

DEFAULT_TABLE: Mapping[Species, PropertyCurve] = MappingProxyType(
    {c.species: c for c in _DEFAULT_CURVES}
)

CSV_COLUMNS = (
    ["species", "t_low", "t_mid", "t_high"]
    + [f"a{i}_low" for i in range(1, 8)]
    + [f"a{i}_high" for i in range(1, 8)]
)


def load_property_table(path: str | Path) -> Mapping[Species, PropertyCurve]:
    """Read a coefficient override file.

    One row per species with columns ``species, t_low, t_mid, t_high,
    a1_low..a7_low, a1_high..a7_high`` (temperatures in K, coefficients
    dimensionless, scaled by R to give J/mol units). Species not listed keep
    the built-in curves.
    """
    table = dict(DEFAULT_TABLE)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValidationError(f"{path}: missing columns {missing}")
        for row in reader:
            try:
                vals = [float(row[c]) for c in CSV_COLUMNS[1:]]
            except ValueError as exc:
                raise ValidationError(f"{path}: {exc}") from None
            sp = as_species(row["species"].strip())
            table[sp] = PropertyCurve(sp, vals[0], vals[1], vals[2],
                                      tuple(vals[3:10]), tuple(vals[10:17]))
    return MappingProxyType(table)


def _curve(species, table) -> PropertyCurve:
    return (table or DEFAULT_TABLE)[as_species(species)]


def heat_capacity(species, T, table=None):
    """Molar isobaric heat capacity [J/(mol K)]."""
    return _curve(species, table).cp(T)


def enthalpy(species, T, table=None):
    """Molar enthalpy including heat of formation [J/mol]."""
    return _curve(species, table).enthalpy(T)


def entropy(species, T, table=None):
    """Absolute molar entropy at the standard pressure [J/(mol K)]."""
    return _curve(species, table).entropy(T)


def gibbs(species, T, table=None):
    curve = _curve(species, table)
    T = np.asarray(T, dtype=float)
    return _ret(curve.enthalpy(T) - T * curve.entropy(T))


def mixture_cp(fractions, T, table=None):
    """Mole-fraction-weighted cp of a mixture; ``fractions`` ordered as SPECIES."""
    return sum(f * heat_capacity(s, T, table) for s, f in zip(SPECIES, fractions) if f)


def mixture_enthalpy(fractions, T, table=None):
    return sum(f * enthalpy(s, T, table) for s, f in zip(SPECIES, fractions) if f)


@dataclass(frozen=True)
class FuelThermo:
    """Lumped C_xH_y fuel.

    The formation enthalpy is fixed so that burning the fuel completely to
    CO2 and gaseous H2O at 298.15 K releases exactly ``lhv`` per kilogram.
    Entropy is a constant standard value plus a constant-cp temperature
    correction; neither is known for a real diesel blend, both are knobs.
    """

    x: float = 14.4
    y: float = 24.9
    lhv: float = 42.50e6  # J/kg
    s_std: float = 550.0  # J/(mol K) at 298.15 K
    cp: float = 450.0  # J/(mol K)
    t_min: float = 250.0
    t_max: float = 3500.0
    h_formation: float = field(init=False)

    def __post_init__(self):
        if not (self.x > 0 and self.y > 0):
            raise ValidationError(f"fuel formula needs x > 0 and y > 0, got x={self.x}, y={self.y}")
        if self.lhv <= 0:
            raise ValidationError("LHV must be positive")
        h_prod = self.x * enthalpy(Species.CO2, T_STD) + self.y / 2 * enthalpy(Species.H2O, T_STD)
        h_o2 = self.o2_demand * enthalpy(Species.O2, T_STD)
        object.__setattr__(self, "h_formation", h_prod - h_o2 + self.lhv * self.molar_mass)

    @property
    def molar_mass(self) -> float:
        """kg/mol"""
        return M_C * self.x + M_H * self.y

    @property
    def o2_demand(self) -> float:
        """mol O2 per mol fuel for complete combustion"""
        return self.x + self.y / 4

    def _check(self, T):
        T = np.asarray(T, dtype=float)
        if np.any(T < self.t_min) or np.any(T > self.t_max) or np.any(np.isnan(T)):
            bad = T[(T < self.t_min) | (T > self.t_max) | np.isnan(T)].ravel()[0]
            raise ThermoRangeError(f"C{self.x}H{self.y}", bad, self.t_min, self.t_max)
        return T

    def enthalpy(self, T):
        T = self._check(T)
        return _ret(self.h_formation + self.cp * (T - T_STD))

    def entropy(self, T):
        T = self._check(T)
        return _ret(self.s_std + self.cp * np.log(T / T_STD))


DIESEL = FuelThermo()


def fuel_gibbs(fuel: FuelThermo, T):
    """Molar Gibbs energy of the surrogate fuel [J/mol]."""
    T = np.asarray(T, dtype=float)
    return _ret(fuel.enthalpy(T) - T * fuel.entropy(T))


def reaction_gibbs_release(fuel: FuelThermo, T, table=None):
    """g_f - x g_CO2 - y/2 g_H2O + (x + y/4) g_O2 per mole of fuel [J/mol].

    Positive for an exergonic oxidation.
    """
    return (
        fuel_gibbs(fuel, T)
        - fuel.x * gibbs(Species.CO2, T, table)
        - fuel.y / 2 * gibbs(Species.H2O, T, table)
        + fuel.o2_demand * gibbs(Species.O2, T, table)
    )


def combustion_enthalpy_per_kg(fuel: FuelThermo, T=T_STD, table=None) -> float:
    """Heat released by complete combustion at T, J per kg fuel (positive)."""
    dh = (
        fuel.enthalpy(T)
        + fuel.o2_demand * enthalpy(Species.O2, T, table)
        - fuel.x * enthalpy(Species.CO2, T, table)
        - fuel.y / 2 * enthalpy(Species.H2O, T, table)
    )
    return float(dh) / fuel.molar_mass


def atom_counts(moles) -> np.ndarray:
    """C, H, O, N atom totals of a species-mole vector ordered as SPECIES."""
    return np.asarray(moles, dtype=float) @ ATOMS

