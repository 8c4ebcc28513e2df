"""Mean-value exergy balance of the engine.

Eight rate terms, all in W, signed as flows into the engine control
volume: fuel and intake are inputs (>= 0), work, heat and exhaust leave,
combustion and friction are destruction, and ``others`` closes the
steady-state balance so that the eight terms sum to zero.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np

from .engine import DEFAULT_ENGINE, EngineSpec, OperatingPoint
from .errors import DomainError, ValidationError
from .mixture import Composition, FlowState, ReferenceState
from .thermo import (
    DEFAULT_TABLE,
    DIESEL,
    SPECIES,
    FuelThermo,
    Species,
    as_species,
    enthalpy,
    entropy,
    reaction_gibbs_release,
)

TERMS = ("fuel", "intake", "work", "heat", "exhaust", "combustion", "friction", "others")
OUTPUT_TERMS = ("work", "heat", "exhaust", "combustion", "friction", "others")
OTHERS_WARN_PCT = 10.0


class OthersWarning(UserWarning):
    """The lumped residual term is outside the usual literature band."""


def psi_physical(species, T, env: ReferenceState, table=DEFAULT_TABLE):
    """Physical exergy of a species at T relative to the reference temperature [J/mol]."""
    sp = as_species(species)
    T0 = env.T0
    return (enthalpy(sp, T, table) - T0 * entropy(sp, T, table)) - (
        enthalpy(sp, T0, table) - T0 * entropy(sp, T0, table)
    )


def psi_chemical(f, f0, env: ReferenceState):
    """Chemical exergy R T0 ln(f / f0) [J/mol]."""
    if np.ndim(f) == 0 and np.ndim(f0) == 0:
        if not (f > 0 and f0 > 0):
            raise DomainError(f"chemical exergy needs positive mole fractions, got f={f}, f0={f0}")
        return env.r_gas * env.T0 * math.log(f / f0)
    f, f0 = np.asarray(f, dtype=float), np.asarray(f0, dtype=float)
    if np.any(f <= 0) or np.any(f0 <= 0):
        raise DomainError(f"chemical exergy needs positive mole fractions, got f={f}, f0={f0}")
    return env.r_gas * env.T0 * np.log(f / f0)


def fuel_exergy_multiplier(fuel: FuelThermo = DIESEL) -> float:
    """Chemical exergy over LHV for a C_xH_y fuel."""
    return 1.04224 + 0.011925 * fuel.x / fuel.y - 0.042 / fuel.x


def x_fuel(m_fuel: float, fuel: FuelThermo = DIESEL) -> float:
    if m_fuel < 0:
        raise ValidationError(f"fuel flow must be non-negative, got {m_fuel}")
    return fuel_exergy_multiplier(fuel) * fuel.lhv * m_fuel


def _stream_exergy(n_total: float, comp: Composition, T: float, env: ReferenceState, table):
    f0 = env.composition
    total = 0.0
    for sp in SPECIES:
        f = comp[sp]
        if f == 0.0 or n_total == 0.0:
            continue
        total += n_total * f * (psi_chemical(f, f0[sp], env) + psi_physical(sp, T, env, table))
    return total


def stream_exergy_parts(n_total: float, comp: Composition, T: float, env: ReferenceState,
                        table=DEFAULT_TABLE) -> tuple[float, float]:
    """``(chemical, physical)`` exergy flows of a stream [W], summed over species."""
    f0 = env.composition
    ch = ph = 0.0
    for sp in SPECIES:
        f = comp[sp]
        if f == 0.0:
            continue
        ch += n_total * f * psi_chemical(f, f0[sp], env)
        ph += n_total * f * psi_physical(sp, T, env, table)
    return ch, ph


def x_intake(flows: FlowState, T_I: float, env: ReferenceState, table=DEFAULT_TABLE) -> float:
    """Exergy carried in by the trapped charge (fresh air + EGR) at T_I."""
    return _stream_exergy(flows.n_intake, flows.f_intake, T_I, env, table)


def x_work(op: OperatingPoint) -> float:
    return -op.torque * op.omega


def x_heat(q_cyl: float, t_cyl: float, env: ReferenceState) -> float:
    """Carnot-weighted wall heat; ``q_cyl`` > 0 means gas to wall."""
    if t_cyl <= 0:
        raise DomainError(f"in-cylinder temperature must be positive, got {t_cyl}")
    return (1 - env.T0 / t_cyl) * (-q_cyl)


def x_exhaust(flows: FlowState, T_E: float, env: ReferenceState, table=DEFAULT_TABLE) -> float:
    return -_stream_exergy(flows.n_exhaust, flows.f_exhaust, T_E, env, table)


def combustion_terms(flows: FlowState, t_cyl: float, p_cyl: float, fuel: FuelThermo,
                     env: ReferenceState, table=DEFAULT_TABLE) -> tuple[float, float, float]:
    """The reaction, N2-dilution and partial-pressure parts of the combustion
    destruction rate [W]."""
    if t_cyl <= 0 or p_cyl <= 0:
        raise DomainError("combustion term needs positive in-cylinder temperature and pressure")
    st = flows.stoich
    n_f = flows.n_fuel
    if n_f == 0:
        return 0.0, 0.0, 0.0
    R, T0 = env.r_gas, env.T0
    scale = -(T0 / t_cyl) * n_f
    reaction = scale * reaction_gibbs_release(fuel, t_cyl, table)

    fi, fe = flows.f_intake, flows.f_exhaust
    for label, f in (("intake", fi), ("exhaust", fe)):
        if f.N2 <= 0:
            raise DomainError(f"N2 mole fraction of {label} is zero")
    n2 = st.lam / (1 - st.x_egr) * fuel.o2_demand * 3.76 * R * t_cyl * math.log(fi.N2 / fe.N2)
    dilution = scale * n2

    pr = p_cyl / env.P0
    acc = 0.0
    for k, sp in enumerate(SPECIES):
        if sp is Species.N2:
            continue
        for nu, f, sign, label in ((st.nu_in[k], fi[sp], 1.0, "intake"), (st.nu_out[k], fe[sp], -1.0, "exhaust")):
            if nu == 0.0:
                continue
            if f <= 0:
                raise DomainError(f"{sp.value} mole fraction of {label} is zero in a log term")
            acc += sign * nu * math.log(f * pr)
    partial = scale * R * t_cyl * acc
    return reaction, dilution, partial


def x_combustion(flows: FlowState, t_cyl: float, p_cyl: float, fuel: FuelThermo,
                 env: ReferenceState, table=DEFAULT_TABLE) -> float:
    return sum(combustion_terms(flows, t_cyl, p_cyl, fuel, env, table))


def x_friction(op: OperatingPoint, engine: EngineSpec = DEFAULT_ENGINE) -> float:
    return -engine.friction_power(op.omega)


def x_others(fuel, intake, work, heat, exhaust, combustion, friction) -> float:
    vals = (fuel, intake, work, heat, exhaust, combustion, friction)
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError(f"non-finite exergy term in {vals}")
    return -math.fsum(vals)


@dataclass(frozen=True)
class ExergyRates:
    fuel: float
    intake: float
    work: float
    heat: float
    exhaust: float
    combustion: float
    friction: float
    others: float

    @classmethod
    def close(cls, fuel, intake, work, heat, exhaust, combustion, friction) -> ExergyRates:
        """Build the eight terms with ``others`` from the steady-state balance."""
        vals = [float(v) for v in (fuel, intake, work, heat, exhaust, combustion, friction)]
        return cls(*vals, x_others(*vals))

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, t) for t in TERMS])

    def closure(self) -> float:
        """Eight-term sum relative to the input exergy."""
        scale = max(abs(self.fuel) + abs(self.intake), 1e-300)
        return math.fsum(self.as_array()) / scale

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def zero(cls) -> ExergyRates:
        return cls(*([0.0] * 8))


@dataclass(frozen=True)
class ExergyTotals:
    fuel: float
    intake: float
    work: float
    heat: float
    exhaust: float
    combustion: float
    friction: float
    others: float
    horizon_s: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, t) for t in TERMS])

    def closure(self) -> float:
        scale = max(abs(self.fuel) + abs(self.intake), 1e-300)
        return math.fsum(self.as_array()) / scale

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class PercentBreakdown:
    """Output terms as percentages of the input exergy (fuel + intake).

    Attributes are magnitudes; ``signed`` keeps -X_j / X_in * 100 so that the
    six signed values add up to 100.
    """

    work: float
    heat: float
    exhaust: float
    combustion: float
    friction: float
    others: float
    signed: dict

    def as_dict(self) -> dict:
        return {t: getattr(self, t) for t in OUTPUT_TERMS}

    def signed_sum(self) -> float:
        return math.fsum(self.signed.values())

    def to_dict(self) -> dict:
        return {**self.as_dict(), "signed": dict(self.signed)}


def integrate(rates, dt: float, horizon: float | None = None) -> ExergyTotals:
    """Trapezoidal time integral of a uniformly sampled rate trace.

    ``rates`` is a sequence of :class:`ExergyRates` or an (n, 8) array in
    TERMS order. A single sample is held constant over ``horizon``.
    """
    if dt <= 0:
        raise ValidationError(f"timestep must be positive, got {dt}")
    arr = np.array([r.as_array() for r in rates]) if not isinstance(rates, np.ndarray) else rates
    if arr.size == 0:
        raise ValidationError("cannot integrate an empty trace")
    arr = np.atleast_2d(arr)
    if arr.shape[0] == 1:
        if horizon is None:
            raise ValidationError("a single sample needs an explicit horizon")
        return ExergyTotals(*(arr[0] * horizon), horizon_s=horizon)
    # constant-rate traces reproduce rate * horizon exactly when all samples agree
    totals = dt * (arr.sum(axis=0) - 0.5 * (arr[0] + arr[-1]))
    const = np.all(arr == arr[0], axis=0)
    span = dt * (arr.shape[0] - 1)
    totals = np.where(const, arr[0] * span, totals)
    return ExergyTotals(*totals, horizon_s=span)


def percentages(totals, warn: bool = True) -> PercentBreakdown:
    """Share of each output term in the input exergy, in percent."""
    x_in = totals.fuel + totals.intake
    if not x_in > 0:
        raise ValidationError("input exergy is zero; percentages undefined")
    signed = {t: -getattr(totals, t) / x_in * 100.0 for t in OUTPUT_TERMS}
    if warn and abs(signed["others"]) > OTHERS_WARN_PCT:
        warnings.warn(f"others term at {signed['others']:.2f}% of input exergy", OthersWarning, stacklevel=2)
    return PercentBreakdown(**{t: abs(v) for t, v in signed.items()}, signed=signed)


def rates_from_dict(d: dict) -> ExergyRates:
    return ExergyRates(**{f.name: float(d[f.name]) for f in fields(ExergyRates)})
