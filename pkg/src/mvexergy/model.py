"""Everything needed to evaluate the exergy balance at an operating point."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

from .cylinder import DEFAULT_COMBUSTION, CombustionParams, MeanValueMaps, generate_maps
from .engine import DEFAULT_ENGINE, EngineSpec, OperatingPoint
from .engine_maps import EngineMaps, WillansParams, interpolate, synth_maps
from .errors import DomainError, ValidationError
from .exergy import (
    ExergyRates,
    x_combustion,
    x_exhaust,
    x_friction,
    x_fuel,
    x_heat,
    x_intake,
    x_work,
)
from .mixture import EGR_MAX, FlowState, IntakeState, ReferenceState, air_fuel_lambda, air_mass_flow, molar_flows
from .thermo import DEFAULT_TABLE, DIESEL, FuelThermo


@dataclass(frozen=True)
class EngineModel:
    """Engine, fuel, calibration maps and mean-value maps keyed by EGR rate.

    Mean-value maps are only valid for the ambient composition and intake
    state they were generated with; T0 is applied downstream.
    """

    engine_maps: EngineMaps
    mean_value: dict = field(default_factory=dict)
    engine: EngineSpec = DEFAULT_ENGINE
    fuel: FuelThermo = DIESEL
    intake: IntakeState = IntakeState()
    combustion: CombustionParams = DEFAULT_COMBUSTION
    willans: WillansParams | None = None
    sources: tuple = ()  # map files the model was loaded from

    @classmethod
    def default(cls, egr_rates=(), **kwargs) -> EngineModel:
        """Synthetic engine maps plus mean-value maps at ``egr_rates``."""
        willans = kwargs.pop("willans", WillansParams())
        engine = kwargs.get("engine", DEFAULT_ENGINE)
        fuel = kwargs.get("fuel", DIESEL)
        model = cls(synth_maps(engine, fuel, willans), willans=willans, **kwargs)
        return model.with_egr(egr_rates)

    def with_egr(self, egr_rates, env: ReferenceState = ReferenceState(), jobs: int = 1) -> EngineModel:
        """Copy with mean-value maps generated for any missing EGR rate."""
        mv = dict(self.mean_value)
        for x in egr_rates:
            x = float(x)
            if not 0.0 <= x <= EGR_MAX:
                raise ValidationError(f"x_EGR = {x} outside [0, {EGR_MAX}]")
            if x not in mv:
                mv[x] = generate_maps(x, self.engine_maps, self.engine, env, self.intake,
                                      self.fuel, self.combustion, jobs=jobs)
        return replace(self, mean_value=mv)

    def maps_for(self, x_egr: float) -> MeanValueMaps:
        try:
            return self.mean_value[float(x_egr)]
        except KeyError:
            raise ValidationError(
                f"no mean-value maps for x_EGR = {x_egr}; available: {sorted(self.mean_value)}"
            ) from None

    def calibration_hash(self) -> str:
        payload = {
            "engine": asdict(self.engine),
            "fuel": {k: getattr(self.fuel, k) for k in ("x", "y", "lhv", "s_std", "cp")},
            "intake": asdict(self.intake),
            "combustion": asdict(self.combustion),
            "willans": asdict(self.willans) if self.willans else None,
            "engine_maps": [
                self.engine_maps.speed_rpm.tolist(), self.engine_maps.torque.tolist(),
                self.engine_maps.fuel_rate.tolist(), self.engine_maps.t_exhaust.tolist(),
            ],
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class PointState:
    """Interpolated inputs of the balance at one operating point."""

    m_fuel: float
    t_exhaust: float
    p_cyl: float
    t_cyl: float
    q_cyl: float
    m_air: float
    lam: float


def point_state(op: OperatingPoint, x_egr: float, model: EngineModel) -> PointState:
    em = model.engine_maps
    mv = model.maps_for(x_egr)
    for m, label in ((em, "engine"), (mv, "mean-value")):
        if not m.contains(op.omega, op.torque):
            # interpolate() raises with the box; keep its message
            interpolate(m, op.omega, op.torque, m.QUANTITIES[0])
    mf = interpolate(em, op.omega, op.torque, "fuel_rate")
    if mf <= 0:
        raise DomainError(f"zero fuel rate at ({op.rpm:.1f} rpm, {op.torque} Nm)")
    m_air = air_mass_flow(op.omega, model.intake, model.engine.geometry.v_d_tot,
                          model.engine.eta_v, model.engine.boost_ratio)
    return PointState(
        m_fuel=mf,
        t_exhaust=interpolate(em, op.omega, op.torque, "t_exhaust"),
        p_cyl=interpolate(mv, op.omega, op.torque, "p_cyl"),
        t_cyl=interpolate(mv, op.omega, op.torque, "t_cyl"),
        q_cyl=interpolate(mv, op.omega, op.torque, "q_cyl"),
        m_air=m_air,
        lam=air_fuel_lambda(m_air, mf, model.fuel, warn=False),
    )


def state_flows(op: OperatingPoint, x_egr: float, model: EngineModel,
                ambient=None) -> tuple[PointState, FlowState]:
    """Interpolated point state and molar flows; neither depends on T0."""
    st = point_state(op, x_egr, model)
    ambient = ReferenceState().composition if ambient is None else ambient
    return st, molar_flows(st.m_fuel, st.lam, x_egr, model.fuel, ambient)


def balance_at(op: OperatingPoint, st: PointState, flows: FlowState, env: ReferenceState,
               model: EngineModel, table=DEFAULT_TABLE) -> ExergyRates:
    """Exergy rates from a precomputed state; lets sweeps reuse it across T0."""
    return ExergyRates.close(
        fuel=x_fuel(st.m_fuel, model.fuel),
        intake=x_intake(flows, model.intake.T_I, env, table),
        work=x_work(op),
        heat=x_heat(st.q_cyl, st.t_cyl, env),
        exhaust=x_exhaust(flows, st.t_exhaust, env, table),
        combustion=x_combustion(flows, st.t_cyl, st.p_cyl, model.fuel, env, table),
        friction=x_friction(op, model.engine),
    )


def balance(op: OperatingPoint, x_egr: float, env: ReferenceState, model: EngineModel,
            table=DEFAULT_TABLE) -> ExergyRates:
    """All eight exergy rates at a steady operating point."""
    st, flows = state_flows(op, x_egr, model, env.composition)
    return balance_at(op, st, flows, env, model, table)
