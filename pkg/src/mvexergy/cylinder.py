"""Single-zone closed-cycle cylinder model and mean-value map generation.

The trapped charge (fresh air plus recirculated exhaust at intake
temperature) is compressed from intake-valve closing, receives the fuel
energy along a Wiebe curve, loses heat to the walls through the Hohenberg
correlation and expands until exhaust-valve opening. Composition is frozen
at the intake mixture. Crank angles are in degrees after firing TDC.

Everything is vectorised over operating points: arrays of nodes are
integrated side by side, each one an independent fixed-step RK4 march.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import DEFAULT_ENGINE, EngineGeometry, EngineSpec, OperatingPoint, rpm_to_radps
from .engine_maps import EngineMaps, GridMap, _check_grid, interpolate, read_map_csv, write_map_csv
from .errors import DomainError, ExergyModelError, NumericalError, ValidationError
from .mixture import (
    HUMID_AMBIENT,
    IntakeState,
    ReferenceState,
    air_fuel_lambda,
    air_mass_flow,
    egr_fixed_point,
    R_AIR,
)
from .thermo import DEFAULT_TABLE, DIESEL, R_GAS, SPECIES, FuelThermo

DEG = math.pi / 180.0


@dataclass(frozen=True)
class CombustionParams:
    a: float = 6.908
    m: float = 1.5
    theta_soc: float = -8.0
    duration: float = 80.0
    window: tuple[float, float] = (-10.0, 120.0)
    theta_ivc: float = -165.0
    theta_evo: float = 120.0
    step: float = 0.25
    c_h1: float = 130.0
    c_h2: float = 1.4

    def __post_init__(self):
        if self.a <= 0 or self.m <= 0 or self.duration <= 0:
            raise ValidationError("Wiebe a, m and duration must be positive")
        lo, hi = self.window
        if not lo < self.theta_soc < hi:
            raise ValidationError(f"start of combustion {self.theta_soc} outside firing window {self.window}")
        if not self.theta_ivc <= lo < hi <= self.theta_evo:
            raise ValidationError(f"firing window {self.window} outside IVC..EVO")
        if self.step <= 0:
            raise ValidationError("crank step must be positive")


DEFAULT_COMBUSTION = CombustionParams()


def cylinder_volume(theta, geom: EngineGeometry = DEFAULT_ENGINE.geometry):
    """Slider-crank volume of one cylinder [m^3] at crank angle ``theta`` [deg]."""
    th = np.asarray(theta, dtype=float) * DEG
    R = geom.conrod_ratio
    v = geom.v_clearance + 0.5 * geom.v_d_cyl * (1 + R - np.cos(th) - np.sqrt(R**2 - np.sin(th) ** 2))
    return float(v) if v.ndim == 0 else v


def _dvolume(theta, geom: EngineGeometry):
    # dV/dtheta per degree
    th = np.asarray(theta, dtype=float) * DEG
    R = geom.conrod_ratio
    s = np.sin(th)
    return 0.5 * geom.v_d_cyl * (s + s * np.cos(th) / np.sqrt(R**2 - s**2)) * DEG


def wiebe_burn_fraction(theta, params: CombustionParams = DEFAULT_COMBUSTION):
    """Cumulative burnt fraction; zero before start of combustion."""
    tau = np.maximum((np.asarray(theta, dtype=float) - params.theta_soc) / params.duration, 0.0)
    x = 1.0 - np.exp(-params.a * tau ** (params.m + 1))
    return float(x) if x.ndim == 0 else x


def _wiebe_rate(theta, params: CombustionParams):
    # d(burn fraction)/d(theta) per degree
    tau = np.maximum((np.asarray(theta, dtype=float) - params.theta_soc) / params.duration, 0.0)
    return (params.a * (params.m + 1) / params.duration) * tau**params.m * np.exp(-params.a * tau ** (params.m + 1))


def hohenberg_htc(V, p, T, S_p, c1: float = 130.0, c2: float = 1.4):
    """Hohenberg heat-transfer coefficient [W/(m^2 K)].

    V in m^3, p in Pa (converted to bar internally), T in K, S_p in m/s.
    """
    V, p, T, S_p = (np.asarray(a, dtype=float) for a in (V, p, T, S_p))
    if np.any(V <= 0) or np.any(p <= 0) or np.any(T <= 0) or np.any(S_p < 0):
        raise DomainError("Hohenberg correlation needs positive volume, pressure and temperature")
    h = c1 * V**-0.06 * (p / 1e5) ** 0.8 * T**-0.4 * (S_p + c2) ** 0.8
    return float(h) if h.ndim == 0 else h


class _MixturePoly:
    """cp and sensible internal energy of frozen mixtures, one per node."""

    def __init__(self, fractions: np.ndarray, table=DEFAULT_TABLE):
        curves = [table[s] for s in SPECIES]
        low = np.array([c.low for c in curves])
        high = np.array([c.high for c in curves])
        self.low = fractions @ low  # (N, 7)
        self.high = fractions @ high
        self.t_mid = curves[0].t_mid
        if any(c.t_mid != self.t_mid for c in curves):
            raise ValidationError("mixture evaluation needs a common range break")
        self.t_min = max(c.t_low for c in curves)
        self.t_max = min(c.t_high for c in curves)
        self.r = curves[0].r_gas

    def _a(self, T):
        return np.where((T <= self.t_mid)[:, None], self.low, self.high).T

    def cv(self, T):
        a = self._a(T)
        return self.r * (a[0] - 1 + T * (a[1] + T * (a[2] + T * (a[3] + T * a[4]))))

    def u(self, T):
        a = self._a(T)
        h = T * (a[0] + T * (a[1] / 2 + T * (a[2] / 3 + T * (a[3] / 4 + T * a[4] / 5)))) + a[5]
        return self.r * (h - T)


@dataclass(frozen=True)
class CycleTraceCA:
    """Crank-resolved closed-cycle trace of one cylinder."""

    theta: np.ndarray  # deg
    p: np.ndarray  # Pa
    T: np.ndarray  # K
    V: np.ndarray  # m^3
    q_wall: np.ndarray  # J, cumulative gas -> wall
    work: np.ndarray  # J, cumulative p dV
    burn_fraction: np.ndarray
    u: np.ndarray  # J, sensible internal energy of the charge
    fuel_energy: float  # J per cylinder per cycle
    trapped_moles: float
    omega: float

    def energy_residual(self) -> float:
        """Relative error of fuel in = dU + wall heat + work over the trace."""
        released = self.fuel_energy * (self.burn_fraction[-1] - self.burn_fraction[0])
        balance = (self.u[-1] - self.u[0]) + self.q_wall[-1] + self.work[-1]
        return abs(released - balance) / max(abs(released), 1e-300)


@dataclass(frozen=True)
class _Charge:
    omega: np.ndarray
    moles: np.ndarray  # per cylinder per cycle
    fuel_energy: np.ndarray  # per cylinder per cycle
    fractions: np.ndarray  # (N, 4)
    t_start: np.ndarray


def _integrate(charge: _Charge, geom: EngineGeometry, params: CombustionParams,
               table=DEFAULT_TABLE, burn: bool = True, wall: bool = True):
    """March all nodes from IVC to EVO. Returns per-theta arrays of shape (n_theta, N)."""
    n_steps = int(round((params.theta_evo - params.theta_ivc) / params.step))
    if not math.isclose(n_steps * params.step, params.theta_evo - params.theta_ivc, rel_tol=1e-12):
        raise ValidationError("crank step must divide the IVC..EVO interval")
    theta = params.theta_ivc + params.step * np.arange(n_steps + 1)
    h = params.step
    mix = _MixturePoly(charge.fractions, table)
    n = charge.moles
    rn = mix.r * n
    sp = geom.mean_piston_speed(charge.omega)
    deg_time = DEG / charge.omega  # seconds per degree
    area_ends = 2 * geom.piston_area
    liner = math.pi * geom.bore / geom.piston_area
    tw = geom.t_wall
    qf = charge.fuel_energy if burn else np.zeros_like(charge.fuel_energy)

    def rhs(th, T):
        V = cylinder_volume(th, geom)
        p = rn * T / V
        dV = _dvolume(th, geom)
        dq_c = qf * _wiebe_rate(th, params)
        if wall:
            htc = params.c_h1 * V**-0.06 * (p / 1e5) ** 0.8 * T**-0.4 * (sp + params.c_h2) ** 0.8
            dq_w = htc * (area_ends + liner * V) * (T - tw) * deg_time
        else:
            dq_w = np.zeros_like(T)
        dw = p * dV
        dT = (dq_c - dq_w - dw) / (n * mix.cv(T))
        return dT, dq_w, dw

    N = n.size
    T_out = np.empty((n_steps + 1, N))
    q_out = np.empty_like(T_out)
    w_out = np.empty_like(T_out)
    T = charge.t_start.astype(float).copy()
    q = np.zeros(N)
    w = np.zeros(N)
    T_out[0], q_out[0], w_out[0] = T, q, w
    for k in range(n_steps):
        th = theta[k]
        k1 = rhs(th, T)
        k2 = rhs(th + h / 2, T + h / 2 * k1[0])
        k3 = rhs(th + h / 2, T + h / 2 * k2[0])
        k4 = rhs(th + h, T + h * k3[0])
        T = T + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        q = q + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        w = w + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        bad = ~np.isfinite(T) | (T < mix.t_min) | (T > mix.t_max)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise NumericalError(
                f"cylinder integration failed at theta = {theta[k + 1]:.2f} deg "
                f"(node {i}: T = {T[i]!r} K)"
            )
        T_out[k + 1], q_out[k + 1], w_out[k + 1] = T, q, w
    V = cylinder_volume(theta, geom)
    p = rn[None, :] * T_out / V[:, None]
    u = n[None, :] * np.stack([mix.u(t) for t in T_out])
    return theta, V, p, T_out, q_out, w_out, u


def trapped_charge(ops_omega, fuel_rate, x_egr: float, engine: EngineSpec,
                   intake: IntakeState, ambient=HUMID_AMBIENT, fuel: FuelThermo = DIESEL,
                   r_air: float = R_AIR) -> _Charge:
    """Per-cylinder, per-cycle trapped moles, fuel energy and intake composition."""
    omega = np.atleast_1d(np.asarray(ops_omega, dtype=float))
    mf = np.atleast_1d(np.asarray(fuel_rate, dtype=float))
    if np.any(omega <= 0):
        raise DomainError("engine speed must be positive for a firing cycle")
    if np.any(mf <= 0):
        raise DomainError("fuel rate must be positive for a firing cycle")
    geom = engine.geometry
    m_air = air_mass_flow(omega, intake, geom.v_d_tot, engine.eta_v, engine.boost_ratio, r_air)
    # speed-density mass converted to moles with the same gas constant
    n_fresh = m_air * r_air / R_GAS
    cycles = omega / (4 * math.pi) * geom.n_cyl  # cylinder-cycles per second
    fractions = np.empty((omega.size, 4))
    for i in range(omega.size):
        lam = air_fuel_lambda(float(m_air[i]), float(mf[i]), fuel, warn=False)
        f_i, _ = egr_fixed_point(lam, x_egr, ambient, fuel)
        fractions[i] = f_i.as_array()
    return _Charge(
        omega=omega,
        moles=n_fresh / (1 - x_egr) / cycles,
        fuel_energy=mf * fuel.lhv / cycles,
        fractions=fractions,
        t_start=np.full(omega.size, intake.T_I),
    )


def simulate_cycle(op: OperatingPoint, x_egr: float, maps: EngineMaps,
                   env: ReferenceState = ReferenceState(), intake: IntakeState = IntakeState(),
                   engine: EngineSpec = DEFAULT_ENGINE, fuel: FuelThermo = DIESEL,
                   params: CombustionParams = DEFAULT_COMBUSTION, *,
                   burn: bool = True, wall: bool = True) -> CycleTraceCA:
    """Crank-resolved closed cycle at one operating point.

    ``burn=False`` / ``wall=False`` switch off heat release / wall losses
    (motored and adiabatic checks).
    """
    mf = interpolate(maps, op.omega, op.torque, "fuel_rate")
    charge = trapped_charge(op.omega, mf, x_egr, engine, intake, env.composition, fuel)
    theta, V, p, T, q, w, u = _integrate(charge, engine.geometry, params, burn=burn, wall=wall)
    fe = float(charge.fuel_energy[0]) if burn else 0.0
    return CycleTraceCA(
        theta=theta, p=p[:, 0], T=T[:, 0], V=V, q_wall=q[:, 0], work=w[:, 0],
        burn_fraction=wiebe_burn_fraction(theta, params) if burn else np.zeros_like(theta),
        u=u[:, 0], fuel_energy=fe, trapped_moles=float(charge.moles[0]), omega=op.omega,
    )


def _window_mask(theta, params: CombustionParams):
    lo, hi = params.window
    eps = 1e-9 * params.step
    if lo < theta[0] - eps or hi > theta[-1] + eps:
        raise DomainError(f"firing window {params.window} outside trace [{theta[0]}, {theta[-1]}]")
    return (theta >= lo - eps) & (theta <= hi + eps)


def _means(theta, p, T, q, omega, params: CombustionParams, n_cyl: int):
    mask = _window_mask(theta, params)
    idx = np.flatnonzero(mask)
    # contiguous per-node rows so every node is reduced the same way
    p_cyl = np.ascontiguousarray(p[idx].T).mean(axis=1)
    t_cyl = np.ascontiguousarray(T[idx].T).mean(axis=1)
    q_win = q[idx[-1]] - q[idx[0]]
    return p_cyl, t_cyl, q_win * n_cyl * omega / (4 * math.pi)


def mean_values(trace: CycleTraceCA, params: CombustionParams = DEFAULT_COMBUSTION,
                op: OperatingPoint | None = None, geom: EngineGeometry = DEFAULT_ENGINE.geometry):
    """Firing-window averages ``(P_cyl [Pa], T_cyl [K], Qdot_cyl [W])``.

    Pressure and temperature are arithmetic means of the crank-angle nodes
    inside the window; Qdot_cyl is the engine-total wall-loss rate of the
    heat transferred across the window.
    """
    omega = op.omega if op is not None else trace.omega
    p, t, qd = _means(trace.theta, trace.p[:, None], trace.T[:, None], trace.q_wall[:, None],
                      np.array([omega]), params, geom.n_cyl)
    return float(p[0]), float(t[0]), float(qd[0])


@dataclass(frozen=True, eq=False)
class MeanValueMaps(GridMap):
    speed_rpm: np.ndarray
    torque: np.ndarray
    p_cyl: np.ndarray  # Pa
    t_cyl: np.ndarray  # K
    q_cyl: np.ndarray  # W, engine total, gas -> wall
    x_egr: float

    QUANTITIES = ("p_cyl", "t_cyl", "q_cyl")

    def __post_init__(self):
        for name in ("speed_rpm", "torque") + self.QUANTITIES:
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        _check_grid("speed", self.speed_rpm)
        _check_grid("torque", self.torque)
        shape = (self.torque.size, self.speed_rpm.size)
        for name in self.QUANTITIES:
            m = getattr(self, name)
            if m.shape != shape:
                raise ValidationError(f"{name} matrix has shape {m.shape}, grids imply {shape}")
            if not np.all(np.isfinite(m)) or np.any(m <= 0):
                raise ValidationError(f"{name} entries must be finite and positive")

    def __eq__(self, other):
        if not isinstance(other, MeanValueMaps):
            return NotImplemented
        return self.x_egr == other.x_egr and all(
            np.array_equal(getattr(self, n), getattr(other, n))
            for n in ("speed_rpm", "torque") + self.QUANTITIES
        )

    def save(self, directory) -> list[Path]:
        directory = Path(directory)
        out = []
        for name in self.QUANTITIES:
            path = directory / mean_value_filename(name, self.x_egr)
            write_map_csv(path, self.speed_rpm, self.torque, getattr(self, name))
            out.append(path)
        return out


def mean_value_filename(quantity: str, x_egr: float) -> str:
    return f"{quantity}_xegr{x_egr:.3f}.csv"


def load_mean_value_maps(directory, x_egr: float) -> MeanValueMaps:
    directory = Path(directory)
    grids, mats = None, {}
    for name in MeanValueMaps.QUANTITIES:
        s, t, m = read_map_csv(directory / mean_value_filename(name, x_egr))
        if grids is None:
            grids = (s, t)
        elif not (np.array_equal(grids[0], s) and np.array_equal(grids[1], t)):
            raise ValidationError(f"mean-value maps at x_EGR={x_egr} use different grids")
        mats[name] = m
    return MeanValueMaps(grids[0], grids[1], x_egr=x_egr, **mats)


@dataclass
class MapGenerationError(ExergyModelError):
    failures: list = field(default_factory=list)
    partial: MeanValueMaps | None = None

    def __str__(self):
        lines = [f"{len(self.failures)} lattice node(s) failed:"]
        lines += [f"  ({rpm} rpm, {tq} Nm): {msg}" for rpm, tq, msg in self.failures[:20]]
        return "\n".join(lines)


def _node_block(args):
    omega, mf, x_egr, engine, intake, ambient, fuel, params = args
    charge = trapped_charge(omega, mf, x_egr, engine, intake, ambient, fuel)
    theta, V, p, T, q, w, u = _integrate(charge, engine.geometry, params)
    return _means(theta, p, T, q, omega, params, engine.geometry.n_cyl)


def generate_maps(x_egr: float, engine_maps: EngineMaps, engine: EngineSpec = DEFAULT_ENGINE,
                  env: ReferenceState = ReferenceState(), intake: IntakeState = IntakeState(),
                  fuel: FuelThermo = DIESEL, params: CombustionParams = DEFAULT_COMBUSTION,
                  speed_rpm=None, torque=None, *, chunk: int | None = None,
                  jobs: int = 1) -> MeanValueMaps:
    """Mean-value P_cyl, T_cyl, Qdot_cyl on a speed x torque lattice at one EGR rate.

    The lattice defaults to the engine-map grid. Nodes are integrated in
    blocks of ``chunk``; results do not depend on blocking or ``jobs``.
    """
    speed_rpm = np.asarray(engine_maps.speed_rpm if speed_rpm is None else speed_rpm, dtype=float)
    torque = np.asarray(engine_maps.torque if torque is None else torque, dtype=float)
    S, Tq = np.meshgrid(speed_rpm, torque)
    flat_rpm, flat_tq = S.ravel(), Tq.ravel()
    omega = rpm_to_radps(flat_rpm)
    failures = []
    mf = np.full(omega.size, np.nan)
    ok = np.zeros(omega.size, dtype=bool)
    for i in range(omega.size):
        try:
            mf[i] = interpolate(engine_maps, omega[i], flat_tq[i], "fuel_rate")
            trapped_charge(omega[i], mf[i], x_egr, engine, intake, env.composition, fuel)
            ok[i] = True
        except ExergyModelError as exc:
            failures.append((float(flat_rpm[i]), float(flat_tq[i]), str(exc)))
    idx = np.flatnonzero(ok)
    chunk = chunk or max(idx.size, 1)
    blocks = [idx[k:k + chunk] for k in range(0, idx.size, chunk)]
    tasks = [(omega[b], mf[b], x_egr, engine, intake, env.composition, fuel, params) for b in blocks]
    out = np.full((3, omega.size), np.nan)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_node_block, tasks))
    else:
        results = [_node_block(t) for t in tasks]
    for b, res in zip(blocks, results):
        for k in range(3):
            out[k, b] = res[k]
    shape = Tq.shape
    if failures:
        fill = np.where(np.isfinite(out), out, 1.0)
        partial = MeanValueMaps(speed_rpm, torque, *(f.reshape(shape) for f in fill), x_egr=x_egr)
        raise MapGenerationError(failures, partial)
    return MeanValueMaps(speed_rpm, torque, *(o.reshape(shape) for o in out), x_egr=x_egr)
