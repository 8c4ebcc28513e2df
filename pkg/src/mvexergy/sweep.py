"""Drive-cycle evaluation and the reference-temperature x EGR-rate sweep.

A cycle is a uniformly sampled (speed, torque) trace of the engine. Each
sample is balanced as a steady operating point, the rates are integrated
with the trapezoid rule and the totals are turned into percentages of the
input exergy. Samples with zero torque or speed below idle are engine-off
and contribute nothing.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .engine import OperatingPoint, rpm_to_radps
from .errors import DomainError, ValidationError
from .exergy import OUTPUT_TERMS, TERMS, ExergyTotals, PercentBreakdown, integrate, percentages
from .model import EngineModel, balance_at, state_flows
from .mixture import EGR_MAX, ReferenceState

TRACE_HEADER = ("t_s", "omega_radps", "torque_Nm")
T0_BOUNDS = (233.15, 333.15)
FLAT_PP = 2.0


@dataclass(frozen=True, eq=False)
class CycleTrace:
    """Uniformly sampled engine operating trace."""

    t: np.ndarray  # s
    omega: np.ndarray  # rad/s
    torque: np.ndarray  # Nm
    name: str = "cycle"

    def __post_init__(self):
        arrs = []
        for label in ("t", "omega", "torque"):
            a = np.array(getattr(self, label), dtype=float)
            if a.ndim != 1:
                raise ValidationError(f"trace column {label} must be one-dimensional")
            if not np.all(np.isfinite(a)):
                raise ValidationError(f"trace column {label} contains NaN or inf")
            a.setflags(write=False)
            object.__setattr__(self, label, a)
            arrs.append(a)
        if not arrs[0].size == arrs[1].size == arrs[2].size:
            raise ValidationError("trace columns differ in length")
        if self.t.size == 0:
            raise ValidationError("empty trace")
        if np.any(self.omega < 0):
            raise ValidationError(f"{self.name}: negative engine speed")
        if self.t.size > 1:
            steps = np.diff(self.t)
            if np.any(steps <= 0):
                raise ValidationError(f"{self.name}: time must be strictly increasing")
            if np.max(np.abs(steps - self.dt)) > 1e-9:
                raise ValidationError(f"{self.name}: non-uniform timestep")

    @property
    def dt(self) -> float:
        n = self.t.size
        return float((self.t[-1] - self.t[0]) / (n - 1)) if n > 1 else 1.0

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def __len__(self):
        return self.t.size

    def __eq__(self, other):
        if not isinstance(other, CycleTrace):
            return NotImplemented
        return self.name == other.name and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("t", "omega", "torque")
        )


def load_trace(path, name: str | None = None) -> CycleTrace:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ValidationError(f"cannot read trace {path}: {exc}") from None
    if not rows or tuple(c.strip() for c in rows[0]) != TRACE_HEADER:
        raise ValidationError(f"{path}: header must be {','.join(TRACE_HEADER)}")
    data = np.empty((len(rows) - 1, 3))
    for i, r in enumerate(rows[1:]):
        if len(r) != 3:
            raise ValidationError(f"{path}: line {i + 2} has {len(r)} cells, expected 3")
        try:
            data[i] = [float(c) for c in r]
        except ValueError:
            raise ValidationError(f"{path}: line {i + 2} is not numeric") from None
    return CycleTrace(data[:, 0], data[:, 1], data[:, 2], name or path.stem)


def save_trace(trace: CycleTrace, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in zip(trace.t, trace.omega, trace.torque):
            w.writerow([repr(float(v)) for v in row])


def load_cycles(directory) -> list[CycleTrace]:
    """All ``*.csv`` traces in a directory, sorted by file name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ValidationError(f"cycle directory {directory} does not exist")
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise ValidationError(f"no cycle traces in {directory}")
    return [load_trace(f) for f in files]


DEMO_CYCLES = ("high_speed", "low_speed", "mixed", "urban")


def demo_cycle_dir() -> Path:
    return Path(str(resources.files("mvexergy") / "data" / "cycles"))


def demo_cycles() -> list[CycleTrace]:
    """The four synthetic cycles shipped with the package."""
    return load_cycles(demo_cycle_dir())


# rpm band, torque band [Nm], share of engine-off segments
DEMO_PROFILES = {
    "high_speed": ((2200.0, 2900.0), (400.0, 760.0), 0.10),
    "mixed": ((1300.0, 2700.0), (200.0, 700.0), 0.25),
    "low_speed": ((1000.0, 1700.0), (250.0, 650.0), 0.30),
    "urban": ((900.0, 1600.0), (120.0, 520.0), 0.45),
}


def synthetic_cycle(name: str, duration: float = 1200.0, dt: float = 1.0, seed: int = 0,
                    ramp: float = 4.0) -> CycleTrace:
    """Piecewise-constant engine trace with linear ramps between set-points.

    Segment lengths are 20-90 s; each segment is engine-off with the
    profile's probability. The trace starts and ends with the engine off.
    """
    if name not in DEMO_PROFILES:
        raise ValidationError(f"unknown demo profile {name!r}; expected one of {sorted(DEMO_PROFILES)}")
    (r_lo, r_hi), (q_lo, q_hi), p_off = DEMO_PROFILES[name]
    rng = np.random.default_rng(seed)
    n = int(round(duration / dt)) + 1
    t = dt * np.arange(n)
    rpm = np.zeros(n)
    tq = np.zeros(n)
    k = int(math.ceil(10 / dt))  # engine off for the first and last 10 s
    end = n - k
    prev = (0.0, 0.0)
    while k < end:
        length = min(int(rng.integers(20, 91) / dt), end - k)
        if rng.random() < p_off:
            target = (0.0, 0.0)
        else:
            target = (rng.uniform(r_lo, r_hi), rng.uniform(q_lo, q_hi))
        seg = np.arange(length)
        if prev[0] > 0 and target[0] > 0:
            w = np.minimum(seg * dt / ramp, 1.0)
        else:
            w = np.ones(length)
        rpm[k:k + length] = prev[0] + w * (target[0] - prev[0])
        tq[k:k + length] = prev[1] + w * (target[1] - prev[1])
        prev = target
        k += length
    rpm[k:] = 0.0
    tq[k:] = 0.0
    return CycleTrace(t, rpm_to_radps(np.round(rpm, 1)), np.round(tq, 1), name)


# -- single cycle -------------------------------------------------------------

def _is_off(omega: float, torque: float, idle_omega: float) -> bool:
    return torque <= 0 or omega < idle_omega * (1 - 1e-12)


def _cycle_states(trace: CycleTrace, x_egr: float, model: EngineModel, ambient):
    idle = rpm_to_radps(model.engine.idle_rpm)
    states = []
    for t, w, tq in zip(trace.t, trace.omega, trace.torque):
        if _is_off(w, tq, idle):
            states.append(None)
            continue
        op = OperatingPoint(float(w), float(tq))
        try:
            st, flows = state_flows(op, x_egr, model, ambient)
        except DomainError as exc:
            raise type(exc)(f"{trace.name}, t = {t:g} s: {exc}") from exc
        states.append((op, st, flows))
    return states


def _totals(trace: CycleTrace, states, env: ReferenceState, model: EngineModel) -> ExergyTotals:
    rates = np.zeros((len(states), len(TERMS)))
    for i, s in enumerate(states):
        if s is not None:
            rates[i] = balance_at(s[0], s[1], s[2], env, model).as_array()
    horizon = trace.dt if len(states) == 1 else None
    return integrate(rates, trace.dt, horizon=horizon)


def cycle_totals(trace: CycleTrace, T0: float, x_egr: float, model: EngineModel,
                 env: ReferenceState | None = None) -> ExergyTotals:
    """Time-integrated exergy terms [J] over a trace."""
    env = (env or ReferenceState()).with_T0(T0)
    states = _cycle_states(trace, x_egr, model, env.composition)
    return _totals(trace, states, env, model)


def evaluate_cycle(trace: CycleTrace, T0: float, x_egr: float, model: EngineModel,
                   env: ReferenceState | None = None, warn: bool = True) -> PercentBreakdown:
    """Percentage breakdown of a cycle at one (T0, x_EGR) combination."""
    return percentages(cycle_totals(trace, T0, x_egr, model, env), warn=warn)


# -- sweep --------------------------------------------------------------------

def _strictly_increasing(name, values, lo, hi):
    vals = tuple(float(v) for v in values)
    if not vals:
        raise ValidationError(f"{name} list is empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValidationError(f"{name} list must be strictly increasing: {vals}")
    bad = [v for v in vals if not lo <= v <= hi]
    if bad:
        raise ValidationError(f"{name} values {bad} outside [{lo}, {hi}]")
    return vals


@dataclass(frozen=True)
class SweepGrid:
    t0: tuple[float, ...]
    x_egr: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "t0", _strictly_increasing("T0", self.t0, *T0_BOUNDS))
        object.__setattr__(self, "x_egr", _strictly_increasing("x_EGR", self.x_egr, 0.0, EGR_MAX))

    def combos(self):
        return [(t, x) for t in self.t0 for x in self.x_egr]

    def __len__(self):
        return len(self.t0) * len(self.x_egr)


STUDY_GRID = SweepGrid((263.15, 273.15, 283.15, 293.15, 303.15, 313.15), (0.0, 0.1, 0.2, 0.3))


@dataclass(frozen=True)
class SweepResult:
    """Exergy totals for every (cycle, T0, x_EGR) combination."""

    cycles: tuple[str, ...]
    grid: SweepGrid
    totals: dict
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.cycles)) != len(self.cycles):
            raise ValidationError(f"duplicate cycle names in {self.cycles}")
        missing = [(c, t, x) for c in self.cycles for t, x in self.grid.combos()
                   if (c, t, x) not in self.totals]
        if missing:
            raise ValidationError(f"sweep result incomplete; first missing combination {missing[0]}")

    def breakdown(self, cycle: str, T0: float, x_egr: float) -> PercentBreakdown:
        return percentages(self.totals[(cycle, float(T0), float(x_egr))], warn=False)

    def percent_cube(self, signed: bool = False) -> np.ndarray:
        """Array (cycle, T0, x_EGR, term) of percentages in OUTPUT_TERMS order."""
        out = np.empty((len(self.cycles), len(self.grid.t0), len(self.grid.x_egr), len(OUTPUT_TERMS)))
        for i, c in enumerate(self.cycles):
            for j, t in enumerate(self.grid.t0):
                for k, x in enumerate(self.grid.x_egr):
                    b = self.breakdown(c, t, x)
                    out[i, j, k] = [b.signed[n] if signed else getattr(b, n) for n in OUTPUT_TERMS]
        return out

    def rows(self):
        """Long-format rows: cycle, T0_K, xEGR, term, percent, signed_value_J."""
        for c in self.cycles:
            for t, x in self.grid.combos():
                tot = self.totals[(c, t, x)]
                b = percentages(tot, warn=False)
                for term in OUTPUT_TERMS:
                    yield c, t, x, term, getattr(b, term), getattr(tot, term)

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("cycle", "T0_K", "xEGR", "term", "percent", "signed_value_J"))
            for c, t, x, term, pct, val in self.rows():
                w.writerow((c, repr(t), repr(x), term, repr(float(pct)), repr(float(val))))


def _sweep_task(args):
    trace, x_egr, t0_list, model, env = args
    states = _cycle_states(trace, x_egr, model, env.composition)
    return [_totals(trace, states, env.with_T0(t), model) for t in t0_list]


def run_sweep(cycles, grid: SweepGrid, model: EngineModel, env: ReferenceState | None = None,
              jobs: int = 1) -> SweepResult:
    """Evaluate every cycle at every grid combination.

    Mean-value maps are generated once per x_EGR (if the model lacks them)
    and reused across T0 and cycles. Results do not depend on ``jobs``.
    """
    env = env or ReferenceState()
    cycles = list(cycles)
    if not cycles:
        raise ValidationError("no cycles to sweep")
    model = model.with_egr(grid.x_egr, jobs=jobs)
    tasks = [(c, x, grid.t0, model, env) for c in cycles for x in grid.x_egr]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    totals = {}
    for (c, x, t0s, _, _), res in zip(tasks, results):
        for t, tot in zip(t0s, res):
            totals[(c.name, t, x)] = tot
    return SweepResult(
        cycles=tuple(c.name for c in cycles),
        grid=grid,
        totals=totals,
        provenance=model_provenance(model),
    )


def model_provenance(model: EngineModel) -> dict:
    from . import __version__

    return {
        "calibration_hash": model.calibration_hash(),
        "map_files": [str(p) for p in model.sources],
        "egr_maps": sorted(model.mean_value),
        "version": __version__,
    }


# -- statistics and trends ------------------------------------------------------

@dataclass(frozen=True)
class CycleStats:
    T0: float
    x_egr: float
    cycles: tuple[str, ...]
    mean: dict
    sd: dict  # population standard deviation, percentage points


def cycle_stats(result: SweepResult, T0: float, x_egr: float) -> CycleStats:
    """Per-term mean and population SD of the percentages across cycles."""
    if len(result.cycles) < 2:
        raise ValidationError("cross-cycle statistics need at least two cycles")
    T0, x_egr = float(T0), float(x_egr)
    if T0 not in result.grid.t0 or x_egr not in result.grid.x_egr:
        raise ValidationError(f"({T0}, {x_egr}) is not a grid point of the sweep")
    vals = np.array([[getattr(result.breakdown(c, T0, x_egr), t) for t in OUTPUT_TERMS]
                     for c in result.cycles])
    return CycleStats(
        T0, x_egr, result.cycles,
        mean=dict(zip(OUTPUT_TERMS, vals.mean(axis=0).tolist())),
        sd=dict(zip(OUTPUT_TERMS, vals.std(axis=0).tolist())),
    )


@dataclass(frozen=True)
class Trend:
    """Behaviour of one term of one cycle along one grid axis.

    ``direction`` is ``increasing``/``decreasing`` when every slice along
    the axis is strictly monotone that way, ``constant`` when all values
    are equal, otherwise ``mixed``. ``span`` is the largest change within
    a slice [pp]; ``flat`` marks a span below 2 pp.
    """

    cycle: str
    term: str
    axis: str
    direction: str
    span: float
    flat: bool


def _direction(slices: np.ndarray) -> str:
    d = np.diff(slices, axis=-1)
    if np.all(d > 0):
        return "increasing"
    if np.all(d < 0):
        return "decreasing"
    if np.all(d == 0):
        return "constant"
    return "mixed"


@dataclass(frozen=True)
class TrendReport:
    trends: tuple[Trend, ...]
    work_friction_variation: dict  # cycle -> total variation of |work% + friction%| [pp]

    def get(self, cycle: str, term: str, axis: str) -> Trend:
        for tr in self.trends:
            if (tr.cycle, tr.term, tr.axis) == (cycle, term, axis):
                return tr
        raise KeyError((cycle, term, axis))

    def to_dict(self) -> dict:
        return {
            "trends": [vars(t) for t in self.trends],
            "work_friction_variation_pp": dict(self.work_friction_variation),
        }

    def to_text(self) -> str:
        lines = [f"{'cycle':<12} {'term':<11} {'axis':<5} {'direction':<11} {'span_pp':>8}  flat"]
        for t in self.trends:
            lines.append(f"{t.cycle:<12} {t.term:<11} {t.axis:<5} {t.direction:<11} {t.span:8.3f}  {'yes' if t.flat else 'no'}")
        for c, v in self.work_friction_variation.items():
            lines.append(f"{c}: |work + friction| varies by {v:.3f} pp over the grid")
        return "\n".join(lines)


def trend_report(result: SweepResult) -> TrendReport:
    """Monotonicity of every percentage term along T0 and along x_EGR."""
    if len(result.grid.t0) < 2 or len(result.grid.x_egr) < 2:
        raise ValidationError("trend report needs at least two grid points per axis")
    cube = result.percent_cube()  # magnitudes
    signed = result.percent_cube(signed=True)
    trends = []
    variation = {}
    iw, ifr = OUTPUT_TERMS.index("work"), OUTPUT_TERMS.index("friction")
    for i, c in enumerate(result.cycles):
        for k, term in enumerate(OUTPUT_TERMS):
            block = cube[i, :, :, k]  # (T0, x)
            for axis, slices in (("T0", block.T), ("xEGR", block)):
                span = float(np.max(slices.max(axis=-1) - slices.min(axis=-1)))
                trends.append(Trend(c, term, axis, _direction(slices), span, span < FLAT_PP))
        wf = np.abs(signed[i, :, :, iw] + signed[i, :, :, ifr])
        variation[c] = float(wf.max() - wf.min())
    return TrendReport(tuple(trends), variation)
