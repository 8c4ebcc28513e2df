"""Steady-state engine calibration maps: fuel rate and exhaust temperature.

Maps live on a rectangular speed x torque lattice. On disk each quantity is
one CSV: header row of speeds in rpm, first column of torques in Nm, body
rows indexed by torque. The top-left cell is the literal ``torque_Nm\\speed_rpm``.
The mean-value cylinder maps use the same layout.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import DEFAULT_ENGINE, EngineSpec, radps_to_rpm
from .errors import DomainError, MapParseError, ValidationError
from .thermo import DIESEL, FuelThermo

CORNER_TOKEN = "torque_Nm\\speed_rpm"
T_EXHAUST_MIN = 350.0


def _fmt(v: float) -> str:
    return repr(float(v))


def write_map_csv(path, speed_rpm, torque, matrix) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([CORNER_TOKEN] + [_fmt(s) for s in speed_rpm])
        for tq, row in zip(torque, matrix):
            w.writerow([_fmt(tq)] + [_fmt(v) for v in row])


def read_map_csv(path):
    """Parse one map file into ``(speed_rpm, torque, matrix)``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ValidationError(f"cannot read map file {path}: {exc}") from None
    if not rows:
        raise MapParseError(f"{path}: empty file")
    header = rows[0]
    if header[0].strip() != CORNER_TOKEN:
        raise MapParseError(f"{path}: first header cell must be {CORNER_TOKEN!r}", row=1, column=1)

    def num(text, r, c):
        try:
            return float(text)
        except ValueError:
            raise MapParseError(f"{path}: not a number: {text!r}", row=r, column=c) from None

    speed = np.array([num(t, 1, j + 2) for j, t in enumerate(header[1:])])
    torque, body = [], []
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise MapParseError(f"{path}: expected {len(header)} cells, found {len(r)}", row=i)
        torque.append(num(r[0], i, 1))
        body.append([num(t, i, j + 2) for j, t in enumerate(r[1:])])
    return speed, np.array(torque), np.array(body, dtype=float).reshape(len(torque), len(speed))


def _check_grid(name: str, grid: np.ndarray):
    if grid.ndim != 1 or grid.size < 2:
        raise ValidationError(f"{name} grid needs at least two points")
    if not np.all(np.isfinite(grid)):
        raise ValidationError(f"{name} grid contains non-finite values")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError(f"{name} grid must be strictly increasing")


class GridMap:
    """Mixin for maps on a (torque, speed) lattice with named matrices."""

    speed_rpm: np.ndarray
    torque: np.ndarray
    QUANTITIES: tuple[str, ...] = ()

    def quantity(self, name: str) -> np.ndarray:
        if name not in self.QUANTITIES:
            raise ValidationError(f"unknown quantity {name!r}; expected one of {self.QUANTITIES}")
        return getattr(self, name)

    @property
    def speed_radps(self) -> np.ndarray:
        return self.speed_rpm * (math.pi / 30.0)

    def contains(self, omega: float, torque: float) -> bool:
        rpm = radps_to_rpm(omega)
        return bool(
            self.speed_rpm[0] <= rpm <= self.speed_rpm[-1]
            and self.torque[0] <= torque <= self.torque[-1]
        )


@dataclass(frozen=True, eq=False)
class EngineMaps(GridMap):
    speed_rpm: np.ndarray
    torque: np.ndarray
    fuel_rate: np.ndarray  # kg/s
    t_exhaust: np.ndarray  # K

    QUANTITIES = ("fuel_rate", "t_exhaust")

    def __post_init__(self):
        for name in ("speed_rpm", "torque", "fuel_rate", "t_exhaust"):
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
            if not np.all(np.isfinite(m)):
                raise ValidationError(f"{name} matrix contains NaN or inf")
        if np.any(self.fuel_rate < 0):
            raise ValidationError("fuel_rate must be non-negative")
        if np.any(np.diff(self.fuel_rate, axis=0) < 0):
            raise ValidationError("fuel_rate must be non-decreasing with torque at fixed speed")
        if np.any(self.t_exhaust < T_EXHAUST_MIN):
            raise ValidationError(f"t_exhaust below {T_EXHAUST_MIN} K")

    def __eq__(self, other):
        if not isinstance(other, EngineMaps):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, n), getattr(other, n))
            for n in ("speed_rpm", "torque", "fuel_rate", "t_exhaust")
        )

    def save(self, fuel_csv, texh_csv) -> None:
        write_map_csv(fuel_csv, self.speed_rpm, self.torque, self.fuel_rate)
        write_map_csv(texh_csv, self.speed_rpm, self.torque, self.t_exhaust)


def load_maps(fuel_csv, texh_csv) -> EngineMaps:
    s1, t1, fuel = read_map_csv(fuel_csv)
    s2, t2, texh = read_map_csv(texh_csv)
    if not (np.array_equal(s1, s2) and np.array_equal(t1, t2)):
        raise ValidationError("fuel-rate and exhaust-temperature maps use different grids")
    return EngineMaps(s1, t1, fuel, texh)


@dataclass(frozen=True)
class WillansParams:
    """Synthetic map parameters.

    Indicated efficiency is a concave quadratic in speed, ``eta_peak`` at
    ``rpm_peak`` falling by ``eta_drop`` at the ends of the speed range.
    Exhaust temperature is affine in BMEP [bar] and speed [rpm].
    """

    eta_peak: float = 0.46
    eta_drop: float = 0.04
    rpm_peak: float | None = None  # None: middle of the speed range
    te_base: float = 330.0
    te_per_bar: float = 30.0
    te_per_rpm: float = 0.03
    n_speed: int = 23
    n_torque: int = 17


def indicated_efficiency(rpm, engine: EngineSpec, willans: WillansParams):
    lo, hi = engine.idle_rpm, engine.max_rpm
    peak = willans.rpm_peak if willans.rpm_peak is not None else 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return willans.eta_peak - willans.eta_drop * ((np.asarray(rpm) - peak) / half) ** 2


def synth_maps(engine: EngineSpec = DEFAULT_ENGINE, fuel: FuelThermo = DIESEL,
               willans: WillansParams = WillansParams()) -> EngineMaps:
    """Willans-line fuel map and affine exhaust-temperature map.

    Fuel rate = (brake power + friction power) / (eta_i * LHV), friction from
    the same FMEP correlation used by the exergy friction term. The torque
    axis tops out at the torque giving peak power at maximum speed.
    """
    speed = np.linspace(engine.idle_rpm, engine.max_rpm, willans.n_speed)
    torque = np.linspace(0.0, engine.max_torque, willans.n_torque)
    S, T = np.meshgrid(speed, torque)
    omega = S * (math.pi / 30.0)
    p_ind = omega * T + engine.friction_power(omega)
    fuel_rate = p_ind / (indicated_efficiency(S, engine, willans) * fuel.lhv)
    bmep_bar = 4 * math.pi * T / engine.geometry.v_d_tot / 1e5
    t_exh = willans.te_base + willans.te_per_bar * bmep_bar + willans.te_per_rpm * S
    return EngineMaps(speed, torque, fuel_rate, t_exh)


def bilinear(speed_rpm: np.ndarray, torque: np.ndarray, matrix: np.ndarray, rpm: float, tq: float) -> float:
    """Bilinear interpolation on a (torque, speed) matrix; exact at nodes."""
    j = int(np.clip(np.searchsorted(speed_rpm, rpm, side="right") - 1, 0, speed_rpm.size - 2))
    i = int(np.clip(np.searchsorted(torque, tq, side="right") - 1, 0, torque.size - 2))
    u = (rpm - speed_rpm[j]) / (speed_rpm[j + 1] - speed_rpm[j])
    v = (tq - torque[i]) / (torque[i + 1] - torque[i])
    m = matrix
    # exact node values without rounding from the weights
    if u == 0.0 and v == 0.0:
        return float(m[i, j])
    return float(
        (1 - u) * (1 - v) * m[i, j]
        + u * (1 - v) * m[i, j + 1]
        + (1 - u) * v * m[i + 1, j]
        + u * v * m[i + 1, j + 1]
    )


def interpolate(maps: GridMap, omega: float, torque: float, quantity: str) -> float:
    """Bilinear lookup of ``quantity`` at speed ``omega`` [rad/s] and torque [Nm].

    No extrapolation: queries outside the grid raise :class:`DomainError`.
    """
    rpm = radps_to_rpm(omega)
    s, t = maps.speed_rpm, maps.torque
    # tolerate round-off from the rpm <-> rad/s conversion at the box edges
    eps = 1e-9 * max(abs(s[-1]), 1.0)
    if not (s[0] - eps <= rpm <= s[-1] + eps and t[0] <= torque <= t[-1]):
        raise DomainError(
            f"query ({rpm:.2f} rpm, {torque:.2f} Nm) outside map box "
            f"[{s[0]}, {s[-1]}] rpm x [{t[0]}, {t[-1]}] Nm"
        )
    rpm = min(max(rpm, s[0]), s[-1])
    k = int(np.argmin(np.abs(s - rpm)))
    if abs(s[k] - rpm) <= 1e-12 * abs(s[k]):
        rpm = float(s[k])
    return bilinear(s, t, maps.quantity(quantity), rpm, torque)
