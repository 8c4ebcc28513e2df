"""Engine description shared by the cylinder, map and exergy modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError


def rpm_to_radps(rpm):
    if np.ndim(rpm):
        return np.asarray(rpm, dtype=float) * (math.pi / 30.0)
    return rpm * math.pi / 30.0


def radps_to_rpm(omega):
    if np.ndim(omega):
        return np.asarray(omega, dtype=float) * (30.0 / math.pi)
    return omega * 30.0 / math.pi


@dataclass(frozen=True)
class EngineGeometry:
    n_cyl: int = 8
    v_d_tot: float = 6.4e-3  # m^3
    r_c: float = 17.5
    bore: float = 0.0982  # m
    stroke: float = 0.105  # m
    conrod_ratio: float = 3.2  # conrod length / crank radius
    t_wall: float = 450.0  # K

    def __post_init__(self):
        if self.r_c <= 1:
            raise ValidationError(f"compression ratio must exceed 1, got {self.r_c}")
        if self.conrod_ratio <= 1:
            raise ValidationError(f"conrod ratio must exceed 1, got {self.conrod_ratio}")
        if self.n_cyl < 1 or self.v_d_tot <= 0 or self.bore <= 0 or self.stroke <= 0:
            raise ValidationError("geometry entries must be positive")
        swept = self.n_cyl * math.pi / 4 * self.bore**2 * self.stroke
        if abs(swept - self.v_d_tot) > 0.01 * self.v_d_tot:
            raise ValidationError(
                f"bore/stroke give {swept * 1e3:.3f} L, inconsistent with "
                f"V_d,tot = {self.v_d_tot * 1e3:.3f} L"
            )

    @property
    def v_d_cyl(self) -> float:
        return self.v_d_tot / self.n_cyl

    @property
    def v_clearance(self) -> float:
        return self.v_d_cyl / (self.r_c - 1)

    @property
    def piston_area(self) -> float:
        return math.pi / 4 * self.bore**2

    def mean_piston_speed(self, omega):
        """S_p = 2 * stroke * rev/s = stroke * omega / pi [m/s]."""
        return self.stroke * omega / np.pi


@dataclass(frozen=True)
class EngineSpec:
    """Engine-level parameters.

    FMEP coefficients are in kPa, s kPa and s^2 kPa/m^2. ``boost_ratio`` is
    the charge-air pressure over the intake reference pressure used for the
    speed-density air flow.
    """

    geometry: EngineGeometry = field(default_factory=EngineGeometry)
    c1: float = 75.0
    c2: float = 0.458
    c3: float = 0.4
    idle_rpm: float = 800.0
    max_rpm: float = 3000.0
    peak_power: float = 260e3  # W, at max_rpm
    eta_v: float = 0.90
    boost_ratio: float = 2.0

    @property
    def max_torque(self) -> float:
        return self.peak_power / rpm_to_radps(self.max_rpm)

    def fmep(self, omega):
        """Friction mean effective pressure [Pa]."""
        omega = np.asarray(omega, dtype=float)
        sp = self.geometry.mean_piston_speed(omega)
        out = 1000.0 * (self.c1 + self.c2 * omega + self.c3 * sp**2)
        return float(out) if out.ndim == 0 else out

    def friction_power(self, omega):
        """Friction power [W], positive."""
        out = np.asarray(omega, dtype=float) / (4 * np.pi) * self.fmep(omega) * self.geometry.v_d_tot
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class OperatingPoint:
    omega: float  # rad/s
    torque: float  # Nm

    def __post_init__(self):
        if self.omega < 0:
            raise DomainError(f"engine speed must be non-negative, got {self.omega}")

    @classmethod
    def from_rpm(cls, rpm: float, torque: float) -> OperatingPoint:
        return cls(rpm_to_radps(rpm), torque)

    @property
    def rpm(self) -> float:
        return radps_to_rpm(self.omega)

    @property
    def power(self) -> float:
        return self.omega * self.torque


DEFAULT_ENGINE = EngineSpec()
