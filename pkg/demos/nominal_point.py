"""Exergy breakdown of the engine at a constant 106 kW request.

Builds the default calibration (synthetic engine maps plus mean-value
cylinder maps at 20% EGR), balances the point 1973 rpm / 512 Nm and shows
how the shares move with the reference temperature.

    python demos/nominal_point.py
"""

from mvexergy import EngineModel, OperatingPoint, ReferenceState, balance, percentages
from mvexergy.exergy import OUTPUT_TERMS
from mvexergy.model import state_flows

model = EngineModel.default(egr_rates=[0.2])
op = OperatingPoint.from_rpm(1973.0, 512.0)

st, flows = state_flows(op, 0.2, model)
print(f"fuel {st.m_fuel * 1e3:.2f} g/s, lambda {st.lam:.2f}, T_E {st.t_exhaust:.0f} K")
print(f"P_cyl {st.p_cyl / 1e5:.1f} bar, T_cyl {st.t_cyl:.0f} K, Q_cyl {st.q_cyl / 1e3:.1f} kW\n")

rates = balance(op, 0.2, ReferenceState(), model)
print("rates [kW]:", {k: round(v / 1e3, 2) for k, v in rates.to_dict().items()})
print(f"closure {rates.closure():.1e}\n")

print("T0 [K]  " + "  ".join(f"{t:>10}" for t in OUTPUT_TERMS))
for T0 in (263.15, 293.15, 313.15):
    p = percentages(balance(op, 0.2, ReferenceState(T0=T0), model))
    print(f"{T0:6.2f}  " + "  ".join(f"{getattr(p, t):10.2f}" for t in OUTPUT_TERMS))
