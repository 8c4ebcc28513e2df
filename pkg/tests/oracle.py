"""Independent reference implementations used by the tests.

Nothing here imports the package. Property data are a separate copy of
the published 7-coefficient fits; the exergy terms are written out one
species at a time; the EGR loop is solved in closed form rather than by
iteration.
"""

import math

R = 8.314
T_STD = 298.15

# (t_low, t_mid, t_high, low a1..a7, high a1..a7)
NASA = {
    "N2": (200.0, 1000.0, 6000.0,
           [3.53100528, -1.23660988e-4, -5.02999433e-7, 2.43530612e-9, -1.40881235e-12, -1046.97628, 2.96747038],
           [2.95257637, 1.39690040e-3, -4.92631603e-7, 7.86010195e-11, -4.60755204e-15, -923.948688, 5.87188762]),
    "CO2": (200.0, 1000.0, 3500.0,
            [2.35677352, 8.98459677e-3, -7.12356269e-6, 2.45919022e-9, -1.43699548e-13, -48371.9697, 9.90105222],
            [3.85746029, 4.41437026e-3, -2.21481404e-6, 5.23490188e-10, -4.72084164e-14, -48759.1660, 2.27163806]),
    "H2O": (200.0, 1000.0, 3500.0,
            [4.19864056, -2.03643410e-3, 6.52040211e-6, -5.48797062e-9, 1.77197817e-12, -30293.7267, -0.849032208],
            [3.03399249, 2.17691804e-3, -1.64072518e-7, -9.70419870e-11, 1.68200992e-14, -30004.2971, 4.96677010]),
    "O2": (200.0, 1000.0, 3500.0,
           [3.78245636, -2.99673416e-3, 9.84730201e-6, -9.68129509e-9, 3.24372837e-12, -1063.94356, 3.65767573],
           [3.28253784, 1.48308754e-3, -7.57966669e-7, 2.09470555e-10, -2.16717794e-14, -1088.45772, 5.45323129]),
}
SPECIES = ("N2", "CO2", "H2O", "O2")

# JANAF thermochemical tables (NIST-JANAF, 4th ed.): H(T) - H(298.15) [kJ/mol]
# and S(T) [J/(mol K)] at 1 bar, plus formation enthalpies [kJ/mol].
JANAF = {
    "N2": {298.15: (0.0, 191.61), 500.0: (5.912, 206.74), 1000.0: (21.460, 228.17), 2000.0: (56.137, 252.07)},
    "O2": {298.15: (0.0, 205.15), 500.0: (6.086, 220.70), 1000.0: (22.707, 243.58), 2000.0: (59.175, 268.75)},
    "CO2": {298.15: (0.0, 213.79), 500.0: (8.305, 234.90), 1000.0: (33.397, 269.30), 2000.0: (91.439, 309.21)},
    "H2O": {298.15: (0.0, 188.83), 500.0: (6.922, 206.53), 1000.0: (26.000, 232.74), 2000.0: (72.788, 264.57)},
}
JANAF_HF = {"N2": 0.0, "O2": 0.0, "CO2": -393.522, "H2O": -241.826}


def janaf_h(sp, T):
    """Formation-referenced enthalpy from the table [J/mol]."""
    return 1000.0 * (JANAF_HF[sp] + JANAF[sp][T][0])


def janaf_s(sp, T):
    return JANAF[sp][T][1]


def _coef(sp, T):
    lo, mid, hi, a_lo, a_hi = NASA[sp]
    assert lo <= T <= hi, (sp, T)
    return a_lo if T <= mid else a_hi


def h(sp, T):
    a = _coef(sp, T)
    return R * (a[0] * T + a[1] * T**2 / 2 + a[2] * T**3 / 3 + a[3] * T**4 / 4 + a[4] * T**5 / 5 + a[5])


def s(sp, T):
    a = _coef(sp, T)
    return R * (a[0] * math.log(T) + a[1] * T + a[2] * T**2 / 2 + a[3] * T**3 / 3 + a[4] * T**4 / 4 + a[6])


def g(sp, T):
    return h(sp, T) - T * s(sp, T)


# -- fuel ---------------------------------------------------------------------

X_C, Y_H, LHV = 14.4, 24.9, 42.50e6
S_FUEL, CP_FUEL = 550.0, 450.0


def fuel_molar_mass(x=X_C, y=Y_H):
    return 0.012011 * x + 0.001008 * y


def fuel_hf(x=X_C, y=Y_H, lhv=LHV):
    # LHV = -(sum products - reactants) per kg at 298.15 K
    products = x * h("CO2", T_STD) + y / 2 * h("H2O", T_STD)
    oxygen = (x + y / 4) * h("O2", T_STD)
    return products - oxygen + lhv * fuel_molar_mass(x, y)


def g_fuel(T, x=X_C, y=Y_H):
    hf = fuel_hf(x, y) + CP_FUEL * (T - T_STD)
    sf = S_FUEL + CP_FUEL * math.log(T / T_STD)
    return hf - T * sf


def stoich_afr(x, y):
    m_o2, m_n2 = 31.998, 28.014  # g/mol
    air = (x + y / 4) * (m_o2 + 3.76 * m_n2) / 1000.0
    return air / fuel_molar_mass(x, y)


# -- mixtures -------------------------------------------------------------------

HUMID_AMBIENT = {"N2": 0.7567 + 0.0092, "CO2": 0.0003, "H2O": 0.0303, "O2": 0.2035}
DRY_AIR = {"N2": 3.76 / 4.76, "CO2": 0.0, "H2O": 0.0, "O2": 1.0 / 4.76}


def products_per_mol_fuel(lam, ambient, x=X_C, y=Y_H):
    """Brute-force mole tally of lean combustion in fresh air."""
    demand = x + y / 4
    air_moles = lam * demand / ambient["O2"]
    out = {sp: air_moles * ambient[sp] for sp in SPECIES}
    out["CO2"] += x
    out["H2O"] += y / 2
    out["O2"] -= demand
    return out


def egr_loop(lam, x_egr, ambient, x=X_C, y=Y_H):
    """Closed-form steady state of the molar EGR loop.

    Per mole fuel: fresh air F, charge n = F/(1 - x_egr), EGR stream a
    fraction k = x_egr n / (n + dN) of the exhaust. nu_in = (F + k d)/(1 - k).
    Returns (nu_in, nu_out) as dicts.
    """
    demand = x + y / 4
    d = {"N2": 0.0, "CO2": x, "H2O": y / 2, "O2": -demand}
    fresh = {sp: lam * demand / ambient["O2"] * ambient[sp] for sp in SPECIES}
    n_fresh = sum(fresh.values())
    n_charge = n_fresh / (1 - x_egr)
    k = x_egr * n_charge / (n_charge + sum(d.values()))
    nu_in = {sp: (fresh[sp] + k * d[sp]) / (1 - k) for sp in SPECIES}
    nu_out = {sp: nu_in[sp] + d[sp] for sp in SPECIES}
    return nu_in, nu_out


def fractions(moles):
    tot = sum(moles.values())
    return {sp: moles[sp] / tot for sp in SPECIES}


def atoms(moles):
    """C, H, O, N counts of a species-mole dict."""
    return (
        moles.get("CO2", 0.0),
        2 * moles.get("H2O", 0.0),
        2 * moles.get("CO2", 0.0) + moles.get("H2O", 0.0) + 2 * moles.get("O2", 0.0),
        2 * moles.get("N2", 0.0),
    )


# -- balance terms, one by one ----------------------------------------------------

def fuel_multiplier(x=X_C, y=Y_H):
    return 1.04224 + 0.011925 * x / y - 0.042 / x


def fuel_term(m_f):
    return fuel_multiplier() * LHV * m_f


def psi_ph(sp, T, T0):
    return (h(sp, T) - T0 * s(sp, T)) - (h(sp, T0) - T0 * s(sp, T0))


def psi_ch(f, f0, T0):
    return R * T0 * math.log(f / f0)


def intake_term(n1, f_in, T_I, T0, ambient):
    total = 0.0
    for sp in SPECIES:
        if f_in[sp] > 0:
            total += n1 * f_in[sp] * (psi_ch(f_in[sp], ambient[sp], T0) + psi_ph(sp, T_I, T0))
    return total


def work_term(torque, omega):
    return -torque * omega


def heat_term(q_cyl, t_cyl, T0):
    return (1 - T0 / t_cyl) * (-q_cyl)


def exhaust_term(nE, f_ex, T_E, T0, ambient):
    total = 0.0
    for sp in SPECIES:
        if f_ex[sp] > 0:
            total += nE * f_ex[sp] * (psi_ch(f_ex[sp], ambient[sp], T0) + psi_ph(sp, T_E, T0))
    return -total


def combustion_term(n_f, lam, x_egr, nu_in, nu_out, f_in, f_ex, t_cyl, p_cyl, T0, P0=1e5, x=X_C, y=Y_H):
    brace1 = g_fuel(t_cyl) - x * g("CO2", t_cyl) - y / 2 * g("H2O", t_cyl) + (x + y / 4) * g("O2", t_cyl)
    brace2 = lam / (1 - x_egr) * (x + y / 4) * 3.76 * R * t_cyl * math.log(f_in["N2"] / f_ex["N2"])
    acc = 0.0
    for sp in ("CO2", "H2O", "O2"):
        if nu_in[sp] != 0:
            acc += nu_in[sp] * math.log(f_in[sp] * p_cyl / P0)
        if nu_out[sp] != 0:
            acc -= nu_out[sp] * math.log(f_ex[sp] * p_cyl / P0)
    brace3 = R * t_cyl * acc
    c = -T0 / t_cyl * n_f
    return c * brace1 + c * brace2 + c * brace3


def friction_term(omega, c1=75.0, c2=0.458, c3=0.4, stroke=0.105, v_d=6.4e-3):
    sp = 2 * stroke * omega / (2 * math.pi)
    fmep = 1000 * (c1 + c2 * omega + c3 * sp**2)
    return -omega / (4 * math.pi) * fmep * v_d


# -- cylinder kinematics and correlations ----------------------------------------------

def slider_crank_volume(theta_deg, v_d_cyl=0.8e-3, r_c=17.5, R_ratio=3.2):
    th = math.radians(theta_deg)
    vc = v_d_cyl / (r_c - 1)
    return vc + v_d_cyl / 2 * (1 + R_ratio - math.cos(th) - math.sqrt(R_ratio**2 - math.sin(th) ** 2))


def wiebe(theta, soc=-8.0, dur=80.0, a=6.908, m=1.5):
    if theta <= soc:
        return 0.0
    return 1 - math.exp(-a * ((theta - soc) / dur) ** (m + 1))


def hohenberg(V, p_pa, T, S_p, c1=130.0, c2=1.4):
    return c1 * V**-0.06 * (p_pa / 1e5) ** 0.8 * T**-0.4 * (S_p + c2) ** 0.8
