"""Reference channel scenarios (delays in ns, angles in degrees)."""

from .signal_sim import PathSet

# one-path scenarios; snapshot 1 exceeds 1/(2 T0) in Doppler, snapshot 2 does not
SNAPSHOT_1 = [dict(tau_ns=601.1, phi_t_deg=11.5, phi_r_deg=59.6, nu_hz=4032.3)]
SNAPSHOT_2 = [dict(tau_ns=1117.3, phi_t_deg=21.3, phi_r_deg=160.0, nu_hz=80.6)]

# two-path channel; gain_db is |gamma|^2 in dB
TWO_PATH = [
    dict(tau_ns=646.2, phi_t_deg=67.81, phi_r_deg=-59.33, nu_hz=3225.8, gain_db=-13.13),
    dict(tau_ns=1203.7, phi_t_deg=-60.15, phi_r_deg=-123.79, nu_hz=3217.7, gain_db=-18.82),
]


def snapshot_1() -> PathSet:
    return PathSet.from_table(SNAPSHOT_1)


def snapshot_2() -> PathSet:
    return PathSet.from_table(SNAPSHOT_2)


def two_path() -> PathSet:
    return PathSet.from_table(TWO_PATH)
