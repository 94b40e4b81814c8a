"""Physical constants (CODATA 2018 exact/recommended values, SI units)."""

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
C_LIGHT = 299792458.0  # m / s

CONSTANTS = {
    "hbar": HBAR,
    "k_B": K_B,
    "c": C_LIGHT,
}


def format_constants() -> str:
    lines = ["# CODATA 2018"]
    for name, value in CONSTANTS.items():
        lines.append(f"{name} = {value!r}")
    return "\n".join(lines)
