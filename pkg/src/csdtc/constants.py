"""Physical constants and unit factors.

CODATA-2018 exact SI values. The 2019 SI redefinition fixed e and h, so
everything derived from them here is bit-stable across platforms.
"""

import math

E_CHARGE = 1.602176634e-19
"""Elementary charge e (C, exact)."""

PLANCK_H = 6.62607015e-34
"""Planck constant h (J s, exact)."""

HBAR = PLANCK_H / (2.0 * math.pi)
"""Reduced Planck constant (J s)."""

PHI0 = PLANCK_H / (2.0 * E_CHARGE)
"""Superconducting flux quantum h/2e (Wb)."""

PHI0_REDUCED = PHI0 / (2.0 * math.pi)
"""Reduced flux quantum hbar/2e (Wb)."""

# Unit factors. Internally: capacitance in F, inductance in H, energies as
# frequencies E/h in GHz; fF/nA/nH appear only at the I/O boundary.
FF = 1e-15
NA = 1e-9
NH = 1e-9
GHZ = 1e9
