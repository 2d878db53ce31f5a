"""Example states used to illustrate entanglement detection.

All coefficient transcriptions live here so they can be audited in one place.
"""

from __future__ import annotations

import math

import numpy as np

# single-qubit basis: index 0 = up (m = +1/2), index 1 = down
_UP = np.array([1.0, 0.0])
_DN = np.array([0.0, 1.0])


def bell_states() -> dict[str, np.ndarray]:
    uu = np.kron(_UP, _UP)
    ud = np.kron(_UP, _DN)
    du = np.kron(_DN, _UP)
    dd = np.kron(_DN, _DN)
    r = 1 / math.sqrt(2)
    return {
        "phi+": r * (uu + dd),
        "phi-": r * (uu - dd),
        "psi+": r * (ud + du),
        "psi-": r * (ud - du),
    }


# four-qubit state built from pairs of Bell states, qubits ordered (1, 2, 3, 4)
# with (1, 2) and (3, 4) forming the Bell pairs:
#   (sqrt6 + 1)/6 |phi+ phi+> + (sqrt6 - 1)/6 |phi- phi-> + 1/3 |psi+ psi+>
#   + 1/2 (|phi+ psi+> + |psi+ phi+>)
# squared weights: (7 + 2 sqrt6)/36 + (7 - 2 sqrt6)/36 + 4/36 + 2/4 = 1
PSI4_TERMS = (
    ((math.sqrt(6) + 1) / 6, "phi+", "phi+"),
    ((math.sqrt(6) - 1) / 6, "phi-", "phi-"),
    (1 / 3, "psi+", "psi+"),
    (0.5, "phi+", "psi+"),
    (0.5, "psi+", "phi+"),
)
PSI4_ROTATION = 49 * math.pi / 60
PSI4_ANGLES = (0.0, 49 * math.pi / 60, 49 * math.pi / 30)
# Extra z rotation aligning the Bell-pair phase convention with Theta(J) here.
# A rotation by pi flips the sign of the mixed phi+/psi+ terms, i.e. Theta(J) -> Theta(-J).
PSI4_FRAME = math.pi


def psi4() -> np.ndarray:
    b = bell_states()
    out = np.zeros(16, dtype=complex)
    for c, left, right in PSI4_TERMS:
        out += c * np.kron(b[left], b[right])
    return out


# collective-mode Fock amplitudes, times sqrt(10):
#   2 cos(10/17), -sqrt5 sin(2/3), 2 sin(10/17), -sqrt5 cos(2/3), 1
# squared: 4 (cos^2 + sin^2) + 5 (sin^2 + cos^2) + 1 = 10
CHI4_ANGLES = (0.0, math.pi ** 2 / 4, math.pi ** 2 / 2)
# the amplitudes refer to a time origin at the middle probe
CHI4_OFFSET = -math.pi ** 2 / 4


def chi4_coefficients() -> np.ndarray:
    a, b = 10 / 17, 2 / 3
    raw = np.array([
        2 * math.cos(a),
        -math.sqrt(5) * math.sin(b),
        2 * math.sin(a),
        -math.sqrt(5) * math.cos(b),
        1.0,
    ])
    return raw / math.sqrt(10)
