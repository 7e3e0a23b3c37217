"""Pauli byproduct frames and the per-outcome byproduct table."""
from dataclasses import dataclass

import numpy as np

from ..spin_algebra import PAULI

__all__ = ["ByproductFrame", "BYPRODUCTS", "byproduct", "SUCCESS_LABELS", "RETRY_LABEL"]

# (basis axis, outcome label) -> logical Pauli left behind by the measurement.
# Rotated bases additionally apply R^z(-phi) (axis z) or R^x(phi) (axis x)
# before the Pauli; the retry outcome applies the Pauli only.
BYPRODUCTS = {
    ("std", "x"): "X", ("std", "y"): "Y", ("std", "z"): "Z",
    ("z", "+"): "X", ("z", "-"): "Y", ("z", "z"): "Z",
    ("x", "+"): "Z", ("x", "-"): "Y", ("x", "x"): "X",
    ("sz", "0"): "Z",
}
SUCCESS_LABELS = ("+", "-")
RETRY_LABEL = {"z": "z", "x": "x"}

# P = phase * X^x Z^z
_DECOMP = {"I": (0, 0, 1), "X": (1, 0, 1), "Z": (0, 1, 1), "Y": (1, 1, 1j)}


def byproduct(axis, label):
    return BYPRODUCTS[(axis, label)]


@dataclass(frozen=True)
class ByproductFrame:
    """Accumulated logical Pauli ``phase * X^x_exp Z^z_exp``.

    The physical logical state equals the frame applied to the ideal state.
    """

    x_exp: int = 0
    z_exp: int = 0
    phase: complex = 1.0

    def operator(self):
        return (self.phase * np.linalg.matrix_power(PAULI["X"], self.x_exp)
                @ np.linalg.matrix_power(PAULI["Z"], self.z_exp))

    def after(self, pauli):
        """Frame of ``P . F`` (``pauli`` acts after the current frame)."""
        px, pz, pp = _DECOMP[pauli]
        # Z^pz X^x = (-1)^(pz x) X^x Z^pz
        sign = -1 if (pz and self.x_exp) else 1
        return ByproductFrame((self.x_exp + px) % 2, (self.z_exp + pz) % 2,
                              complex(self.phase * pp * sign))

    def correct(self, logical):
        """Undo the frame on a logical amplitude vector."""
        return np.linalg.solve(self.operator(), np.asarray(logical))

    @property
    def is_identity(self):
        return self.x_exp == 0 and self.z_exp == 0

