"""Logical programs, Euler decomposition and adaptive measurement plans."""
import json
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..spin_algebra import logical_rx, logical_rz, rotated_basis, standard_basis
from .frame import BYPRODUCTS, RETRY_LABEL

__all__ = [
    "Rotation", "LogicalProgram", "MeasurementPlan", "PlannedMeasurement",
    "compile_program", "euler_zxz",
]


@dataclass(frozen=True)
class Rotation:
    axis: str
    angle: float

    def __post_init__(self):
        if self.axis not in ("z", "x"):
            raise ValueError(f"rotation axis must be 'z' or 'x', got {self.axis!r}")
        if not np.isfinite(self.angle):
            raise ValueError("rotation angle must be finite")

    def unitary(self):
        return logical_rz(self.angle) if self.axis == "z" else logical_rx(self.angle)

    def is_trivial(self):
        return np.isclose(np.exp(1j * self.angle), 1.0, atol=1e-15)


@dataclass(frozen=True)
class LogicalProgram:
    """Rotations in application order, optionally followed by a readout."""

    rotations: Tuple[Rotation, ...] = ()
    readout: bool = False

    def __len__(self):
        return len(self.rotations)

    def unitary(self):
        u = np.eye(2, dtype=complex)
        for r in self.rotations:
            u = r.unitary() @ u
        return u

    @classmethod
    def from_list(cls, items, readout=False):
        return cls(tuple(Rotation(str(d["axis"]), float(d["angle"])) for d in items), readout)

    @classmethod
    def from_json(cls, text):
        """Parse a rotation list ``[{"axis": "z", "angle": 1.57}, ...]`` or a
        ``{"rotations": [...], "readout": bool}`` document."""
        doc = json.loads(text) if isinstance(text, str) else text
        if isinstance(doc, dict):
            return cls.from_list(doc.get("rotations", []), bool(doc.get("readout", False)))
        return cls.from_list(doc)

    def to_list(self):
        return [{"axis": r.axis, "angle": r.angle} for r in self.rotations]

    @classmethod
    def euler(cls, target):
        """Three-rotation program ``[z(a), x(b), z(c)]`` reproducing ``target`` up to phase."""
        a, b, c = euler_zxz(target)
        return cls((Rotation("z", a), Rotation("x", b), Rotation("z", c)))


def euler_zxz(u):
    """Angles ``(a, b, c)`` with ``u ~ R^z(c) R^x(b) R^z(a)`` (global phase dropped)."""
    u = np.asarray(u, dtype=complex)
    u = u / np.sqrt(np.linalg.det(u))
    alpha, beta = u[0, 0], u[0, 1]
    b = 2 * np.arctan2(abs(beta), abs(alpha))
    s = -2 * np.angle(alpha) if abs(alpha) > 1e-12 else 0.0
    d = 2 * (np.angle(beta) + np.pi / 2) if abs(beta) > 1e-12 else 0.0
    a, c = (s + d) / 2, (s - d) / 2
    return float(a), float(b), float(c)


@dataclass(frozen=True)
class PlannedMeasurement:
    basis: object
    measured_angle: float
    success: tuple  # outcome labels that consume the rotation


@dataclass(frozen=True)
class MeasurementPlan:
    """Repeat-until-success blocks, one per rotation.

    For a rotation ``R^a(theta)`` and current frame ``X^x Z^z`` the measured
    angle is ``-theta (-1)^x`` (axis z) or ``theta (-1)^z`` (axis x); outcome
    ``'z'`` (axis z) or ``'x'`` (axis x) leaves only its Pauli and the block is
    retried on the next site.  Trivial rotations are a single standard-basis
    measurement that always completes the block.
    """

    program: LogicalProgram
    rules: dict = field(default_factory=lambda: dict(BYPRODUCTS))

    @property
    def blocks(self):
        return self.program.rotations

    def measurement(self, block, frame):
        rot = self.blocks[block]
        if rot.is_trivial():
            return PlannedMeasurement(standard_basis(), 0.0, ("x", "y", "z"))
        if rot.axis == "z":
            phi = -rot.angle * (-1) ** frame.x_exp
        else:
            phi = rot.angle * (-1) ** frame.z_exp
        basis = rotated_basis(rot.axis, phi)
        success = tuple(l for l in basis.labels if l != RETRY_LABEL[rot.axis])
        return PlannedMeasurement(basis, float(phi), success)


def compile_program(program):
    return MeasurementPlan(program)
