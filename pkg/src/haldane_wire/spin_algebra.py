"""Exact spin operators, measurement bases, Clebsch-Gordan data and symmetries.

Basis conventions (hbar = 1):

* spin-1 local index ``0, 1, 2`` is ``S^z = +1, 0, -1``;
* spin-1/2 local index ``0, 1`` is ``S^z = +1/2, -1/2``.

Charges are stored as integers ``2 S^z`` so that half-integer sectors stay exact.
"""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.linalg import expm

__all__ = [
    "SPIN1_CHARGES", "SPIN_HALF_CHARGES", "spin_operators", "ladder_operators",
    "MeasBasis", "standard_basis", "rotated_basis", "sz_basis",
    "measurement_observable", "CgMap", "cg_half_one", "SymmetryAction",
    "symmetry_action", "two_site_gate", "logical_rz", "logical_rx", "PAULI",
]

SPIN1_CHARGES = np.array([2, 0, -2])
SPIN_HALF_CHARGES = np.array([1, -1])

_SQ2 = np.sqrt(2.0)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _spin_value(spin):
    s = float(spin)
    if s not in (0.5, 1.0):
        raise ValueError(f"unsupported spin value {spin!r}; expected 1/2 or 1")
    return s


def ladder_operators(spin):
    """Return ``(S^+, S^-, S^z)`` in the S^z-diagonal basis."""
    s = _spin_value(spin)
    m = np.arange(s, -s - 1, -1)
    sz = np.diag(m).astype(complex)
    sp = np.zeros((len(m), len(m)), dtype=complex)
    for i in range(1, len(m)):
        # S^+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>
        sp[i - 1, i] = np.sqrt(s * (s + 1) - m[i] * (m[i] + 1))
    return sp, sp.conj().T, sz


def spin_operators(spin):
    """Return the Cartesian spin matrices ``(S^x, S^y, S^z)``.

    Parameters
    ----------
    spin : {1/2, 1}
        Spin quantum number of the site.

    Returns
    -------
    sx, sy, sz : ndarray
        Hermitian matrices, ``S^z = diag(s, ..., -s)``.
    """
    sp, sm, sz = ladder_operators(spin)
    return 0.5 * (sp + sm), -0.5j * (sp - sm), sz


@dataclass(frozen=True)
class MeasBasis:
    """Orthonormal projective basis of a spin-1 site.

    ``bras[k]`` is the row vector of ``<label_k|`` in the S^z basis, so the
    amplitude of outcome ``k`` on a ket ``psi`` is ``bras[k] @ psi``.
    """

    labels: Tuple[str, ...]
    bras: np.ndarray
    observable: np.ndarray
    axis: str = "z"
    theta: float = 0.0

    def index(self, label):
        return self.labels.index(label)

    def kets(self):
        return self.bras.conj()

    def key(self):
        """Hashable descriptor used for caching and trace records."""
        return (self.axis, float(self.theta), self.labels)


def measurement_observable(theta):
    """Return ``m^z(theta) = -[cos(t)(Sx^2 - Sy^2) + sin(t)(Sx Sy + Sy Sx)]``."""
    sx, sy, _ = spin_operators(1)
    return -(np.cos(theta) * (sx @ sx - sy @ sy)
             + np.sin(theta) * (sx @ sy + sy @ sx))


def _observable_from_bras(bras, eigenvalues):
    kets = bras.conj()
    return sum(lam * np.outer(k, b) for lam, k, b in zip(eigenvalues, kets, bras))


_BRA_X = np.array([-1.0, 0.0, 1.0], dtype=complex) / _SQ2
_BRA_Y = np.array([1.0, 0.0, 1.0], dtype=complex) / _SQ2
_BRA_Z = np.array([0.0, 1.0, 0.0], dtype=complex)


def standard_basis():
    """The ``{<x|, <y|, <z|}`` basis built from the zero-eigenvalue states of S^a."""
    bras = np.array([_BRA_X, _BRA_Y, _BRA_Z])
    return MeasBasis(("x", "y", "z"), bras, measurement_observable(0.0), "std", 0.0)


def rotated_basis(axis, theta):
    """Rotated measurement basis used for logical rotations.

    For ``axis='z'`` the bras are ``(1/2)[(1 +- e^{it})<x| + (1 -+ e^{it})<y|]``
    and ``<z|``; for ``axis='x'`` the roles of ``<x|`` and ``<z|`` are exchanged.
    The first two outcomes are labelled ``'+'`` and ``'-'``, the third outcome
    (no rotation consumed) keeps the name of the untouched bra.
    """
    theta = float(theta)
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    e = np.exp(1j * theta)
    if axis == "z":
        a, rest, label = _BRA_X, _BRA_Z, "z"
    elif axis == "x":
        a, rest, label = _BRA_Z, _BRA_X, "x"
    else:
        raise ValueError(f"unsupported rotation axis {axis!r}")
    plus = 0.5 * ((1 + e) * a + (1 - e) * _BRA_Y)
    minus = 0.5 * ((1 - e) * a + (1 + e) * _BRA_Y)
    bras = np.array([plus, minus, rest])
    if axis == "z":
        obs = measurement_observable(theta)
    else:
        obs = _observable_from_bras(bras, (1.0, -1.0, 0.0))
    return MeasBasis(("+", "-", label), bras, obs, axis, theta)


def sz_basis():
    """S^z eigenbasis used for readout and initialization."""
    _, _, sz = spin_operators(1)
    return MeasBasis(("+1", "0", "-1"), np.eye(3, dtype=complex), sz, "sz", 0.0)


@dataclass(frozen=True)
class CgMap:
    """Isometry of ``edge(1/2) x spin-1`` onto the S=1/2 and S=3/2 sectors.

    Attributes
    ----------
    half : ndarray, shape (2, 3, 2)
        ``half[a, m, g]``: amplitude of ``|m>_site (x) |G_g>`` in the image of the
        logical basis state ``a``.
    quartet : ndarray, shape (4, 3, 2)
        The S=3/2 states, ``S^z = 3/2 ... -3/2``, same index layout.
    """

    half: np.ndarray
    quartet: np.ndarray

    def isometry(self):
        """6x6 matrix; rows are (site, edge) pairs, columns the six sector states."""
        cols = [v.reshape(6) for v in self.half] + [v.reshape(6) for v in self.quartet]
        return np.array(cols).T

    def apply(self, a0, a1):
        """Return the (site, edge) amplitude matrix for logical input (a0, a1)."""
        return a0 * self.half[0] + a1 * self.half[1]


def cg_half_one():
    """Clebsch-Gordan data for ``1/2 (x) 1 = 1/2 (+) 3/2``.

    The S=1/2 block is fixed in the decoupling convention

        a0 -> sqrt(2/3) [ |0>|G0>/sqrt(2) - |+1>|G1> ]
        a1 -> sqrt(2/3) [ |-1>|G0> - |0>|G1>/sqrt(2) ]

    which makes ``G1`` the normalized total lowering of ``G0``.
    """
    half = np.zeros((2, 3, 2), dtype=complex)
    c = np.sqrt(2.0 / 3.0)
    half[0, 1, 0] = c / _SQ2
    half[0, 0, 1] = -c
    half[1, 2, 0] = c
    half[1, 1, 1] = -c / _SQ2

    # quartet from the stretched state by repeated total lowering
    _, sm1, _ = ladder_operators(1)
    _, smh, _ = ladder_operators(0.5)
    lower = np.kron(sm1, np.eye(2)) + np.kron(np.eye(3), smh)
    v = np.zeros(6, dtype=complex)
    v[0] = 1.0  # |+1> (x) |up>
    quartet = [v]
    for _ in range(3):
        v = lower @ v
        v = v / np.linalg.norm(v)
        quartet.append(v)
    return CgMap(half, np.array([q.reshape(3, 2) for q in quartet]))


@dataclass(frozen=True)
class SymmetryAction:
    """A (possibly antiunitary) symmetry ``g = U K^antiunitary``.

    ``conjugate(O)`` returns ``g O g^{-1}``.
    """

    kind: str
    unitary: np.ndarray
    antiunitary: bool = False
    sites: int = field(default=1)

    def conjugate(self, op):
        op = np.asarray(op)
        if op.shape != self.unitary.shape:
            raise ValueError(f"operator shape {op.shape} does not match "
                             f"symmetry representation {self.unitary.shape}")
        inner = op.conj() if self.antiunitary else op
        return self.unitary @ inner @ self.unitary.conj().T

    def apply(self, vec):
        vec = np.asarray(vec)
        return self.unitary @ (vec.conj() if self.antiunitary else vec)

    def then(self, other):
        """Composite ``other o self`` (apply self first)."""
        if other.antiunitary:
            u = other.unitary @ self.unitary.conj()
        else:
            u = other.unitary @ self.unitary
        return SymmetryAction(f"{other.kind}*{self.kind}", u,
                              self.antiunitary ^ other.antiunitary, self.sites)

    def tensor(self, other):
        if self.antiunitary != other.antiunitary:
            raise ValueError("cannot tensor a unitary with an antiunitary action")
        return SymmetryAction(f"{self.kind}(x){other.kind}",
                              np.kron(self.unitary, other.unitary),
                              self.antiunitary, self.sites + other.sites)


def symmetry_action(kind, spin=1):
    """Build a symmetry action on one site.

    Parameters
    ----------
    kind : str
        ``'TR'`` (time reversal ``e^{-i pi S^y} K``) or ``'pi_x'``, ``'pi_y'``,
        ``'pi_z'`` (``e^{i pi S^a}``).
    """
    sx, sy, sz = spin_operators(spin)
    if kind == "TR":
        return SymmetryAction("TR", expm(-1j * np.pi * sy), antiunitary=True)
    axes = {"pi_x": sx, "pi_y": sy, "pi_z": sz}
    if kind not in axes:
        raise ValueError(f"unsupported symmetry kind {kind!r}")
    u = expm(1j * np.pi * axes[kind])
    u[np.abs(u) < 1e-15] = 0.0
    return SymmetryAction(kind, u)


def two_site_gate():
    """``U = 1 - (1/2)(S^z + (S^z)^2) (x) (S^z + (S^z)^2)`` on two spin-1 sites."""
    _, _, sz = spin_operators(1)
    q = sz + sz @ sz
    return np.eye(9, dtype=complex) - 0.5 * np.kron(q, q)


def logical_rz(theta):
    """``R^z(theta) = |0><0| + e^{i theta}|1><1|``."""
    return np.diag([1.0, np.exp(1j * theta)]).astype(complex)


def logical_rx(theta):
    """``R^x(theta) = |+><+| + e^{i theta}|-><-|``."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / _SQ2
    return h @ logical_rz(theta) @ h
