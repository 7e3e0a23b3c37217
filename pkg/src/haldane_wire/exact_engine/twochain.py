"""Logical two-qubit gate between two parallel chains."""
from dataclasses import dataclass
from itertools import product

import numpy as np

from ..spin_algebra import PAULI, standard_basis, two_site_gate
from .evolution import decouple_map
from .measurement import OutcomeError
from .states import PureState, ground_doublet

__all__ = [
    "CZ", "TwoChainResult", "decouple_two_chains", "two_chain_gate", "two_chain_kraus",
    "identify_two_qubit_gate", "TWO_CHAIN_LOOKUP",
]

CZ = np.diag([1, 1, 1, -1]).astype(complex)

# outcome pair -> (gate, byproduct on A, byproduct on B); logical map is
# (P_A (x) P_B) . gate up to a global phase.  Established at the AKLT point by
# exhaustive search (see ``identify_two_qubit_gate``).
TWO_CHAIN_LOOKUP = {
    ("x", "x"): ("CZ", "Y", "Y"), ("x", "y"): ("CZ", "Y", "X"),
    ("y", "x"): ("CZ", "X", "Y"), ("y", "y"): ("CZ", "X", "X"),
    ("x", "z"): ("I", "X", "Z"), ("y", "z"): ("I", "Y", "Z"),
    ("z", "x"): ("I", "Z", "X"), ("z", "y"): ("I", "Z", "Y"),
    ("z", "z"): ("I", "Z", "Z"),
}


@dataclass(frozen=True)
class TwoChainResult:
    outcomes: tuple
    probability: float
    logical: np.ndarray  # normalized 4-vector, index 2*a + b
    leakage: float


def decouple_two_chains(spec_a, spec_b, logical):
    """Joint state after decoupling the first spin of each chain.

    ``logical`` is a 4-vector over ``|G_a> (x) |G_b>``.  The returned state lives
    on the sites of chain A followed by the sites of chain B.
    """
    coeff = np.asarray(logical, dtype=complex).reshape(2, 2)
    da, db = decouple_map(spec_a), decouple_map(spec_b)
    joint = np.einsum("pq,pi,qj->ij", coeff, da, db).reshape(-1)
    return PureState(joint, spec_a.site_dims() + spec_b.site_dims())


def two_chain_gate(joint, spec_a, spec_b, outcomes=None, rng=None, basis=None):
    """Apply ``U_{A,B}`` to the two decoupled spins, measure both, read out logic.

    Parameters
    ----------
    joint : PureState
        Output of :func:`decouple_two_chains`.
    outcomes : tuple of str, optional
        Forced standard-basis outcomes ``(label_A, label_B)``; sampled with
        ``rng`` otherwise.
    """
    basis = basis or standard_basis()
    dim_a = int(np.prod(spec_a.site_dims(), dtype=np.int64))
    t = joint.amplitudes.reshape(3, dim_a // 3, 3, -1)
    u = two_site_gate().reshape(3, 3, 3, 3)
    t = np.einsum("abcd,cxdy->axby", u, t)
    amps = np.einsum("ma,nb,axby->mnxy", basis.bras, basis.bras, t)
    probs = np.sum(np.abs(amps) ** 2, axis=(2, 3)) / joint.norm() ** 2
    if outcomes is None:
        flat = probs.reshape(-1)
        k = int(rng.choice(9, p=flat / flat.sum())) if rng is not None else int(np.argmax(flat))
        ia, ib = divmod(k, 3)
    else:
        ia, ib = basis.index(outcomes[0]), basis.index(outcomes[1])
        if probs[ia, ib] < 1e-14:
            raise OutcomeError(f"forced outcomes {outcomes} have zero probability")
    branch = amps[ia, ib]
    ga = ground_doublet(spec_a.suffix(1)).basis()
    gb = ground_doublet(spec_b.suffix(1)).basis()
    out = ga.conj() @ branch @ gb.conj().T
    norm2 = np.sum(np.abs(branch) ** 2)
    leak = max(float(1.0 - np.sum(np.abs(out) ** 2) / norm2), 0.0)
    return TwoChainResult((basis.labels[ia], basis.labels[ib]), float(probs[ia, ib]),
                          out.reshape(-1) / np.sqrt(norm2), leak)


def two_chain_kraus(spec_a, spec_b, outcomes):
    """4x4 logical Kraus map (unnormalized) for a forced outcome pair."""
    cols, leaks = [], []
    for k in range(4):
        e = np.zeros(4, dtype=complex)
        e[k] = 1.0
        joint = decouple_two_chains(spec_a, spec_b, e)
        res = two_chain_gate(joint, spec_a, spec_b, outcomes)
        cols.append(res.logical * np.sqrt(res.probability))
        leaks.append(res.leakage)
    return np.array(cols).T, max(leaks)


def identify_two_qubit_gate(kraus):
    """Best match of ``kraus`` to ``(P_A (x) P_B) . G`` with ``G`` in {CZ, I}.

    Returns ``(gate, pauli_a, pauli_b, fidelity)``.
    """
    kraus = np.asarray(kraus)
    scale = np.real(np.trace(kraus.conj().T @ kraus)) / 4
    best = None
    for gname, g in (("CZ", CZ), ("I", np.eye(4))):
        for pa, pb in product("IXYZ", repeat=2):
            target = np.kron(PAULI[pa], PAULI[pb]) @ g
            fid = abs(np.trace(target.conj().T @ kraus)) ** 2 / (16 * scale)
            if best is None or fid > best[3] + 1e-12:
                best = (gname, pa, pb, float(fid))
    return best
