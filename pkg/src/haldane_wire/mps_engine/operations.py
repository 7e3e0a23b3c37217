"""Chain-level MPS operations: AKLT states, suffix doublets, measurement, correlators."""
from dataclasses import dataclass, field

import numpy as np

from ..chain_model import Mpo, build_mpo
from ..exact_engine.measurement import OutcomeError
from ..exact_engine.states import LeakageError
from ..spin_algebra import PAULI, cg_half_one, ladder_operators, spin_operators, standard_basis
from .dmrg import _charges_of, dmrg_ground
from .tensors import Mps, infer_charges

__all__ = [
    "aklt_mps", "lowering_mpo", "MpsDoublet", "suffix_doublet", "fix_phase",
    "decoupled_mps", "MpsStep", "decouple_and_measure", "entanglement",
    "string_order", "connected_correlations", "correlation_length", "CorrelationFitError",
    "project_out_first",
]


class CorrelationFitError(RuntimeError):
    """Correlation data carry no exponentially decaying signal."""


def aklt_mps(n_sites, mu, nu):
    """Open-chain AKLT state labelled by its boundary insertion ``(-Z)^nu X^mu``.

    In the ``{x, y, z}`` site basis the amplitude of ``|a_1 ... a_N>`` is
    ``tr[(-Z)^nu X^mu M[a_1] ... M[a_N]]`` with ``M[x]=X, M[y]=XZ, M[z]=Z``;
    the trace closure is written with bond dimension 4 and then compressed.
    The result is normalized and left in canonical form.
    """
    if mu not in (0, 1) or nu not in (0, 1):
        raise ValueError("mu and nu must be 0 or 1")
    x, z = PAULI["X"], PAULI["Z"]
    pauli = np.array([x, x @ z, z])
    kets = standard_basis().kets()  # kets[a][m] = <m|a>
    site = np.einsum("am,aij->mij", kets, pauli)  # S^z basis matrices
    boundary = np.linalg.matrix_power(-z, nu) @ np.linalg.matrix_power(x, mu)
    eye = np.eye(2)
    first = np.einsum("ik,mkj->mij", boundary, site).reshape(3, 4)[None]
    mid = np.einsum("ab,mij->aimbj", eye, site).reshape(4, 3, 4)
    last = np.einsum("ab,mib->aim", eye, site).reshape(4, 3)[:, :, None]
    tensors = [first] + [mid] * (n_sites - 2) + [last]
    psi = Mps(tensors)
    psi, _ = psi.compress(cutoff=1e-15)
    return psi


def lowering_mpo(site_dims, raising=False):
    """Total ``S^-`` (or ``S^+``) as a bond-dimension-2 MPO."""
    tensors = []
    n = len(site_dims)
    for k, d in enumerate(site_dims):
        sp, sm, _ = ladder_operators(1 if d == 3 else 0.5)
        op = sp if raising else sm
        w = np.zeros((2, 2, d, d), dtype=complex)
        w[0, 0] = np.eye(d)
        w[0, 1] = op
        w[1, 1] = np.eye(d)
        if k == 0:
            w = w[:1]
        if k == n - 1:
            w = w[:, 1:]
        tensors.append(w)
    return Mpo(tensors)


def _greedy_reference(psi):
    """Configuration of (approximately) largest amplitude by sequential marginals."""
    c = psi.canonicalize(0)
    conf, v = [], np.ones(1)
    for a in c.tensors:
        cand = [v @ a[:, s, :] for s in range(a.shape[1])]
        s = int(np.argmax([np.linalg.norm(x) for x in cand]))
        conf.append(s)
        v = cand[s]
    return conf


def fix_phase(psi, reference):
    """Make the amplitude of ``reference`` real positive (greedy largest as fallback)."""
    amp = psi.amplitude(reference)
    if abs(amp) < 1e-10 * psi.norm() * 3.0 ** (-psi.n_sites / 2):
        amp = psi.amplitude(_greedy_reference(psi))
    out = psi.copy()
    out.tensors[0] = out.tensors[0] * (abs(amp) / amp)
    return out


@dataclass
class MpsDoublet:
    """Phase-fixed ground doublet of a chain with one boundary qubit."""

    g0: Mps
    g1: Mps
    energies: tuple  # (E(+1/2), E(-1/2))
    spec: object
    reports: dict = field(default_factory=dict)

    def gram(self):
        return np.array([[self.g0.overlap(self.g0), self.g0.overlap(self.g1)],
                         [self.g1.overlap(self.g0), self.g1.overlap(self.g1)]])

    def to_dense(self):
        return np.array([self.g0.to_dense(), self.g1.to_dense()])


def _to_complex(psi):
    out = psi.copy()
    out.tensors = [t.astype(complex) for t in out.tensors]
    return out


def suffix_doublet(spec, start=0, chi_max=64, sweeps=30, tol=1e-10, warm=None):
    """Doublet of the chain starting at spin ``start`` from two sector runs.

    ``g0`` is the ``S^z_tot = +1/2`` ground state with the Neel-reference
    amplitude made real positive; ``g1`` is the ``-1/2`` ground state (warm
    started from the MPO-lowered ``g0``) with its phase aligned to ``S^- g0``.
    """
    if not spec.has_right_qubit or spec.has_left_qubit:
        raise ValueError("suffix doublets need boundary='right_qubit'")
    sub = spec.suffix(start) if start else spec
    dims, sc = sub.site_dims(), _charges_of(sub.site_dims())
    mpo = build_mpo(sub)
    r0 = dmrg_ground(mpo, dims, chi_max, sweeps, tol, sz_total=0.5, initial=warm)
    g0 = fix_phase(_to_complex(r0.mps), sub.neel_configuration(1))
    lowered = g0.apply_mpo(lowering_mpo(dims))
    lowered.charges = infer_charges(lowered.tensors, sc)
    lowered, _ = lowered.compress(chi_max, 1e-14, sc)
    r1 = dmrg_ground(mpo, dims, chi_max, sweeps, tol, sz_total=-0.5, initial=lowered)
    g1 = _to_complex(r1.mps)
    ov = lowered.overlap(g1)
    g1.tensors[0] = g1.tensors[0] * (abs(ov) / ov)
    reports = {"plus": r0, "minus": r1, "lowered_overlap": abs(ov)}
    return MpsDoublet(g0, g1, (r0.energy, r1.energy), sub, reports)


def project_out_first(psi, bra):
    """Contract ``<bra|`` into the first site and return the remaining MPS."""
    first = np.einsum("m,amb->ab", bra, psi.tensors[0])
    rest = [t.copy() for t in psi.tensors[1:]]
    rest[0] = np.tensordot(first, rest[0], axes=(1, 0))
    return Mps(rest)


def decoupled_mps(logical, doublet):
    """MPS of the decoupled state: spin ``j`` bound to the ``(j+1)`` doublet.

    The first tensor is the Clebsch-Gordan image of ``(a0, a1)``, shape
    ``(1, 3, 2)``; the remaining tensors stack ``g0`` and ``g1`` block-diagonally.
    """
    half = cg_half_one().half
    first = np.einsum("a,amg->mg", np.asarray(logical, dtype=complex), half)[None]
    t0, t1 = doublet.g0.tensors, doublet.g1.tensors
    n = len(t0)
    tensors = [first]
    for k in range(n):
        a, b = t0[k], t1[k]
        if k == 0:
            blk = np.zeros((2, a.shape[1], a.shape[2] + b.shape[2]), dtype=complex)
            blk[0, :, :a.shape[2]] = a[0]
            blk[1, :, a.shape[2]:] = b[0]
        elif k == n - 1:
            blk = np.concatenate([a, b], axis=0).astype(complex)
        else:
            blk = np.zeros((a.shape[0] + b.shape[0], a.shape[1], a.shape[2] + b.shape[2]),
                           dtype=complex)
            blk[:a.shape[0], :, :a.shape[2]] = a
            blk[a.shape[0]:, :, a.shape[2]:] = b
        tensors.append(blk)
    return Mps(tensors)


@dataclass(frozen=True)
class MpsStep:
    outcome: str
    probability: float
    logical: np.ndarray
    leakage: float
    probabilities: tuple


def decouple_and_measure(logical, doublet, basis, outcome=None, rng=None, max_leakage=1e-5):
    """One primitive step on the MPS engine.

    Parameters
    ----------
    logical : array_like, shape (2,)
        Amplitudes in the doublet of the chain starting at the measured spin.
    doublet : MpsDoublet
        Doublet of the chain starting one site further.
    basis : MeasBasis
    outcome : str, optional
        Forced outcome; otherwise drawn with ``rng`` (most likely one without).

    Raises
    ------
    LeakageError
        If the post-measurement state has more than ``max_leakage`` weight
        outside the new doublet.
    """
    psi = decoupled_mps(logical, doublet)
    total = psi.norm() ** 2
    branches = [project_out_first(psi, bra) for bra in basis.bras]
    probs = np.array([b.norm() ** 2 / total for b in branches])
    if outcome is None:
        if rng is not None:
            k = int(rng.choice(len(probs), p=probs / probs.sum()))
        else:
            k = int(np.argmax(probs))
    else:
        k = basis.index(outcome)
        if probs[k] < 1e-14:
            raise OutcomeError(f"outcome {outcome!r} has zero probability")
    post = branches[k]
    amps = np.array([doublet.g0.overlap(post), doublet.g1.overlap(post)])
    w = post.norm() ** 2
    leak = max(float(1.0 - np.sum(np.abs(amps) ** 2) / w), 0.0)
    if leak > max_leakage:
        raise LeakageError(f"post-measurement leakage {leak:.2e} > {max_leakage:.0e}")
    return MpsStep(basis.labels[k], float(probs[k]), amps / np.linalg.norm(amps), leak,
                   tuple(float(p) for p in probs))


def entanglement(psi, cut):
    return psi.entanglement(cut)


def string_order(psi, k, m):
    """``<S^z_k exp(i pi sum_{k<l<m} S^z_l) S^z_m>``."""
    if not k < m:
        raise ValueError("need k < m")
    _, _, sz = spin_operators(1)
    ops = {k: sz, m: sz}
    for l in range(k + 1, m):
        ops[l] = np.diag([-1.0, 1.0, -1.0])
    return float(np.real(psi.expectation(ops)))


def connected_correlations(psi, k):
    """``<S^z_k S^z_m> - <S^z_k><S^z_m>`` for all spin-1 sites ``m > k``."""
    c = psi.canonicalize(k)
    _, _, sz = spin_operators(1)
    a = c.tensors[k]
    env_op = np.einsum("asc,st,atd->cd", a.conj(), sz, a)
    env_id = np.einsum("asc,asd->cd", a.conj(), a)
    mag_k = float(np.real(np.trace(env_op)))
    out = []
    for m in range(k + 1, c.n_sites):
        b = c.tensors[m]
        if b.shape[1] != 3:
            break
        both = np.einsum("ab,asc,st,btc->", env_op, b.conj(), sz, b)
        mag_m = np.einsum("ab,asc,st,btc->", env_id, b.conj(), sz, b)
        out.append(float(np.real(both)) - mag_k * float(np.real(mag_m)))
        env_op = np.einsum("ab,asc,bsd->cd", env_op, b.conj(), b)
        env_id = np.einsum("ab,asc,bsd->cd", env_id, b.conj(), b)
    return np.array(out)


def correlation_length(psi, start=None, max_separation=None, floor=1e-12):
    """Exponential fit of ``|<S^z_k S^z_{k+r}>_c|`` over mid-chain separations.

    Returns
    -------
    xi, residual : float
        Correlation length (sites) and rms residual of the log-linear fit.

    Raises
    ------
    CorrelationFitError
        Fewer than three separations above ``floor``, or a non-decaying fit.
    """
    n = sum(1 for d in psi.site_dims if d == 3)
    k = n // 4 if start is None else start
    corr = np.abs(connected_correlations(psi, k))
    rmax = max_separation or n // 2
    r = np.arange(1, len(corr) + 1)
    sel = (r <= rmax) & (corr > floor)
    if sel.sum() < 3:
        raise CorrelationFitError("no decaying correlation signal above the floor")
    slope, icpt = np.polyfit(r[sel], np.log(corr[sel]), 1)
    if slope >= 0:
        raise CorrelationFitError("correlations do not decay")
    resid = float(np.sqrt(np.mean((icpt + slope * r[sel] - np.log(corr[sel])) ** 2)))
    return float(-1.0 / slope), resid
