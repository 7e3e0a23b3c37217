"""Open-chain scheme started from a mixture of the four AKLT ground states.

States of an open AKLT chain are written as ``sum_ab C_ab |A_ab>`` with
``<a_1..a_n|A_ab> = (M[a_1] ... M[a_n])_ab``.  After a readout the matrix ``C``
factorizes, its left (row) factor carries the logical qubit and the right
factor keeps whatever the mixture left at the far edge.  The logical state is
``Y conj(v)`` for the normalized left factor ``v``.
"""
from dataclasses import dataclass
from itertools import product

import numpy as np

from ..exact_engine import PureState, measure_site
from ..mps_engine import aklt_mps
from ..spin_algebra import PAULI, standard_basis, sz_basis
from .frame import ByproductFrame, byproduct
from .program import compile_program

__all__ = [
    "RegionGuardError", "AKLT_XI", "aklt_ground_space", "aklt_virtual_basis", "MixedResource",
    "virtual_coefficients", "logical_density", "MixedPathResult", "mixed_state_wire",
    "trace_distance", "channel_distance", "readout_distribution", "sample_readouts",
    "enumerate_paths",
]

AKLT_XI = 1.0 / np.log(3.0)


class RegionGuardError(ValueError):
    """The program region comes closer than a correlation length to an edge."""


def aklt_ground_space(n_sites):
    """Normalized ``Phi^{mu nu}`` as rows, order (0,0), (0,1), (1,0), (1,1)."""
    return np.array([aklt_mps(n_sites, mu, nu).to_dense() for mu, nu in product((0, 1), repeat=2)])


def _site_matrices():
    x, z = PAULI["X"], PAULI["Z"]
    kets = standard_basis().kets()
    return np.einsum("am,aij->mij", kets, np.array([x, x @ z, z]))


def aklt_virtual_basis(n_sites):
    """Rows ``A_ab`` (index ``2a + b``) over the S^z product basis."""
    site = _site_matrices()
    t = site
    for _ in range(n_sites - 1):
        t = np.einsum("pij,mjk->pmik", t, site).reshape(-1, 2, 2)
    return t.reshape(-1, 4).T


def virtual_coefficients(state):
    """Least-squares ``C`` with ``state = sum C_ab A_ab`` and the fit residual."""
    a = aklt_virtual_basis(state.n_sites)
    c, *_ = np.linalg.lstsq(a.T, state.amplitudes, rcond=None)
    return c.reshape(2, 2), float(np.linalg.norm(a.T @ c - state.amplitudes))


def logical_density(c):
    """Logical density matrix carried by the left virtual index of ``C``."""
    rho_v = c @ c.conj().T
    rho_v = rho_v / np.trace(rho_v)
    y = PAULI["Y"]
    return y @ rho_v.conj() @ y.conj().T


@dataclass(frozen=True)
class MixedResource:
    """Ensemble ``{(w_i, psi_i)}`` realizing a density matrix on the ground space."""

    n_sites: int
    weights: tuple
    states: tuple

    @classmethod
    def from_weights(cls, n_sites, weights):
        w = np.asarray(weights, dtype=float)
        if w.shape != (4,) or np.any(w < 0) or not np.isclose(w.sum(), 1.0, atol=1e-12):
            raise ValueError("weights must be four non-negative numbers summing to 1")
        phis = aklt_ground_space(n_sites)
        dims = (3,) * n_sites
        keep = [i for i in range(4) if w[i] > 0]
        return cls(n_sites, tuple(float(w[i]) for i in keep),
                   tuple(PureState(phis[i].astype(complex), dims) for i in keep))

    @classmethod
    def from_density(cls, n_sites, rho):
        """``rho`` in the Loewdin-orthonormalized ``Phi`` basis."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (4, 4) or not np.allclose(rho, rho.conj().T, atol=1e-12):
            raise ValueError("rho must be a 4x4 Hermitian matrix")
        vals, vecs = np.linalg.eigh(rho)
        if vals.min() < -1e-12 or not np.isclose(vals.sum(), 1.0, atol=1e-12):
            raise ValueError("rho must be positive with unit trace")
        phis = aklt_ground_space(n_sites)
        gram = phis.conj() @ phis.T
        gw, gv = np.linalg.eigh(gram)
        ortho = (gv @ np.diag(gw ** -0.5) @ gv.conj().T).T @ phis  # Loewdin basis rows
        dims = (3,) * n_sites
        ws, sts = [], []
        for lam, v in zip(vals, vecs.T):
            if lam > 1e-14:
                ws.append(float(lam))
                sts.append(PureState(v @ ortho, dims).normalized())
        return cls(n_sites, tuple(ws), tuple(sts))


@dataclass
class MixedPathResult:
    outcomes: tuple
    probability: float
    bit: int
    density: np.ndarray  # frame-corrected logical output
    fidelity: float
    sites: tuple  # (l_s, l_e)
    residual: float = 0.0


def _run_path(state, path, program, xi):
    """Readout then program along forced outcomes; returns (prob, bit, C, frame, sites, fit)."""
    path = list(path)
    frame, prob, site = ByproductFrame(), 1.0, 0
    bit = None
    while bit is None:
        label = path.pop(0)
        _, p, state = measure_site(state, 0, sz_basis(), outcome=label, min_probability=0.0)
        prob *= p
        site += 1
        if label in ("+1", "-1"):
            bit = int(label == "-1") ^ frame.x_exp
        else:
            frame = frame.after(byproduct("sz", label))
        if p == 0:
            return 0.0, bit, None, None, None, 0.0
    start = site
    frame = ByproductFrame()
    plan = compile_program(program)
    for block in range(len(program)):
        done = False
        while not done:
            planned = plan.measurement(block, frame)
            label = path.pop(0)
            _, p, state = measure_site(state, 0, planned.basis, outcome=label, min_probability=0.0)
            prob *= p
            if p == 0:
                return 0.0, bit, None, None, None, 0.0
            frame = frame.after(byproduct(planned.basis.axis, label))
            done = label in planned.success
            site += 1
    end = site - 1
    remaining = state.n_sites
    if start < xi or remaining < max(2, xi):
        raise RegionGuardError(f"region [{start}, {end}] too close to an edge (xi={xi:.3f})")
    c, fit = virtual_coefficients(state)
    return prob, bit, c, frame, (start, end), fit


def mixed_state_wire(resource, program, paths, xi=AKLT_XI):
    """Run forced outcome paths on every ensemble member and merge the outputs.

    Parameters
    ----------
    resource : MixedResource
    program : LogicalProgram
    paths : iterable of tuple of str
        Readout trail (ending in ``'+1'`` or ``'-1'``) followed by the program
        outcomes.

    Returns
    -------
    list of MixedPathResult
        Per path: ensemble probability, readout bit, the frame-corrected logical
        density and its fidelity with ``U |bit>``.
    """
    u = program.unitary()
    results = []
    for path in paths:
        total, rho, fits, meta = 0.0, np.zeros((2, 2), dtype=complex), [], None
        for w, psi in zip(resource.weights, resource.states):
            p, bit, c, frame, sites, fit = _run_path(psi, path, program, xi)
            if p == 0:
                continue
            fix = np.linalg.inv(frame.operator())
            rho = rho + w * p * (fix @ logical_density(c) @ fix.conj().T)
            total += w * p
            fits.append(fit)
            meta = (bit, sites)
        if total == 0:
            continue
        rho = rho / total
        ideal = u[:, meta[0]]
        fid = float(np.real(ideal.conj() @ rho @ ideal))
        results.append(MixedPathResult(tuple(path), total, meta[0], rho, fid, meta[1], max(fits)))
    return results


def trace_distance(a, b):
    return float(0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum())


def channel_distance(run_a, run_b):
    """Largest output trace distance over the paths shared by two runs."""
    index = {r.outcomes: r for r in run_b}
    return max(trace_distance(r.density, index[r.outcomes].density)
               for r in run_a if r.outcomes in index)


def enumerate_paths(program, readout_trails=(("+1",), ("-1",), ("0", "+1"), ("0", "-1")),
                    retries=1):
    """Outcome paths: every readout trail times every success/retry pattern."""
    plan = compile_program(program)
    per_block = []
    for block in range(len(program)):
        m = plan.measurement(block, ByproductFrame())
        retry = [l for l in m.basis.labels if l not in m.success]
        options = [(s,) for s in m.success]
        for r in retry[:1]:
            for k in range(1, retries + 1):
                options += [(r,) * k + (s,) for s in m.success]
        per_block.append(options)
    paths = []
    for trail in readout_trails:
        for combo in product(*per_block):
            paths.append(tuple(trail) + tuple(x for part in combo for x in part))
    return paths


def readout_distribution(resource, max_sites=None):
    """Exact probabilities of the readout outcomes ``(zeros, sign)`` for the ensemble.

    Returns a dict ``(k, '+1' | '-1') -> probability`` (k zeros before the
    terminating outcome) plus the key ``'exhausted'``.
    """
    n = max_sites or resource.n_sites - 2
    dist = {}
    for w, psi in zip(resource.weights, resource.states):
        state, stay = psi, 1.0
        for k in range(n):
            probs = {}
            for label in ("+1", "-1", "0"):
                _, p, post = measure_site(state, 0, sz_basis(), outcome=label, min_probability=0.0)
                probs[label] = (p, post)
            for label in ("+1", "-1"):
                dist[(k, label)] = dist.get((k, label), 0.0) + w * stay * probs[label][0]
            p0, post = probs["0"]
            stay *= p0
            if p0 == 0:
                break
            state = post
        dist["exhausted"] = dist.get("exhausted", 0.0) + w * stay
    return dist


def sample_readouts(resource, shots, rng, max_sites=None):
    """Seeded readout samples drawn from the exact outcome tree.

    Returns a list of ``(sites_consumed, outcome)`` with ``outcome`` ``None``
    for an exhausted chain.
    """
    dist = readout_distribution(resource, max_sites)
    keys = list(dist)
    p = np.array([dist[k] for k in keys])
    picks = rng.choice(len(keys), size=shots, p=p / p.sum())
    out = []
    for i in picks:
        k = keys[i]
        out.append((None, None) if k == "exhausted" else (k[0] + 1, k[1]))
    return out
