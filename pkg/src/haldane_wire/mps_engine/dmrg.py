"""Two-site DMRG with S^z-conserving truncation."""
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ..chain_model import build_mpo
from .tensors import Mps, block_svd, infer_charges

__all__ = ["DmrgResult", "dmrg_ground", "mpo_expectation", "DmrgSolver", "reference_configuration"]

DENSE_LOCAL = 60


@dataclass
class DmrgResult:
    mps: Mps
    energy: float
    half_sweep_energies: list = field(default_factory=list)
    discarded: float = 0.0
    converged: bool = False
    monotone: bool = True

    @property
    def max_bond(self):
        return max(self.mps.bond_dims, default=1)


def _charges_of(site_dims):
    return [np.array([2, 0, -2]) if d == 3 else np.array([1, -1]) for d in site_dims]


def reference_configuration(site_charges, twice_sz):
    """Product configuration with total charge ``twice_sz``: alternating extremes, then adjusted."""
    conf = [0 if k % 2 == 0 else len(q) - 1 for k, q in enumerate(site_charges)]
    total = sum(q[c] for q, c in zip(site_charges, conf))
    for k in reversed(range(len(conf))):
        q = site_charges[k]
        while total != twice_sz:
            step = 1 if total > twice_sz else -1
            nxt = conf[k] + step
            if not 0 <= nxt < len(q):
                break
            total += q[nxt] - q[conf[k]]
            conf[k] = nxt
        if total == twice_sz:
            return conf
    raise ValueError(f"charge {twice_sz} not reachable")


def _left_env(env, a, w):
    t = np.tensordot(env, a, axes=(2, 0))  # x w s b
    t = np.tensordot(t, w, axes=([1, 2], [0, 3]))  # x b v s'
    return np.tensordot(a.conj(), t, axes=([0, 1], [0, 3])).transpose(0, 2, 1)  # a v b


def _right_env(env, a, w):
    t = np.tensordot(a, env, axes=(2, 2))  # y t z u  (ket, s, bra-side a, mpo)
    t = np.tensordot(w, t, axes=([1, 3], [3, 1]))  # w s y z
    return np.tensordot(a.conj(), t, axes=([1, 2], [1, 3])).transpose(0, 1, 2)  # x w y


def _two_site_apply(lenv, w1, w2, renv, theta):
    t = np.tensordot(lenv, theta, axes=(2, 0))  # x w s t z
    t = np.tensordot(t, w1, axes=([1, 2], [0, 3]))  # x t z v s'
    t = np.tensordot(t, w2, axes=([1, 3], [3, 0]))  # x z s' u t'
    t = np.tensordot(t, renv, axes=([1, 3], [2, 1]))  # x s' t' a
    return t


def _local_ground(apply, theta, mask, eig_tol):
    v0 = theta[mask]
    n = v0.size
    dtype = theta.dtype

    def mv(x):
        full = np.zeros(theta.shape, dtype=dtype)
        full[mask] = x.ravel()
        return apply(full)[mask]

    if n <= DENSE_LOCAL:
        h = np.array([mv(e) for e in np.eye(n, dtype=dtype)]).T
        w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
        energy, vec = w[0], v[:, 0]
    else:
        if not np.any(v0):
            v0 = np.ones(n, dtype=dtype)
        energy, vec = lanczos_ground(mv, v0, eig_tol)
    out = np.zeros(theta.shape, dtype=dtype)
    out[mask] = vec / np.linalg.norm(vec)
    return float(energy), out


def lanczos_ground(matvec, v0, residual_tol=1e-8, krylov=24, restarts=20):
    """Lowest eigenpair of a Hermitian map by restarted Lanczos.

    Restarts from the current Ritz vector, so a good ``v0`` (as supplied by
    the sweep) typically converges within one short Krylov space.
    """
    v = v0 / np.linalg.norm(v0)
    n = v.size
    for _ in range(restarts):
        basis = [v]
        alphas, betas = [], []
        w = matvec(v)
        for j in range(min(krylov, n)):
            a = np.real(np.vdot(basis[j], w))
            alphas.append(a)
            w = w - a * basis[j] - (betas[-1] * basis[j - 1] if j else 0)
            for q in basis:  # full reorthogonalization
                w = w - np.vdot(q, w) * q
            b = np.linalg.norm(w)
            theta, s = _tridiag_lowest(alphas, betas)
            if b * abs(s[-1]) < residual_tol or b < 1e-14 or j == min(krylov, n) - 1:
                break
            betas.append(b)
            basis.append(w / b)
            w = matvec(basis[-1])
        ritz = sum(c * q for c, q in zip(s, basis))
        ritz = ritz / np.linalg.norm(ritz)
        res = np.linalg.norm(matvec(ritz) - theta * ritz)
        if res < residual_tol:
            return theta, ritz
        v = ritz
    return theta, ritz


def _tridiag_lowest(alphas, betas):
    t = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
    w, u = np.linalg.eigh(t)
    return float(w[0]), u[:, 0]


def _random_mps(site_dims, chi, rng):
    n = len(site_dims)
    bonds = [1] + [min(chi, int(np.prod(site_dims[:k + 1])), int(np.prod(site_dims[k + 1:])))
                   for k in range(n - 1)] + [1]
    return Mps([rng.standard_normal((bonds[k], d, bonds[k + 1])) for k, d in enumerate(site_dims)])


def dmrg_ground(mpo, site_dims, chi_max=64, sweeps=30, tol=1e-10, sz_total=None,
                initial=None, cutoff=1e-12, eig_tol=1e-7, min_sweeps=2, seed=0):
    """Variational ground state of ``mpo`` by two-site sweeps.

    Parameters
    ----------
    mpo : Mpo
        Hamiltonian with tensors ``W[wl, wr, s_out, s_in]``.
    site_dims : tuple of int
    chi_max : int
        Bond dimension cap, at least 2.
    sweeps : int
        Maximal number of full (right and back) sweeps.
    tol : float
        Convergence threshold on the energy change between full sweeps; the
        threshold is raised to ``discarded * |E|`` when truncation dominates.
    sz_total : float, optional
        Target ``S^z_tot`` sector; enables charge-conserving blocks.
    initial : Mps, optional
        Warm start (must lie in the target sector when one is given).

    Returns
    -------
    DmrgResult
        Center-0 MPS, final energy, per-half-sweep energies, largest discarded
        weight, convergence and monotonicity flags.  A run that does not
        converge returns the best state with ``converged=False``.
    """
    if chi_max < 2:
        raise ValueError("chi_max must be at least 2")
    n = len(site_dims)
    sc = _charges_of(site_dims)
    dtype = np.result_type(*mpo.tensors, np.float64)
    if sz_total is not None:
        twice = int(round(2 * sz_total))
        if initial is None:
            initial = Mps.product(reference_configuration(sc, twice), site_dims, sc)
        else:
            initial = initial.copy()
            initial.charges = infer_charges(initial.tensors, sc)
            if initial.charges[-1][0] != twice:
                raise ValueError("initial state is not in the requested sector")
    elif initial is None:
        initial = _random_mps(site_dims, min(chi_max, 8), np.random.default_rng(seed))
    psi = initial.canonicalize(0, sc)
    if initial.charges is None:
        psi.charges = None
    dtype = np.result_type(dtype, psi.dtype)
    psi.tensors = [t.astype(dtype) for t in psi.tensors]
    w = mpo.tensors

    lenv = [None] * (n + 1)
    renv = [None] * (n + 1)
    lenv[0] = np.ones((1, 1, 1), dtype=dtype)
    renv[n] = np.ones((1, 1, 1), dtype=dtype)
    for k in range(n - 1, 0, -1):
        renv[k] = _right_env(renv[k + 1], psi.tensors[k], w[k])

    energies, discarded, monotone = [], 0.0, True
    prev, energy, converged = np.inf, np.inf, False

    warm = max(psi.bond_dims, default=1) > 1
    ramp = [] if warm else [c for c in (16, 32) if c < chi_max]

    sweep_disc = 0.0

    def optimize(k, moving_right, chi, local_tol):
        nonlocal discarded, sweep_disc
        a, b = psi.tensors[k], psi.tensors[k + 1]
        theta = np.tensordot(a, b, axes=(2, 0))
        dl, d1, d2, dr = theta.shape
        if psi.charges is not None:
            ql, qr = psi.charges[k], psi.charges[k + 2]
            mask = (ql[:, None, None, None] + sc[k][None, :, None, None]
                    + sc[k + 1][None, None, :, None]) == qr[None, None, None, :]
        else:
            mask = np.ones(theta.shape, dtype=bool)

        def apply(t):
            return _two_site_apply(lenv[k], w[k], w[k + 1], renv[k + 2], t)

        e, theta = _local_ground(apply, theta, mask, local_tol)
        m = theta.reshape(dl * d1, d2 * dr)
        qrow = qcol = None
        if psi.charges is not None:
            qrow = (psi.charges[k][:, None] + sc[k][None, :]).ravel()
            qcol = (psi.charges[k + 2][None, :] - sc[k + 1][:, None]).ravel()
        u, s, vh, qb, disc = block_svd(m, qrow, qcol, chi, cutoff)
        discarded = max(discarded, disc)
        sweep_disc = max(sweep_disc, disc)
        s = s / np.linalg.norm(s)
        if moving_right:
            psi.tensors[k] = u.reshape(dl, d1, -1)
            psi.tensors[k + 1] = (s[:, None] * vh).reshape(-1, d2, dr)
        else:
            psi.tensors[k] = (u * s[None, :]).reshape(dl, d1, -1)
            psi.tensors[k + 1] = vh.reshape(-1, d2, dr)
        if qb is not None:
            psi.charges[k + 1] = qb
        return e

    def check_monotone(sweep):
        # at fixed chi an update can raise the energy only through truncation
        nonlocal monotone
        slack = (1e-9 + sweep_disc) * max(1.0, abs(energies[-1]))
        if sweep >= len(ramp) and len(energies) > 2 * len(ramp) + 1 \
                and energies[-1] > energies[-2] + slack:
            monotone = False

    for sweep in range(sweeps):
        chi = ramp[sweep] if sweep < len(ramp) else chi_max
        local_tol = max(eig_tol, 10.0 ** (-3 - sweep))
        sweep_disc = 0.0
        for k in range(n - 1):
            energy = optimize(k, True, chi, local_tol)
            if k < n - 2:
                lenv[k + 1] = _left_env(lenv[k], psi.tensors[k], w[k])
        energies.append(energy)
        check_monotone(sweep)
        for k in range(n - 2, -1, -1):
            energy = optimize(k, False, chi, local_tol)
            renv[k + 1] = _right_env(renv[k + 2], psi.tensors[k + 1], w[k + 1])
        energies.append(energy)
        check_monotone(sweep)
        # energy changes below the truncation error are noise, not progress
        threshold = max(tol, sweep_disc * abs(energy))
        if sweep + 1 >= max(min_sweeps, len(ramp) + 1) and abs(prev - energy) < threshold:
            converged = True
            break
        prev = energy
    psi.center = 0
    return DmrgResult(psi, float(energy), energies, discarded, converged, monotone)


def mpo_expectation(mps, mpo):
    """``<psi|W|psi>/<psi|psi>``."""
    env = np.ones((1, 1, 1))
    for a, w in zip(mps.tensors, mpo.tensors):
        env = _left_env(env, a, w)
    return float(np.real(env[0, 0, 0])) / mps.norm() ** 2


class DmrgSolver(BaseEstimator):
    """Estimator front end to :func:`dmrg_ground`; ``fit(spec)`` solves the chain."""

    def __init__(self, chi_max=64, sweeps=30, tol=1e-10, sz_total=None, cutoff=1e-12):
        self.chi_max = chi_max
        self.sweeps = sweeps
        self.tol = tol
        self.sz_total = sz_total
        self.cutoff = cutoff

    def fit(self, spec, y=None, initial=None):
        res = dmrg_ground(build_mpo(spec), spec.site_dims(), self.chi_max, self.sweeps,
                          self.tol, self.sz_total, initial=initial, cutoff=self.cutoff)
        self.result_ = res
        self.mps_ = res.mps
        self.energy_ = res.energy
        self.spec_ = spec
        return self
