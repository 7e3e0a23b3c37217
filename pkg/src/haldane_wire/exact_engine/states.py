"""Dense state vectors, sector eigensolves and ground doublets."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse.linalg as spla
from sklearn.base import BaseEstimator

from ..chain_model import build_sector, ChainSpec
from ..spin_algebra import ladder_operators, spin_operators

__all__ = [
    "PureState", "GroundDoublet", "LogicalReadout", "SectorEigenpairs",
    "EigensolverError", "DoubletError", "LeakageError",
    "ground_sector", "ground_doublet", "embed_logical", "extract_logical",
    "total_ladder", "total_spin_squared", "ExactDiagonalizer",
]

DENSE_CUTOFF = 600


class EigensolverError(RuntimeError):
    """Sparse eigensolver did not reach the requested residual."""


class DoubletError(RuntimeError):
    """The low-energy sector is not an isolated S_tot = 1/2 doublet."""


class LeakageError(RuntimeError):
    """State weight outside the expected logical subspace is too large."""


@dataclass(frozen=True)
class PureState:
    """State vector over the product basis of ``site_dims`` (first site slowest)."""

    amplitudes: np.ndarray
    site_dims: tuple

    def __post_init__(self):
        dim = int(np.prod(self.site_dims, dtype=np.int64))
        if self.amplitudes.shape != (dim,):
            raise ValueError(f"amplitude vector of shape {self.amplitudes.shape} "
                             f"does not match site dims {self.site_dims}")

    @property
    def n_sites(self):
        return len(self.site_dims)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        return PureState(self.amplitudes / self.norm(), self.site_dims)

    def overlap(self, other):
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self):
        return self.amplitudes.reshape(self.site_dims)

    def apply_site(self, op, site):
        t = np.tensordot(op, self.tensor(), axes=([1], [site]))
        t = np.moveaxis(t, 0, site)
        return PureState(t.reshape(-1), self.site_dims)

    def apply_pair(self, op, site):
        """Apply a two-site operator on ``(site, site+1)``."""
        d1, d2 = self.site_dims[site], self.site_dims[site + 1]
        t = self.tensor()
        left = int(np.prod(self.site_dims[:site], dtype=np.int64))
        t = t.reshape(left, d1 * d2, -1)
        t = np.einsum("ab,xby->xay", op, t)
        return PureState(t.reshape(-1), self.site_dims)

    def reduced_density(self, sites):
        """Reduced density matrix of a block of sites."""
        sites = list(sites)
        t = self.tensor()
        rest = [i for i in range(self.n_sites) if i not in sites]
        t = np.transpose(t, sites + rest)
        d = int(np.prod([self.site_dims[i] for i in sites]))
        m = t.reshape(d, -1)
        return m @ m.conj().T

    def schmidt_weights(self, cut):
        """Schmidt probabilities across the cut between sites ``cut-1`` and ``cut``."""
        d = int(np.prod(self.site_dims[:cut], dtype=np.int64))
        s = np.linalg.svd(self.amplitudes.reshape(d, -1), compute_uv=False)
        w = s ** 2
        return w[w > 1e-15 * w.sum()] / w.sum()


@dataclass(frozen=True)
class GroundDoublet:
    """Phase-fixed S_tot = 1/2 pair; ``g1`` is the normalized total lowering of ``g0``."""

    g0: PureState
    g1: PureState
    energy: float
    excitation: float
    spec: ChainSpec
    phase_convention: str = "neel-reference amplitude real positive; g1 = S^- g0"

    @property
    def site_dims(self):
        return self.g0.site_dims

    def basis(self):
        return np.array([self.g0.amplitudes, self.g1.amplitudes])


@dataclass(frozen=True)
class LogicalReadout:
    a0: complex
    a1: complex
    leakage: float

    @property
    def vector(self):
        return np.array([self.a0, self.a1])


@dataclass(frozen=True)
class SectorEigenpairs:
    energies: np.ndarray
    vectors: np.ndarray  # shape (k, sector_dim)
    codes: np.ndarray
    site_dims: tuple
    residuals: np.ndarray

    def state(self, i):
        full = np.zeros(int(np.prod(self.site_dims, dtype=np.int64)), dtype=complex)
        full[self.codes] = self.vectors[i]
        return PureState(full, self.site_dims)


def _lowest(h, k, tol=1e-12):
    n = h.shape[0]
    if n <= DENSE_CUTOFF or k >= n - 1:
        w, v = np.linalg.eigh(h.toarray())
        return w[:k], v[:, :k]
    v0 = np.random.default_rng(0).standard_normal(n)
    w, v = spla.eigsh(h, k=k, which="SA", v0=v0, tol=tol, ncv=max(2 * k + 1, 24))
    order = np.argsort(w)
    return w[order], v[:, order]


def ground_sector(spec, sz_total, k=1, residual_tol=1e-9):
    """Lowest ``k`` eigenpairs of the chain in the ``S^z_tot = sz_total`` sector.

    Raises
    ------
    EigensolverError
        If any returned pair has ``||Hv - Ev|| >= residual_tol``.
    """
    twice = int(round(2 * sz_total))
    h, codes = build_sector(spec, twice)
    k = min(k, h.shape[0])
    w, v = _lowest(h, k)
    res = np.array([np.linalg.norm(h @ v[:, i] - w[i] * v[:, i]) for i in range(k)])
    if res.max() >= residual_tol:
        raise EigensolverError(f"eigensolver residual {res.max():.2e} >= {residual_tol:.0e}")
    return SectorEigenpairs(w, v.T.astype(complex), codes, spec.site_dims(), res)


def total_ladder(state, raising=False):
    """Apply total ``S^+`` or ``S^-`` to a dense state (no normalization)."""
    out = np.zeros_like(state.amplitudes)
    for site, d in enumerate(state.site_dims):
        sp, sm, _ = ladder_operators(1 if d == 3 else 0.5)
        out += state.apply_site(sp if raising else sm, site).amplitudes
    return PureState(out, state.site_dims)


def total_spin_squared(state):
    """``<S_tot^2> = sum_a ||S^a_tot psi||^2`` of a normalized state."""
    comps = [np.zeros_like(state.amplitudes) for _ in range(3)]
    for site, d in enumerate(state.site_dims):
        for acc, op in zip(comps, spin_operators(1 if d == 3 else 0.5)):
            acc += state.apply_site(op, site).amplitudes
    return float(sum(np.vdot(c, c).real for c in comps))


def _fix_phase(vec, spec, twice_sz, site_dims):
    """Make the Neel reference amplitude real positive (largest amplitude as fallback)."""
    conf = spec.neel_configuration(twice_sz)
    idx = int(np.ravel_multi_index(conf, site_dims))
    amp = vec[idx]
    if abs(amp) < 1e-8 * np.abs(vec).max():
        amp = vec[np.argmax(np.abs(vec))]
    return vec * (abs(amp) / amp)


def _twice_edge_sz(spec):
    qubits = int(spec.has_left_qubit) + int(spec.has_right_qubit)
    if qubits % 2 == 0:
        raise DoubletError("an S_tot = 1/2 doublet needs an odd number of boundary qubits "
                           f"(boundary={spec.boundary!r})")
    return 1


@lru_cache(maxsize=16)
def ground_doublet(spec, allow_quasi=False, degeneracy_tol=1e-8):
    """Ground doublet ``(|G0>, |G1>)`` of a chain with one boundary qubit.

    ``g0`` is the lowest state with ``S^z_tot = +1/2``; ``g1 = S^- g0 / ||.||``.

    Raises
    ------
    DoubletError
        If the ``+1/2`` ground state is not a spin-1/2 state or is degenerate
        within the sector (the offending spectrum is reported), unless
        ``allow_quasi`` is set.
    """
    twice = _twice_edge_sz(spec)
    pairs = ground_sector(spec, twice / 2, k=2)
    g0 = pairs.state(0)
    amp = _fix_phase(g0.amplitudes, spec, twice, g0.site_dims)
    g0 = PureState(amp, g0.site_dims)
    raised = total_ladder(g0, raising=True).norm()
    split = float(pairs.energies[1] - pairs.energies[0]) if len(pairs.energies) > 1 else np.inf
    if not allow_quasi and (raised > 1e-6 or split < degeneracy_tol):
        raise DoubletError(
            f"no isolated S_tot=1/2 doublet: |S^+ g0|={raised:.3e}, "
            f"sector spectrum={pairs.energies.tolist()}")
    g1 = total_ladder(g0).normalized()
    return GroundDoublet(g0, g1, float(pairs.energies[0]), split, spec)


def embed_logical(doublet, a0, a1, atol=1e-10):
    """``a0 |G0> + a1 |G1>`` (amplitudes are set directly)."""
    if abs(abs(a0) ** 2 + abs(a1) ** 2 - 1.0) > atol:
        raise ValueError("logical amplitudes must be normalized")
    amp = a0 * doublet.g0.amplitudes + a1 * doublet.g1.amplitudes
    return PureState(amp, doublet.site_dims)


def extract_logical(state, doublet):
    """Logical amplitudes and the weight outside the doublet span."""
    if state.site_dims != doublet.site_dims:
        raise ValueError("state and doublet live on different chains")
    a0 = doublet.g0.overlap(state)
    a1 = doublet.g1.overlap(state)
    leak = state.norm() ** 2 - abs(a0) ** 2 - abs(a1) ** 2
    return LogicalReadout(a0, a1, max(float(leak), 0.0))


class ExactDiagonalizer(BaseEstimator):
    """Sector-resolved exact diagonalization with an estimator interface.

    Parameters
    ----------
    sz_total : float
        Target ``S^z_tot`` sector.
    n_states : int
        Number of lowest eigenpairs to keep.
    residual_tol : float
        Maximal accepted eigen-residual.

    Examples
    --------
    >>> ed = ExactDiagonalizer(sz_total=0.0).fit(ChainSpec(2, 0.0, boundary="none"))
    >>> round(ed.energies_[0], 10)
    -2.0
    """

    def __init__(self, sz_total=0.5, n_states=1, residual_tol=1e-9):
        self.sz_total = sz_total
        self.n_states = n_states
        self.residual_tol = residual_tol

    def fit(self, spec, y=None):
        pairs = ground_sector(spec, self.sz_total, self.n_states, self.residual_tol)
        self.energies_ = pairs.energies
        self.pairs_ = pairs
        self.spec_ = spec
        return self

    def ground_state(self):
        return self.pairs_.state(0)
