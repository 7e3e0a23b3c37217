"""Chain instances of the bilinear-biquadratic spin-1 model and their Hamiltonians.

Sites are 0-based.  The spin-1 sites are ``0 .. n_sites-1``; bond ``k`` couples
spin-1 sites ``k`` and ``k+1``.  Optional boundary spin-1/2's sit before site 0
(``left_qubit``) and/or after the last site (``right_qubit``) and couple with
``(4J/3) S.s``.
"""
import json
from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np
import scipy.sparse as sps

from .spin_algebra import SPIN1_CHARGES, SPIN_HALF_CHARGES, ladder_operators

__all__ = [
    "BOUNDARIES", "ChainSpec", "bond_term", "boundary_term", "sector_basis",
    "hamiltonian_in_basis", "build_dense", "build_sector", "ladder_in_sectors",
    "build_mpo", "Mpo", "AdiabaticSchedule", "adiabatic_schedule",
    "DimensionGuardError", "MAX_ORACLE_DIM",
]

BOUNDARIES = ("none", "right_qubit", "left_qubit", "both")
MAX_ORACLE_DIM = 2_200_000


class DimensionGuardError(ValueError):
    """Raised when a dense/oracle construction would exceed the size guard."""


@dataclass(frozen=True)
class ChainSpec:
    """Immutable description of one chain instance."""

    n_sites: int
    beta: float
    j_coupling: float = 1.0
    boundary: str = "right_qubit"
    ramp: Tuple[Tuple[int, float], ...] = field(default=())

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError("n_sites must be an integer >= 2")
        if not self.j_coupling > 0:
            raise ValueError("j_coupling must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        ramp = self.ramp.items() if isinstance(self.ramp, dict) else self.ramp
        ramp = tuple(sorted((int(k), float(v)) for k, v in ramp))
        for bond, lam in ramp:
            if not 0 <= bond < self.n_sites - 1:
                raise ValueError(f"ramp bond {bond} out of range")
            if not 0.0 <= lam <= 1.0:
                raise ValueError(f"ramp factor {lam} outside [0, 1]")
        object.__setattr__(self, "ramp", ramp)

    # --- layout -----------------------------------------------------------
    @property
    def has_left_qubit(self):
        return self.boundary in ("left_qubit", "both")

    @property
    def has_right_qubit(self):
        return self.boundary in ("right_qubit", "both")

    @property
    def offset(self):
        """Position of spin-1 site 0 in the full site list."""
        return 1 if self.has_left_qubit else 0

    def site_dims(self):
        dims = [3] * self.n_sites
        if self.has_left_qubit:
            dims = [2] + dims
        if self.has_right_qubit:
            dims = dims + [2]
        return tuple(dims)

    def site_charges(self):
        return [SPIN1_CHARGES if d == 3 else SPIN_HALF_CHARGES for d in self.site_dims()]

    def dimension(self):
        return int(np.prod(self.site_dims(), dtype=np.int64))

    def in_haldane_phase(self):
        return -1.0 < self.beta < 1.0

    def ramp_factor(self, bond):
        return dict(self.ramp).get(bond, 1.0)

    def with_ramp(self, updates):
        ramp = dict(self.ramp)
        ramp.update(updates)
        return replace(self, ramp=tuple(ramp.items()))

    def suffix(self, start):
        """The chain of spin-1 sites ``start .. n_sites-1`` (left qubit dropped)."""
        if start == 0:
            return self
        if self.n_sites - start < 2:
            raise ValueError("suffix chain needs at least two spin-1 sites")
        boundary = {"left_qubit": "none", "both": "right_qubit"}.get(self.boundary, self.boundary)
        ramp = tuple((b - start, lam) for b, lam in self.ramp if b >= start)
        return ChainSpec(self.n_sites - start, self.beta, self.j_coupling, boundary, ramp)

    def neel_configuration(self, twice_sz):
        """Local indices of a Neel-like product state in the sector ``2 S^z = twice_sz``.

        Used as the phase reference for ground states.
        """
        dims = self.site_dims()
        charges = self.site_charges()
        conf = [1] * len(dims)
        k = 0
        for pos, d in enumerate(dims):
            if d == 3:
                conf[pos] = 0 if k % 2 == 0 else 2
                k += 1
        total = sum(int(ch[c]) for ch, c in zip(charges, conf))
        for pos in reversed(range(len(dims))):
            while total < twice_sz and conf[pos] > 0:
                conf[pos] -= 1
                total += 2
            while total > twice_sz and conf[pos] < dims[pos] - 1:
                conf[pos] += 1
                total -= 2
        if total != twice_sz:
            raise ValueError(f"sector 2Sz={twice_sz} unreachable")
        return tuple(conf)

    # --- serialization ----------------------------------------------------
    def to_dict(self):
        return {
            "n_sites": self.n_sites, "beta": self.beta, "j_coupling": self.j_coupling,
            "boundary": self.boundary, "ramp": {str(k): v for k, v in self.ramp},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc):
        unknown = set(doc) - {"n_sites", "beta", "j_coupling", "boundary", "ramp"}
        if unknown:
            raise ValueError(f"unknown ChainSpec keys: {sorted(unknown)}")
        ramp = {int(k): float(v) for k, v in doc.get("ramp", {}).items()}
        return cls(int(doc["n_sites"]), float(doc["beta"]), float(doc.get("j_coupling", 1.0)),
                   doc.get("boundary", "right_qubit"), tuple(ramp.items()))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _dot_product(spin_a, spin_b):
    pa, ma, za = ladder_operators(spin_a)
    pb, mb, zb = ladder_operators(spin_b)
    return 0.5 * (np.kron(pa, mb) + np.kron(ma, pb)) + np.kron(za, zb)


def bond_term(beta, j_coupling=1.0):
    """``J [S.S - beta (S.S)^2]`` on the 9-dimensional pair space."""
    if not j_coupling > 0:
        raise ValueError("j_coupling must be positive")
    ss = _dot_product(1, 1)
    return j_coupling * (ss - beta * ss @ ss)


def boundary_term(j_coupling=1.0, qubit_first=False):
    """``(4J/3) S.s`` on spin-1 (x) spin-1/2 (or spin-1/2 (x) spin-1)."""
    if not j_coupling > 0:
        raise ValueError("j_coupling must be positive")
    pair = (0.5, 1) if qubit_first else (1, 0.5)
    return 4.0 * j_coupling / 3.0 * _dot_product(*pair)


def _terms(spec):
    """Two-site terms as ``(left_position, matrix)`` with ramp factors folded in."""
    h = bond_term(spec.beta, spec.j_coupling)
    off = spec.offset
    terms = []
    if spec.has_left_qubit:
        terms.append((0, boundary_term(spec.j_coupling, qubit_first=True)))
    for k in range(spec.n_sites - 1):
        lam = spec.ramp_factor(k)
        if lam != 0.0:
            terms.append((off + k, lam * h))
    if spec.has_right_qubit:
        terms.append((off + spec.n_sites - 1, boundary_term(spec.j_coupling)))
    return terms


def _strides(dims):
    return np.array([int(np.prod(dims[i + 1:], dtype=np.int64)) for i in range(len(dims))],
                    dtype=np.int64)


def sector_basis(dims, charges, twice_sz=None):
    """Product-basis configurations, optionally restricted to ``2 S^z_tot``.

    Returns ``(configs, codes)``; ``codes`` are the full-space indices in
    row-major (first site most significant) order and are sorted.
    """
    total = int(np.prod(dims, dtype=np.int64))
    if total > MAX_ORACLE_DIM:
        raise DimensionGuardError(f"Hilbert space dimension {total} exceeds guard")
    codes = np.arange(total, dtype=np.int64)
    configs = np.stack(np.unravel_index(codes, dims), axis=1).astype(np.int8)
    if twice_sz is not None:
        q = np.zeros(total, dtype=np.int64)
        for i, ch in enumerate(charges):
            q += ch[configs[:, i]]
        keep = q == twice_sz
        configs, codes = configs[keep], codes[keep]
        if len(codes) == 0:
            raise ValueError(f"empty sector 2Sz={twice_sz}")
    return configs, codes


def _apply_local(configs, codes, target_codes, strides, dims, sites, mat):
    """COO triplets of a local operator acting on ``sites`` between two bases."""
    ds = [dims[s] for s in sites]
    rows, cols, vals = [], [], []
    local_in = np.zeros(len(codes), dtype=np.int64)
    for s, d in zip(sites, ds):
        local_in = local_in * d + configs[:, s]
    out_idx, in_idx = np.nonzero(np.abs(mat) > 0)
    for po, pi in zip(out_idx, in_idx):
        sel = np.nonzero(local_in == pi)[0]
        if len(sel) == 0:
            continue
        delta = 0
        o_digits = np.unravel_index(po, ds)
        i_digits = np.unravel_index(pi, ds)
        for s, od, idg in zip(sites, o_digits, i_digits):
            delta += (int(od) - int(idg)) * strides[s]
        new = codes[sel] + delta
        pos = np.searchsorted(target_codes, new)
        pos = np.minimum(pos, len(target_codes) - 1)
        ok = target_codes[pos] == new
        rows.append(pos[ok])
        cols.append(sel[ok])
        vals.append(np.full(ok.sum(), mat[po, pi]))
    return rows, cols, vals


def hamiltonian_in_basis(spec, configs, codes):
    """Sparse Hamiltonian restricted to the (sorted) basis ``codes``."""
    dims = spec.site_dims()
    strides = _strides(dims)
    rows, cols, vals = [], [], []
    for pos, mat in _terms(spec):
        r, c, v = _apply_local(configs, codes, codes, strides, dims, (pos, pos + 1), mat)
        rows += r
        cols += c
        vals += v
    n = len(codes)
    if not rows:
        return sps.csr_matrix((n, n), dtype=float)
    vals = np.concatenate(vals)
    if np.abs(vals.imag).max() < 1e-15:
        vals = vals.real
    mat = sps.coo_matrix((vals, (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return mat.tocsr()


def build_dense(spec):
    """Full-space sparse Hamiltonian (oracle assembly).

    Raises
    ------
    DimensionGuardError
        If the product-space dimension exceeds the oracle guard.
    """
    configs, codes = sector_basis(spec.site_dims(), spec.site_charges())
    return hamiltonian_in_basis(spec, configs, codes)


def build_sector(spec, twice_sz):
    """Hamiltonian of one ``2 S^z_tot`` sector; returns ``(H, codes)``."""
    configs, codes = sector_basis(spec.site_dims(), spec.site_charges(), twice_sz)
    return hamiltonian_in_basis(spec, configs, codes), codes


def ladder_in_sectors(spec, twice_sz, raising=True):
    """Total ``S^+`` (or ``S^-``) as a sparse map from sector ``twice_sz``.

    Returns ``(op, source_codes, target_codes)``.
    """
    dims = spec.site_dims()
    charges = spec.site_charges()
    strides = _strides(dims)
    src_conf, src = sector_basis(dims, charges, twice_sz)
    _, tgt = sector_basis(dims, charges, twice_sz + (2 if raising else -2))
    rows, cols, vals = [], [], []
    for s, d in enumerate(dims):
        sp, sm, _ = ladder_operators(1 if d == 3 else 0.5)
        r, c, v = _apply_local(src_conf, src, tgt, strides, dims, (s,), sp if raising else sm)
        rows += r
        cols += c
        vals += v
    op = sps.coo_matrix((np.concatenate(vals).real, (np.concatenate(rows), np.concatenate(cols))),
                        shape=(len(tgt), len(src))).tocsr()
    return op, src, tgt


class Mpo:
    """Matrix-product operator; ``tensors[i][wl, wr, s_out, s_in]``."""

    def __init__(self, tensors, shifts=None):
        self.tensors = [np.asarray(w) for w in tensors]
        # charge shift (2 dSz) carried by each MPO bond state; len = n + 1
        self.shifts = shifts

    def __len__(self):
        return len(self.tensors)

    @property
    def bond_dims(self):
        return [w.shape[1] for w in self.tensors[:-1]]

    def to_dense(self):
        """Contract to a full matrix (small systems only)."""
        op = self.tensors[0][0]  # (wr, s, s')
        for w in self.tensors[1:]:
            # op[w, S, S'] , w[w, v, s, s'] -> [v, S s, S' s']
            op = np.einsum("wab,wvcd->vacbd", op, w)
            v, a, c, b, d = op.shape
            op = op.reshape(v, a * c, b * d)
        return op[0]


def _operator_schmidt(term, d1, d2, tol=1e-13):
    """Split a two-site matrix into ``sum_k A_k (x) B_k`` with the fewest terms."""
    m = term.reshape(d1, d2, d1, d2).transpose(0, 2, 1, 3).reshape(d1 * d1, d2 * d2)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    keep = s > tol * max(s[0], 1.0)
    root = np.sqrt(s[keep])
    a = (u[:, keep] * root).T.reshape(-1, d1, d1)
    b = (root[:, None] * vh[keep]).reshape(-1, d2, d2)
    return a, b


def build_mpo(spec):
    """MPO of the chain from an operator-Schmidt split of every bond term.

    Bond states: 0 (nothing placed yet), ``1..r`` (left factor ``A_k`` placed),
    ``D-1`` (term completed); ``D = r + 2`` with ``r = 9`` for spin-1 pairs.
    Ramp factors are folded into the right factors.
    """
    dims = spec.site_dims()
    splits = {pos: _operator_schmidt(t, dims[pos], dims[pos + 1]) for pos, t in _terms(spec)}
    rank = max((len(a) for a, _ in splits.values()), default=0)
    D = rank + 2
    tensors = []
    for i, d in enumerate(dims):
        w = np.zeros((D, D, d, d))
        w[0, 0] = np.eye(d)
        w[D - 1, D - 1] = np.eye(d)
        if i in splits:
            for k, a in enumerate(splits[i][0]):
                w[0, 1 + k] = a.real
        if i - 1 in splits:
            for k, b in enumerate(splits[i - 1][1]):
                w[1 + k, D - 1] = b.real
        tensors.append(w)
    tensors[0] = tensors[0][:1]
    tensors[-1] = tensors[-1][:, D - 1:]
    return Mpo(tensors)


@dataclass(frozen=True)
class AdiabaticSchedule:
    """Ramp ``lambda(t)`` from 1 to 0 over ``[0, total_time]``."""

    total_time: float
    steps: int
    shape: str = "smoothstep"
    reverse: bool = False

    def __post_init__(self):
        if not self.total_time > 0:
            raise ValueError("total_time must be positive")
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        if self.shape not in ("linear", "smoothstep", "constant"):
            raise ValueError(f"unknown schedule shape {self.shape!r}")

    def value(self, t):
        s = np.clip(np.asarray(t, dtype=float) / self.total_time, 0.0, 1.0)
        if self.shape == "constant":
            return np.ones_like(s)
        if self.shape == "linear":
            ramp = s
        else:
            ramp = s * s * (3.0 - 2.0 * s)
        return ramp if self.reverse else 1.0 - ramp

    @property
    def times(self):
        return np.linspace(0.0, self.total_time, self.steps)

    @property
    def points(self):
        return list(zip(self.times.tolist(), self.value(self.times).tolist()))

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return self.steps

    def reversed(self):
        return replace(self, reverse=not self.reverse)


def adiabatic_schedule(total_time, steps, shape="smoothstep"):
    """Monotone ramp of the bond factor from 1 (coupled) to 0 (decoupled)."""
    return AdiabaticSchedule(float(total_time), int(steps), shape)
