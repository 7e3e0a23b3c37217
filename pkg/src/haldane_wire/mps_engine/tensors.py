"""Matrix product states with optional U(1) bond labels."""
import json
import struct
from dataclasses import dataclass

import numpy as np

__all__ = ["Mps", "EntanglementData", "block_svd", "infer_charges", "CanonicalFormError"]

MAGIC = b"HWMPS\x01"


class CanonicalFormError(RuntimeError):
    """Isometry residual above tolerance after a canonicalization."""


@dataclass(frozen=True)
class EntanglementData:
    cut: int
    weights: np.ndarray  # descending Schmidt probabilities
    entropy: float  # bits

    @classmethod
    def from_singular_values(cls, cut, s):
        w = np.sort(np.asarray(s, dtype=float) ** 2)[::-1]
        w = w[w > 1e-15 * w.sum()]
        w = w / w.sum()
        return cls(cut, w, float(-np.sum(w * np.log2(w))))


def block_svd(m, qrow=None, qcol=None, chi_max=None, cutoff=0.0):
    """SVD of ``m`` respecting a charge grading of rows and columns.

    Entries with ``qrow != qcol`` must vanish.  Singular values are truncated
    globally: at most ``chi_max`` kept, and discarded weight relative to the
    total stays below ``cutoff``.

    Returns
    -------
    u, s, vh, qbond, discarded
        ``qbond`` is ``None`` when no charges are given.
    """
    if qrow is None:
        blocks = [(None, np.arange(m.shape[0]), np.arange(m.shape[1]))]
    else:
        blocks = [(q, np.nonzero(qrow == q)[0], np.nonzero(qcol == q)[0])
                  for q in np.intersect1d(qrow, qcol)]
    pieces = []
    for q, rows, cols in blocks:
        if len(rows) == 0 or len(cols) == 0:
            continue
        u, s, vh = np.linalg.svd(m[np.ix_(rows, cols)], full_matrices=False)
        for i, sv in enumerate(s):
            pieces.append((sv, q, rows, cols, u[:, i], vh[i]))
    pieces.sort(key=lambda p: -p[0])
    total = sum(p[0] ** 2 for p in pieces) or 1.0
    keep = len(pieces)
    if chi_max is not None:
        keep = min(keep, chi_max)
    tail = np.cumsum([p[0] ** 2 for p in pieces[::-1]])[::-1] / total
    while keep > 1 and tail[keep - 1] <= cutoff:
        keep -= 1
    while keep > 1 and pieces[keep - 1][0] <= 1e-14 * pieces[0][0]:
        keep -= 1
    kept = pieces[:keep]
    if qrow is not None:
        kept.sort(key=lambda p: (p[1], -p[0]))
    u = np.zeros((m.shape[0], keep), dtype=m.dtype)
    vh = np.zeros((keep, m.shape[1]), dtype=m.dtype)
    for k, (sv, q, rows, cols, uc, vr) in enumerate(kept):
        u[rows, k] = uc
        vh[k, cols] = vr
    s = np.array([p[0] for p in kept])
    qbond = None if qrow is None else np.array([p[1] for p in kept], dtype=int)
    discarded = float(tail[keep]) if keep < len(pieces) else 0.0
    return u, s, vh, qbond, discarded


def infer_charges(tensors, site_charges, left=0):
    """Bond labels of a charge-definite MPS, read off from tensor sparsity.

    Bond states that receive no weight are labelled 0 and the rows they feed
    are zeroed in place (they cannot contribute to the state).
    """
    unset = np.iinfo(np.int64).min
    charges = [np.array([left])]
    for k, (a, qs) in enumerate(zip(tensors, site_charges)):
        ql = charges[-1]
        q = np.full(a.shape[2], unset, dtype=np.int64)
        nz = np.abs(a) > 1e-14 * max(np.abs(a).max(), 1e-300)
        for l, s, r in zip(*np.nonzero(nz)):
            val = ql[l] + qs[s]
            if q[r] == unset:
                q[r] = val
            elif q[r] != val:
                raise ValueError("MPS is not charge-definite")
        dead = q == unset
        q[dead] = 0
        if dead.any() and k + 1 < len(tensors):
            tensors[k + 1][dead] = 0.0
        charges.append(q)
    return charges


class Mps:
    """Open-boundary MPS; ``tensors[k]`` has shape ``(D_left, d, D_right)``.

    ``charges`` (optional) holds ``N+1`` integer arrays of ``2 S^z`` labels;
    label ``k`` counts the charge of the sites left of bond ``k``.
    """

    def __init__(self, tensors, charges=None, center=None):
        self.tensors = [np.asarray(t) for t in tensors]
        self.charges = charges
        self.center = center

    # --- construction -------------------------------------------------
    @classmethod
    def product(cls, configuration, site_dims, site_charges=None):
        tensors = []
        for c, d in zip(configuration, site_dims):
            t = np.zeros((1, d, 1))
            t[0, c, 0] = 1.0
            tensors.append(t)
        charges = None
        if site_charges is not None:
            charges = infer_charges(tensors, site_charges)
        return cls(tensors, charges, center=0)

    @classmethod
    def from_dense(cls, vec, site_dims, chi_max=None, cutoff=0.0):
        rest = np.asarray(vec).reshape(1, -1)
        tensors = []
        for d in site_dims[:-1]:
            dl = rest.shape[0]
            u, s, vh, _, _ = block_svd(rest.reshape(dl * d, -1), chi_max=chi_max, cutoff=cutoff)
            tensors.append(u.reshape(dl, d, -1))
            rest = s[:, None] * vh
        tensors.append(rest.reshape(rest.shape[0], site_dims[-1], 1))
        out = cls(tensors, center=len(site_dims) - 1)
        return out.normalized()

    def copy(self):
        ch = None if self.charges is None else [c.copy() for c in self.charges]
        return Mps([t.copy() for t in self.tensors], ch, self.center)

    # --- shape ----------------------------------------------------------
    @property
    def n_sites(self):
        return len(self.tensors)

    @property
    def site_dims(self):
        return tuple(t.shape[1] for t in self.tensors)

    @property
    def bond_dims(self):
        return tuple(t.shape[2] for t in self.tensors[:-1])

    @property
    def dtype(self):
        return np.result_type(*self.tensors)

    # --- canonical form -----------------------------------------------
    def _split_left(self, k, site_charges, chi_max=None, cutoff=0.0):
        a = self.tensors[k]
        dl, d, dr = a.shape
        qrow = qcol = None
        if self.charges is not None:
            qrow = (self.charges[k][:, None] + site_charges[k][None, :]).ravel()
            qcol = self.charges[k + 1]
        u, s, vh, qb, disc = block_svd(a.reshape(dl * d, dr), qrow, qcol, chi_max, cutoff)
        self.tensors[k] = u.reshape(dl, d, -1)
        self.tensors[k + 1] = np.tensordot(s[:, None] * vh, self.tensors[k + 1], axes=(1, 0))
        if qb is not None:
            self.charges[k + 1] = qb
        return disc

    def _split_right(self, k, site_charges, chi_max=None, cutoff=0.0):
        a = self.tensors[k]
        dl, d, dr = a.shape
        qrow = qcol = None
        if self.charges is not None:
            qrow = self.charges[k]
            qcol = (self.charges[k + 1][None, :] - site_charges[k][:, None]).ravel()
        u, s, vh, qb, disc = block_svd(a.reshape(dl, d * dr), qrow, qcol, chi_max, cutoff)
        self.tensors[k] = vh.reshape(-1, d, dr)
        self.tensors[k - 1] = np.tensordot(self.tensors[k - 1], u * s[None, :], axes=(2, 0))
        if qb is not None:
            self.charges[k] = qb
        return disc

    def _site_charges(self, site_charges):
        if self.charges is None:
            return None
        if site_charges is None:
            site_charges = [_default_site_charges(d) for d in self.site_dims]
        return site_charges

    def canonicalize(self, center=0, site_charges=None):
        """Mixed-canonical copy with orthogonality center ``center`` and norm 1."""
        out = self.copy()
        sc = out._site_charges(site_charges)
        for k in range(center):
            out._split_left(k, sc)
        for k in range(out.n_sites - 1, center, -1):
            out._split_right(k, sc)
        c = out.tensors[center]
        out.tensors[center] = c / np.linalg.norm(c)
        out.center = center
        return out

    def compress(self, chi_max=None, cutoff=0.0, site_charges=None):
        """Truncated copy (center 0) and the summed discarded weight."""
        out = self.canonicalize(self.n_sites - 1, site_charges)
        sc = out._site_charges(site_charges)
        disc = 0.0
        for k in range(out.n_sites - 1, 0, -1):
            disc += out._split_right(k, sc, chi_max, cutoff)
        out.tensors[0] = out.tensors[0] / np.linalg.norm(out.tensors[0])
        out.center = 0
        return out, disc

    def isometry_residual(self):
        """Largest deviation from the left/right isometry conditions around the center."""
        if self.center is None:
            return np.inf
        res = 0.0
        for k, a in enumerate(self.tensors):
            dl, d, dr = a.shape
            if k < self.center:
                m = a.reshape(dl * d, dr)
                res = max(res, np.abs(m.conj().T @ m - np.eye(dr)).max())
            elif k > self.center:
                m = a.reshape(dl, d * dr)
                res = max(res, np.abs(m @ m.conj().T - np.eye(dl)).max())
        return float(res)

    def normalized(self):
        out = self.copy()
        nrm = out.norm()
        k = out.center if out.center is not None else 0
        out.tensors[k] = out.tensors[k] / nrm
        return out

    # --- contractions ---------------------------------------------------
    def overlap(self, other):
        """``<self|other>``."""
        e = np.ones((1, 1))
        for a, b in zip(self.tensors, other.tensors):
            e = np.einsum("ab,asc,bsd->cd", e, a.conj(), b, optimize=True)
        return complex(e[0, 0])

    def norm(self):
        return float(np.sqrt(abs(self.overlap(self))))

    def expectation(self, ops):
        """``<psi| prod_k ops[k] |psi> / <psi|psi>`` for a dict ``site -> matrix``."""
        e = np.ones((1, 1))
        for k, a in enumerate(self.tensors):
            b = a if k not in ops else np.einsum("st,atb->asb", ops[k], a)
            e = np.einsum("ab,asc,bsd->cd", e, a.conj(), b, optimize=True)
        return complex(e[0, 0]) / self.norm() ** 2

    def amplitude(self, configuration):
        v = np.ones(1)
        for a, c in zip(self.tensors, configuration):
            v = v @ a[:, c, :]
        return complex(v[0])

    def to_dense(self):
        psi = np.ones((1, 1))
        for a in self.tensors:
            psi = np.tensordot(psi, a, axes=(1, 0)).reshape(-1, a.shape[2])
        return psi[:, 0]

    def apply_site(self, op, site):
        """Apply a one-site operator (no renormalization, labels dropped)."""
        out = self.copy()
        out.tensors[site] = np.einsum("st,atb->asb", op, out.tensors[site])
        out.charges = None
        return out

    def apply_mpo(self, mpo):
        """Exact MPO-MPS product; bond dimensions multiply, labels dropped."""
        tensors = []
        for a, w in zip(self.tensors, mpo.tensors):
            t = np.einsum("wvst,atb->awsbv", w, a)
            dl, wl, d, dr, wr = t.shape
            tensors.append(t.reshape(dl * wl, d, dr * wr))
        return Mps(tensors)

    def entanglement(self, cut):
        """Schmidt data across the cut between sites ``cut-1`` and ``cut``."""
        if not 1 <= cut < self.n_sites:
            raise ValueError(f"cut {cut} outside 1..{self.n_sites - 1}")
        c = self.canonicalize(cut - 1)
        a = c.tensors[cut - 1]
        s = np.linalg.svd(a.reshape(-1, a.shape[2]), compute_uv=False)
        return EntanglementData.from_singular_values(cut, s)

    # --- binary container ----------------------------------------------
    def save(self, path):
        header = {
            "n_sites": self.n_sites,
            "site_dims": list(self.site_dims),
            "bond_dims": list(self.bond_dims),
            "center": self.center,
            "charges": None if self.charges is None else [c.tolist() for c in self.charges],
        }
        raw = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            for a in self.tensors:
                fh.write(np.ascontiguousarray(a, dtype="<c16").view("<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            if fh.read(len(MAGIC)) != MAGIC:
                raise ValueError(f"{path}: not an MPS container")
            (n,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(n))
            payload = np.frombuffer(fh.read(), dtype="<f8")
        dims = header["site_dims"]
        bonds = [1] + header["bond_dims"] + [1]
        tensors, pos = [], 0
        for k, d in enumerate(dims):
            size = bonds[k] * d * bonds[k + 1]
            chunk = payload[pos:pos + 2 * size].view("<c16")
            tensors.append(chunk.reshape(bonds[k], d, bonds[k + 1]).copy())
            pos += 2 * size
        charges = header["charges"]
        if charges is not None:
            charges = [np.array(c, dtype=int) for c in charges]
        return cls(tensors, charges, header["center"])


def _default_site_charges(d):
    return np.array([2, 0, -2]) if d == 3 else np.array([1, -1])
