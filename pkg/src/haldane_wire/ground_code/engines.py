"""Per-site logical Kraus maps from the exact and MPS engines.

A primitive step is linear in the logical amplitudes, so each engine only
needs the images of the two doublet basis states.  For every outcome ``o``
it returns ``K_o`` (2x2, new doublet amplitudes) and ``gram_o`` (2x2 Gram
matrix of the unprojected branch vectors); the outcome probability of a
normalized input ``a`` is ``a^dag gram_o a`` and its leakage is
``1 - |K_o a|^2 / (a^dag gram_o a)``.
"""
from dataclasses import dataclass

import numpy as np

from ..chain_model import adiabatic_schedule
from ..exact_engine import adiabatic_evolve, decouple_map, embed_logical, ground_doublet
from ..mps_engine import decoupled_mps, project_out_first, suffix_doublet

__all__ = ["StepMaps", "OracleEngine", "MpsEngine", "make_engine"]


@dataclass(frozen=True)
class StepMaps:
    labels: tuple
    kraus: dict
    gram: dict

    def probabilities(self, logical):
        a = np.asarray(logical)
        return {l: float(np.real(a.conj() @ self.gram[l] @ a)) for l in self.labels}

    def average_probabilities(self):
        return {l: float(np.real(np.trace(self.gram[l]))) / 2 for l in self.labels}

    def apply(self, label, logical):
        a = np.asarray(logical)
        out = self.kraus[label] @ a
        w = float(np.real(a.conj() @ self.gram[label] @ a))
        leak = max(1.0 - float(np.vdot(out, out).real) / w, 0.0) if w > 0 else 1.0
        return out, w, leak


class _Engine:
    name = "base"

    def __init__(self, spec):
        if not spec.has_right_qubit or spec.has_left_qubit:
            raise ValueError("the wire needs a chain with boundary='right_qubit'")
        self.spec = spec
        self._cache = {}

    @property
    def last_site(self):
        """Last spin that can be measured (the remaining chain keeps >= 2 spins)."""
        return self.spec.n_sites - 3

    def step_maps(self, site, basis):
        key = (site, basis.key())
        if key not in self._cache:
            self._cache[key] = self._compute(site, basis)
        return self._cache[key]


class OracleEngine(_Engine):
    """Dense engine; decoupling by the Clebsch-Gordan construction or a ramp.

    Parameters
    ----------
    decoupling : {'symmetry', 'adiabatic'}
    total_time, shape : ramp parameters for ``'adiabatic'``.
    """

    name = "oracle"

    def __init__(self, spec, decoupling="symmetry", total_time=40.0, shape="smoothstep",
                 steps=None):
        super().__init__(spec)
        if decoupling not in ("symmetry", "adiabatic"):
            raise ValueError(f"unknown decoupling {decoupling!r}")
        self.decoupling = decoupling
        self.total_time = total_time
        self.shape = shape
        self.steps = steps
        self._decoupled = {}

    def decoupled(self, site):
        if site not in self._decoupled:
            sub = self.spec.suffix(site) if site else self.spec
            if self.decoupling == "symmetry":
                rows = decouple_map(sub)
            else:
                doublet = ground_doublet(sub)
                sched = adiabatic_schedule(self.total_time, self.steps or 2, self.shape)
                rows = np.array([
                    adiabatic_evolve(embed_logical(doublet, *e), sub, 0, sched).amplitudes
                    for e in ((1, 0), (0, 1))])
            self._decoupled[site] = rows
        return self._decoupled[site]

    def _compute(self, site, basis):
        rows = self.decoupled(site).reshape(2, 3, -1)
        nxt = ground_doublet(self.spec.suffix(site + 1)).basis()
        kraus, gram = {}, {}
        for label, bra in zip(basis.labels, basis.bras):
            branch = np.einsum("m,amr->ar", bra, rows)  # rows: input a
            kraus[label] = nxt.conj() @ branch.T
            gram[label] = branch.conj() @ branch.T
        return StepMaps(basis.labels, kraus, gram)


class MpsEngine(_Engine):
    """Tensor-network engine; suffix doublets from sector DMRG, cached per site."""

    name = "mps"

    def __init__(self, spec, chi_max=64, sweeps=30, tol=1e-10):
        super().__init__(spec)
        self.chi_max, self.sweeps, self.tol = chi_max, sweeps, tol
        self._doublets = {}

    def doublet(self, start, warm=None):
        """Suffix doublet from ``start``; ``warm`` seeds the +1/2 solve if not yet cached."""
        if start not in self._doublets:
            if warm is None and start - 1 in self._doublets:
                warm = project_out_first(self._doublets[start - 1].g0, np.array([0, 1, 0]))
            self._doublets[start] = suffix_doublet(self.spec, start, self.chi_max, self.sweeps,
                                                   self.tol, warm=warm)
        return self._doublets[start]

    def _compute(self, site, basis):
        nxt = self.doublet(site + 1)
        images = [decoupled_mps(e, nxt) for e in ((1, 0), (0, 1))]
        kraus, gram = {}, {}
        for label, bra in zip(basis.labels, basis.bras):
            branch = [project_out_first(p, bra) for p in images]
            kraus[label] = np.array([[nxt.g0.overlap(b) for b in branch],
                                     [nxt.g1.overlap(b) for b in branch]])
            gram[label] = np.array([[x.overlap(y) for y in branch] for x in branch])
        return StepMaps(basis.labels, kraus, gram)


def make_engine(kind, spec, **params):
    if kind == "oracle":
        return OracleEngine(spec, **params)
    if kind == "mps":
        return MpsEngine(spec, **params)
    raise ValueError(f"unknown engine {kind!r}")
