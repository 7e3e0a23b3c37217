"""Projective single-site measurements on dense states."""
import numpy as np

from .states import PureState

__all__ = ["measure_site", "OutcomeError"]


class OutcomeError(ValueError):
    """A forced outcome has (numerically) zero probability."""


def measure_site(state, site, basis, outcome=None, rng=None, min_probability=1e-14):
    """Measure one spin-1 site in ``basis``.

    Exactly one of ``outcome`` (forced label) or ``rng`` (sampled) is used;
    without either the most likely outcome is taken.

    Returns
    -------
    label : str
    probability : float
        Born probability (relative to the input norm).
    post : PureState
        Renormalized state of the remaining sites; the measured site is removed.
    """
    if state.site_dims[site] != basis.bras.shape[1]:
        raise ValueError("basis dimension does not match the measured site")
    t = np.moveaxis(state.tensor(), site, 0).reshape(state.site_dims[site], -1)
    branches = basis.bras @ t
    norm2 = state.norm() ** 2
    probs = np.sum(np.abs(branches) ** 2, axis=1) / norm2
    if outcome is not None:
        k = basis.index(outcome)
        if probs[k] < min_probability:
            raise OutcomeError(f"forced outcome {outcome!r} has probability {probs[k]:.2e}")
    elif rng is not None:
        k = int(rng.choice(len(probs), p=probs / probs.sum()))
    else:
        k = int(np.argmax(probs))
    dims = state.site_dims[:site] + state.site_dims[site + 1:]
    post = branches[k].reshape(dims) if dims else branches[k]
    norm = np.linalg.norm(post)
    post = PureState(np.ravel(post) / (norm if norm > 0 else 1.0), dims)
    return basis.labels[k], float(probs[k]), post
