"""Linear-inversion process tomography of logical channels."""
from dataclasses import dataclass
from itertools import product

import numpy as np
from sklearn.base import BaseEstimator

__all__ = [
    "TomographyAborted", "TomographyResult", "tomography_inputs", "process_tomography",
    "ProcessTomography", "process_fidelity", "unitary_fidelity",
]


class TomographyAborted(RuntimeError):
    """The channel runner leaked too much weight out of the logical space."""


_SINGLE = [
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([1, 1], dtype=complex) / np.sqrt(2),
    np.array([1, 1j], dtype=complex) / np.sqrt(2),
]


def tomography_inputs(dimension):
    """Informationally complete pure inputs: |0>,|1>,|+>,|+i> and their products."""
    if dimension == 2:
        return [v.copy() for v in _SINGLE]
    if dimension == 4:
        return [np.kron(a, b) for a, b in product(_SINGLE, _SINGLE)]
    raise ValueError("dimension must be 2 or 4")


def _superop_of_unitary(u):
    return np.kron(u, u.conj())


def process_fidelity(superop, target):
    """``Re Tr(S_U^dag S) / d^2`` for a trace-normalized superoperator ``S``."""
    d = target.shape[0]
    return float(np.real(np.trace(_superop_of_unitary(target).conj().T @ superop)) / d ** 2)


def unitary_fidelity(target, actual):
    """``|Tr(U^dag V)|^2 / d^2``, insensitive to global phase and normalization."""
    d = target.shape[0]
    actual = actual / np.sqrt(np.real(np.trace(actual.conj().T @ actual)) / d)
    return float(abs(np.trace(target.conj().T @ actual)) ** 2 / d ** 2)


@dataclass(frozen=True)
class TomographyResult:
    superoperator: np.ndarray  # row-major vec convention, trace normalized
    success_probability: float
    max_leakage: float
    fidelity: float = None

    @property
    def dimension(self):
        return int(round(np.sqrt(self.superoperator.shape[0])))

    def choi(self):
        d = self.dimension
        s = self.superoperator.reshape(d, d, d, d)  # [i, j, k, l]: out ij <- in kl
        return np.einsum("ijkl->kilj", s).reshape(d * d, d * d)

    def apply(self, rho):
        d = self.dimension
        return (self.superoperator @ rho.reshape(-1)).reshape(d, d)


def _as_density(out):
    out = np.asarray(out)
    return np.outer(out, out.conj()) if out.ndim == 1 else out


def process_tomography(runner, dimension, target=None, max_leakage=1e-6):
    """Reconstruct the logical channel implemented by ``runner``.

    Parameters
    ----------
    runner : callable
        ``runner(psi_in) -> (output, leakage)``; ``output`` is an unnormalized
        output vector or density matrix (weighted by the branch probability).
    dimension : {2, 4}
    target : ndarray, optional
        Ideal unitary; when given the process fidelity is reported.

    Raises
    ------
    TomographyAborted
        If any run reports leakage above ``max_leakage``.
    """
    inputs = tomography_inputs(dimension)
    cols_in, cols_out, leaks = [], [], []
    for psi in inputs:
        out, leak = runner(psi)
        leaks.append(float(leak))
        if leak > max_leakage:
            raise TomographyAborted(f"runner leakage {leak:.2e} exceeds {max_leakage:.0e}")
        cols_in.append(np.outer(psi, psi.conj()).reshape(-1))
        cols_out.append(_as_density(out).reshape(-1))
    m_in = np.array(cols_in).T
    m_out = np.array(cols_out).T
    superop = m_out @ np.linalg.pinv(m_in)
    eye = np.eye(dimension).reshape(-1) / dimension
    p = float(np.real(np.trace((superop @ eye).reshape(dimension, dimension))))
    superop = superop / p
    fid = process_fidelity(superop, target) if target is not None else None
    return TomographyResult(superop, p, max(leaks), fid)


class ProcessTomography(BaseEstimator):
    """Estimator wrapper: ``fit(runner)`` reconstructs, ``score(U)`` gives fidelity."""

    def __init__(self, dimension=2, max_leakage=1e-6):
        self.dimension = dimension
        self.max_leakage = max_leakage

    def fit(self, runner, y=None):
        self.result_ = process_tomography(runner, self.dimension, max_leakage=self.max_leakage)
        self.superoperator_ = self.result_.superoperator
        return self

    def score(self, target):
        return process_fidelity(self.superoperator_, np.asarray(target))
