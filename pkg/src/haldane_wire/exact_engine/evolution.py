"""Decoupling of the boundary spin: real-time adiabatic ramp and its symmetry limit."""
import numpy as np
from scipy.sparse.linalg import expm_multiply

from ..chain_model import build_sector
from ..spin_algebra import cg_half_one
from .states import PureState, ground_doublet, extract_logical, LeakageError

__all__ = ["PropagatorError", "adiabatic_evolve", "decouple_symmetry", "decouple_map"]

# fourth-order commutator-free Magnus coefficients (two Gauss nodes)
_C1, _C2 = 0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6
_A1, _A2 = 0.25 + np.sqrt(3) / 6, 0.25 - np.sqrt(3) / 6


class PropagatorError(RuntimeError):
    """Step-doubling error estimate of the propagator exceeds its budget."""


def _sector_split(state, spec):
    """Yield ``(twice_sz, codes)`` for every S^z_tot sector the state occupies."""
    charges = spec.site_charges()
    dims = spec.site_dims()
    q = np.zeros(len(state.amplitudes), dtype=np.int64)
    conf = np.unravel_index(np.arange(len(q)), dims)
    for ch, c in zip(charges, conf):
        q += ch[c]
    for twice in np.unique(q[np.abs(state.amplitudes) > 0]):
        yield int(twice), np.nonzero(q == twice)[0]


def _propagate(h_off, h_bond, vec, schedule, steps):
    times = np.linspace(0.0, schedule.total_time, steps + 1)
    for t0, t1 in zip(times[:-1], times[1:]):
        dt = t1 - t0
        l1 = float(schedule.value(t0 + _C1 * dt))
        l2 = float(schedule.value(t0 + _C2 * dt))
        # exp(-i dt (a1 H(t1) + a2 H(t2))) then exp(-i dt (a2 H(t1) + a1 H(t2)))
        first = h_off * (_A1 + _A2) + h_bond * (_A1 * l2 + _A2 * l1)
        second = h_off * (_A1 + _A2) + h_bond * (_A2 * l2 + _A1 * l1)
        vec = expm_multiply(-1j * dt * first, vec)
        vec = expm_multiply(-1j * dt * second, vec)
        vec /= np.linalg.norm(vec)
    return vec


def adiabatic_evolve(state, spec, bond, schedule, steps=None, error_budget=1e-4):
    """Evolve ``state`` under ``H(t) = H_rest + lambda(t) h_bond``.

    The integrator is a fourth-order commutator-free Magnus scheme on each
    S^z_tot block separately, so the sector decomposition is preserved exactly.

    Parameters
    ----------
    state : PureState
    spec : ChainSpec
        Chain the state lives on; its own ramp on ``bond`` is ignored.
    bond : int
        Spin-1 bond whose coupling follows the schedule.
    schedule : AdiabaticSchedule
    steps : int, optional
        Number of propagation steps; default is the larger of
        ``schedule.steps`` and 20 steps per unit of ``1/J``.
    error_budget : float or None
        Abort if the step-doubling error estimate exceeds this value.

    Raises
    ------
    PropagatorError
    """
    if steps is None:
        steps = max(schedule.steps, int(np.ceil(20 * schedule.total_time * spec.j_coupling)))
    if state.site_dims != spec.site_dims():
        raise ValueError("state does not live on the given chain")
    on = spec.with_ramp({bond: 1.0})
    off = spec.with_ramp({bond: 0.0})
    out = np.zeros_like(state.amplitudes, dtype=complex)
    err2 = 0.0
    for twice, _ in _sector_split(state, spec):
        h_on, codes = build_sector(on, twice)
        h_off, _ = build_sector(off, twice)
        h_bond = (h_on - h_off).tocsr()
        vec = state.amplitudes[codes].astype(complex)
        weight = np.linalg.norm(vec)
        vec = vec / weight
        fine = _propagate(h_off, h_bond, vec, schedule, steps)
        if error_budget is not None:
            coarse = _propagate(h_off, h_bond, vec, schedule, max(steps // 2, 1))
            err2 += (weight * np.linalg.norm(fine - coarse) / 15.0) ** 2
        out[codes] = weight * fine
    if error_budget is not None and np.sqrt(err2) > error_budget:
        raise PropagatorError(f"propagator error estimate {np.sqrt(err2):.2e} "
                              f"exceeds budget {error_budget:.0e}")
    return PureState(out / np.linalg.norm(out), state.site_dims)


def decouple_map(spec):
    """Linear map (logical -> decoupled state) of the symmetry construction.

    Returns an array of shape ``(2, dim)``: row ``a`` is the decoupled image of
    ``|G_a>`` of ``spec`` built from the doublet of ``spec.suffix(1)``.
    """
    nxt = ground_doublet(spec.suffix(1))
    half = cg_half_one().half  # [a, m, g]
    rows = np.einsum("amg,gr->amr", half, nxt.basis())
    return rows.reshape(2, -1)


def decouple_symmetry(state, spec, max_leakage=1e-8):
    """Decoupled state of the first spin from the Clebsch-Gordan structure.

    The input must lie in the doublet span of ``spec``; the output is

        sqrt(2/3)[|0>(a0/sqrt2)|G0'> + |-1> a1 |G0'> - |+1> a0 |G1'> - |0>(a1/sqrt2)|G1'>]

    with ``G'`` the doublet of the chain without the first spin.

    Raises
    ------
    LeakageError
        If the input has more than ``max_leakage`` weight outside the doublet.
    """
    readout = extract_logical(state, ground_doublet(spec))
    if readout.leakage > max_leakage:
        raise LeakageError(f"input leakage {readout.leakage:.2e} exceeds {max_leakage:.0e}")
    amp = readout.vector @ decouple_map(spec)
    return PureState(amp / np.linalg.norm(amp), spec.site_dims())
