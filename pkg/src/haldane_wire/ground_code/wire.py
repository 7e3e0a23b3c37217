"""Running logical programs on the wire, readout scans and trace records."""
import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..exact_engine import LeakageError, LogicalReadout, process_tomography, unitary_fidelity
from ..spin_algebra import sz_basis
from .frame import ByproductFrame, byproduct
from .program import compile_program

__all__ = [
    "ChainExhaustedError", "StepRecord", "WireTrace", "run_wire", "ReadoutResult",
    "readout_scan", "TRACE_COLUMNS",
]

TRACE_COLUMNS = ("step", "site", "basis", "outcome", "prob", "frame_x", "frame_z")


class ChainExhaustedError(RuntimeError):
    """Not enough spins left; ``trace`` holds the partial record."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class StepRecord:
    step: int
    site: int
    basis: str
    outcome: str
    prob: float
    frame_x: int
    frame_z: int
    block: int = -1
    leakage: float = 0.0


@dataclass
class WireTrace:
    steps: list = field(default_factory=list)
    readout: LogicalReadout = None
    start_site: int = 0
    end_site: int = -1
    frame: ByproductFrame = field(default_factory=ByproductFrame)
    fidelity: float = None
    tomography: object = None
    engine: str = ""
    channel: np.ndarray = None  # frame-corrected logical Kraus of the path
    unitary_fidelity: float = None

    def outcomes(self):
        return [s.outcome for s in self.steps]

    def to_dict(self):
        doc = {
            "engine": self.engine,
            "sites": [self.start_site, self.end_site],
            "steps": [vars(s) | {"prob": round(s.prob, 15)} for s in self.steps],
            "frame": [self.frame.x_exp, self.frame.z_exp],
            "fidelity": self.fidelity,
        }
        if self.readout is not None:
            doc["readout"] = {
                "a0": [self.readout.a0.real, self.readout.a0.imag],
                "a1": [self.readout.a1.real, self.readout.a1.imag],
                "leakage": self.readout.leakage,
            }
        if self.tomography is not None:
            doc["tomography"] = {
                "success_probability": self.tomography.success_probability,
                "max_leakage": self.tomography.max_leakage,
            }
        return doc

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for s in self.steps:
            w.writerow([s.step, s.site, s.basis, s.outcome, repr(s.prob), s.frame_x, s.frame_z])
        return buf.getvalue()


def _describe(basis, angle):
    return basis.axis if basis.axis in ("std", "sz") else f"{basis.axis}:{angle:+.12f}"


def _choose(probs, forced, rng):
    labels = list(probs)
    if forced is not None:
        return forced
    p = np.array([probs[l] for l in labels])
    if rng is None:
        return labels[int(np.argmax(p))]
    return labels[int(rng.choice(len(labels), p=p / p.sum()))]


def run_wire(engine, program, logical=(1.0, 0.0), outcomes=None, rng=None,
             start=0, tomography=False, margin=1, max_leakage=1e-5):
    """Execute ``program`` left to right from spin ``start``.

    Parameters
    ----------
    engine : OracleEngine or MpsEngine
    program : LogicalProgram
    logical : array_like
        Input amplitudes on the doublet of the chain starting at ``start``.
    outcomes : sequence of str, optional
        Forced outcomes, consumed in order; sampled from ``rng`` otherwise
        (most likely outcome when ``rng`` is None too).
    tomography : bool
        Draw outcomes from input-averaged probabilities and reconstruct the
        frame-corrected channel of the realized outcome path.

    Returns
    -------
    WireTrace
        Per-step records and the frame-corrected readout; ``fidelity`` is the
        overlap with the ideal output (or the process fidelity in tomography
        mode).

    Raises
    ------
    ChainExhaustedError
        Before running if fewer than ``1.5 len(program) + margin`` spins are
        available, or during the run when the chain ends.
    """
    plan = compile_program(program)
    available = engine.last_site - start + 1
    need = int(np.ceil(1.5 * len(program))) + margin if len(program) else 0
    if available < need:
        raise ChainExhaustedError(f"{available} measurable spins, program needs about {need}")
    a = np.asarray(logical, dtype=complex)
    a = a / np.linalg.norm(a)
    total = np.eye(2, dtype=complex)
    frame = ByproductFrame()
    trace = WireTrace(start_site=start, engine=engine.name)
    forced = list(outcomes) if outcomes is not None else None
    site = start
    for block in range(len(program)):
        done = False
        while not done:
            if site > engine.last_site:
                trace.end_site, trace.frame = site - 1, frame
                raise ChainExhaustedError("chain exhausted before the program finished", trace)
            planned = plan.measurement(block, frame)
            maps = engine.step_maps(site, planned.basis)
            probs = maps.average_probabilities() if tomography else maps.probabilities(a)
            label = _choose(probs, forced.pop(0) if forced else None, rng)
            out, w, leak = maps.apply(label, a)
            if leak > max_leakage:
                raise LeakageError(f"leakage {leak:.2e} at site {site}")
            a = out / np.linalg.norm(out)
            total = maps.kraus[label] @ total
            frame = frame.after(byproduct(planned.basis.axis, label))
            done = label in planned.success
            basis = _describe(planned.basis, planned.measured_angle)
            trace.steps.append(StepRecord(len(trace.steps), site, basis, label, probs[label],
                                          frame.x_exp, frame.z_exp, block, leak))
            site += 1
    trace.end_site, trace.frame = site - 1, frame
    corrected = frame.correct(a)
    corrected = corrected / np.linalg.norm(corrected)
    trace.readout = LogicalReadout(complex(corrected[0]), complex(corrected[1]),
                                   max((s.leakage for s in trace.steps), default=0.0))
    target = program.unitary()
    if tomography:
        fix = np.linalg.inv(frame.operator())

        def runner(psi):
            return fix @ total @ psi, 0.0

        trace.tomography = process_tomography(runner, 2, target)
        trace.fidelity = trace.tomography.fidelity
    else:
        ideal = target @ (np.asarray(logical, dtype=complex) / np.linalg.norm(logical))
        trace.fidelity = float(abs(np.vdot(ideal, corrected)) ** 2)
    trace.channel = np.linalg.inv(frame.operator()) @ total
    trace.unitary_fidelity = unitary_fidelity(target, trace.channel)
    return trace


@dataclass(frozen=True)
class ReadoutResult:
    bit: int  # None when the chain ran out
    trail: tuple
    sites_consumed: int
    probability: float
    frame: ByproductFrame


def readout_scan(engine, logical, start=0, frame=None, outcomes=None, rng=None):
    """Measure S^z site by site until a +-1 outcome fixes the logical bit.

    Outcome ``+1`` means logical 0 before the frame correction; an outcome
    ``0`` leaves ``Z_L`` and the scan continues.
    """
    frame = frame or ByproductFrame()
    basis = sz_basis()
    a = np.asarray(logical, dtype=complex)
    a = a / np.linalg.norm(a)
    forced = list(outcomes) if outcomes is not None else None
    trail, prob, site = [], 1.0, start
    while site <= engine.last_site:
        maps = engine.step_maps(site, basis)
        probs = maps.probabilities(a)
        label = _choose(probs, forced.pop(0) if forced else None, rng)
        prob *= probs[label]
        trail.append(label)
        site += 1
        if label in ("+1", "-1"):
            bit = int(label == "-1") ^ frame.x_exp
            return ReadoutResult(bit, tuple(trail), site - start, prob, frame)
        out, _, _ = maps.apply(label, a)
        a = out / np.linalg.norm(out)
        frame = frame.after(byproduct("sz", label))
    return ReadoutResult(None, tuple(trail), site - start, prob, frame)
