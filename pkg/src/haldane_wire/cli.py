"""Batch front end: ``haldane-wire <command> --config path.json``.

Every command validates its configuration completely before computing and
writes its artifacts only after the computation finished.  Timestamps go to
the sidecar ``run.log``; all other outputs are deterministic for a given
config and seed.
"""
import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .chain_model import ChainSpec, DimensionGuardError, build_mpo
from .diagnostics import phase_scan, rows_to_csv, rows_to_json
from .exact_engine import (
    DoubletError, EigensolverError, LeakageError, PropagatorError, TomographyAborted,
    decouple_two_chains, ground_sector, identify_two_qubit_gate, two_chain_gate,
    two_chain_kraus,
)
from .exact_engine.measurement import OutcomeError
from .ground_code import (
    ChainExhaustedError, LogicalProgram, MixedResource, RegionGuardError, channel_distance,
    enumerate_paths, make_engine, mixed_state_wire, run_wire, sample_readouts,
)
from .mps_engine import CanonicalFormError, CorrelationFitError, Mps, dmrg_ground, mpo_expectation

__all__ = ["main", "CONFIG_SCHEMA", "ConfigError", "load_config"]

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_RESOURCE = 0, 2, 3, 4
RNG_NAME = "numpy.random.PCG64"

log = logging.getLogger("haldane_wire.cli")

_number = {"type": "number"}
_complex = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}
_chain = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n_sites", "beta"],
    "properties": {
        "n_sites": {"type": "integer", "minimum": 2},
        "beta": _number,
        "j_coupling": {"type": "number", "exclusiveMinimum": 0},
        "boundary": {"enum": ["none", "left_qubit", "right_qubit", "both"]},
        "ramp": {"type": "object", "patternProperties": {"^[0-9]+$": _number},
                 "additionalProperties": False},
    },
}
_rotation = {
    "type": "object", "additionalProperties": False, "required": ["axis", "angle"],
    "properties": {"axis": {"enum": ["x", "z"]}, "angle": _number},
}
_program = {
    "oneOf": [
        {"type": "array", "items": _rotation},
        {"type": "object", "additionalProperties": False,
         "properties": {"rotations": {"type": "array", "items": _rotation},
                        "readout": {"type": "boolean"}}},
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "chain": _chain,
        "engine": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["oracle", "mps"]},
                "chi_max": {"type": "integer", "minimum": 2},
                "sweeps": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "decoupling": {"enum": ["symmetry", "adiabatic"]},
                "ramp": {
                    "type": "object", "additionalProperties": False,
                    "properties": {"total_time": {"type": "number", "exclusiveMinimum": 0},
                                   "steps": {"type": "integer", "minimum": 2},
                                   "shape": {"enum": ["linear", "smoothstep"]}},
                },
            },
        },
        "program": _program,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "output": {"type": "string"},
        "ground": {
            "type": "object", "additionalProperties": False,
            "properties": {"cut": {"type": "integer", "minimum": 1}},
        },
        "wire": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["trace", "tomography"]},
                "logical": {"type": "array", "items": _complex, "minItems": 2, "maxItems": 2},
                "start": {"type": "integer", "minimum": 0},
                "outcomes": {"type": "array", "items": {"type": "string"}},
            },
        },
        "scan": {
            "type": "object", "additionalProperties": False, "required": ["betas"],
            "properties": {
                "betas": {"type": "array", "items": _number},
                "n_sites": {"type": "integer", "minimum": 4},
                "plot_script": {"type": "boolean"},
            },
        },
        "mixed": {
            "type": "object", "additionalProperties": False, "required": ["weights"],
            "properties": {
                "n_sites": {"type": "integer", "minimum": 4},
                "weights": {"type": "array", "minItems": 1,
                            "items": {"type": "array", "items": _number,
                                      "minItems": 4, "maxItems": 4}},
                "baseline": {"type": "array", "items": _number, "minItems": 4, "maxItems": 4},
                "shots": {"type": "integer", "minimum": 0},
            },
        },
        "twochain": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "chain_b": _chain,
                "logical": {"type": "array", "items": _complex, "minItems": 4, "maxItems": 4},
                "outcomes": {"type": "array", "items": {"enum": ["x", "y", "z"]},
                             "minItems": 2, "maxItems": 2},
            },
        },
    },
}

_REQUIRED = {
    "ground": ["chain"], "wire": ["chain", "program"], "scan": ["scan"],
    "mixed": ["mixed"], "twochain": ["chain"],
}


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


def _complex_vector(pairs):
    v = np.array([complex(re, im) for re, im in pairs])
    n = np.linalg.norm(v)
    if n == 0:
        raise ConfigError("logical input must be nonzero")
    return v / n


def load_config(path, command):
    """Read, schema-check and semantically validate a config for ``command``.

    Returns the raw document and the parsed objects the command needs.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation at {list(exc.absolute_path)}: "
                          f"{exc.message}") from exc
    missing = [k for k in _REQUIRED[command] if k not in doc]
    if missing:
        raise ConfigError(f"command {command!r} needs config keys {missing}")
    parsed = {}
    try:
        if "chain" in doc:
            parsed["chain"] = ChainSpec.from_dict(doc["chain"])
        if "program" in doc:
            parsed["program"] = LogicalProgram.from_json(doc["program"])
        if "twochain" in doc and "chain_b" in doc["twochain"]:
            parsed["chain_b"] = ChainSpec.from_dict(doc["twochain"]["chain_b"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if command == "ground":
        n_total = len(parsed["chain"].site_dims())
        if not 1 <= doc.get("ground", {}).get("cut", 1) < n_total:
            raise ConfigError(f"entanglement cut outside 1..{n_total - 1}")
    if command == "scan" and not doc["scan"]["betas"]:
        raise ConfigError("scan needs a nonempty beta list")
    if command == "mixed":
        for w in doc["mixed"]["weights"] + [doc["mixed"].get("baseline", [1, 0, 0, 0])]:
            if min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
                raise ConfigError(f"invalid mixture weights {w}")
    if command == "wire" and "logical" in doc.get("wire", {}):
        parsed["logical"] = _complex_vector(doc["wire"]["logical"])
    if command == "twochain" and "logical" in doc.get("twochain", {}):
        parsed["logical"] = _complex_vector(doc["twochain"]["logical"])
    if command in ("wire", "twochain") and parsed["chain"].boundary != "right_qubit":
        raise ConfigError(f"{command} runs need boundary='right_qubit'")
    return doc, parsed


def _engine_params(doc):
    eng = dict(doc.get("engine", {}))
    kind = eng.pop("kind", "oracle")
    ramp = eng.pop("ramp", {})
    if kind == "oracle":
        params = {k: v for k, v in eng.items() if k == "decoupling"}
        params.update({k: v for k, v in ramp.items()})
    else:
        params = {k: v for k, v in eng.items() if k in ("chi_max", "sweeps", "tol")}
    return kind, params


def _header(command, doc):
    return {"command": command, "config": doc, "seed": doc["seed"],
            "rng": f"{RNG_NAME} (numpy {np.__version__})"}


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _cache_path(cache_dir, spec, params, twice):
    key = json.dumps({"chain": spec.to_dict(), "params": params, "twice_sz": twice},
                     sort_keys=True)
    return cache_dir / f"ground-{hashlib.sha256(key.encode()).hexdigest()[:16]}.mps"


def _sector_ground(spec, params, twice, cache_dir):
    path = _cache_path(cache_dir, spec, params, twice)
    if path.exists():
        log.info("cache hit: %s", path.name)
        return Mps.load(path)
    log.info("cache miss: %s", path.name)
    res = dmrg_ground(build_mpo(spec), spec.site_dims(), sz_total=twice / 2, **params)
    if not res.converged:
        raise EigensolverError(f"DMRG in sector 2Sz={twice} did not converge")
    cache_dir.mkdir(parents=True, exist_ok=True)
    res.mps.save(path)
    return Mps.load(path)  # fresh and cached runs report from identical data


def cmd_ground(doc, parsed, rng, out):
    spec = parsed["chain"]
    kind, params = _engine_params(doc)
    cut = doc.get("ground", {}).get("cut", len(spec.site_dims()) // 2)
    free = 2 - int(spec.has_left_qubit) - int(spec.has_right_qubit)
    base, top = free % 2, free + 2
    if kind == "oracle":
        lo = ground_sector(spec, base / 2)
        energies = [float(lo.energies[0]), float(ground_sector(spec, top / 2).energies[0])]
        weights = lo.state(0).schmidt_weights(cut)
    else:
        mpo = build_mpo(spec)
        states = [_sector_ground(spec, params, t, out / "cache") for t in (base, top)]
        energies = [float(np.real(mpo_expectation(s, mpo))) for s in states]
        weights = states[0].entanglement(cut).weights
    weights = np.asarray(weights)
    report = {
        "energy": energies[0], "sector_energies": {str(base): energies[0], str(top): energies[1]},
        "gap": energies[1] - energies[0], "cut": cut,
        "entropy_bits": float(-np.sum(weights * np.log2(weights))),
        "spectrum": [float(w) for w in weights[:8]],
    }
    return {"ground.json": _dumps({"header": _header("ground", doc), "report": report})}


def cmd_wire(doc, parsed, rng, out):
    spec, program = parsed["chain"], parsed["program"]
    kind, params = _engine_params(doc)
    opts = doc.get("wire", {})
    engine = make_engine(kind, spec, **params)
    try:
        trace = run_wire(engine, program, parsed.get("logical", (1.0, 0.0)),
                         outcomes=opts.get("outcomes"), rng=rng, start=opts.get("start", 0),
                         tomography=opts.get("mode", "trace") == "tomography")
    except ChainExhaustedError as exc:
        if exc.trace is not None:
            (out / "trace_partial.csv").write_text(exc.trace.to_csv())
        raise
    summary = {"fidelity": trace.fidelity, "unitary_fidelity": trace.unitary_fidelity,
               "sites": [trace.start_site, trace.end_site], "steps": len(trace.steps)}
    return {
        "trace.csv": trace.to_csv(),
        "trace.json": trace.to_json() + "\n",
        "summary.json": _dumps({"header": _header("wire", doc), "summary": summary}),
    }


PLOT_SCRIPT = '''"""Render fidelity and entropy against beta from scan.csv."""
import csv
import sys

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "scan.csv")))
beta = [float(r["beta"]) for r in rows]
fig, ax = plt.subplots(2, 1, sharex=True)
ax[0].plot(beta, [float(r["fidelity"]) for r in rows], "o-")
ax[0].set_ylabel("single-step fidelity")
ax[1].plot(beta, [float(r["entropy"]) for r in rows], "o-")
ax[1].set_ylabel("entropy (bits)")
ax[1].set_xlabel("beta")
fig.savefig("scan.png", dpi=150)
'''


def cmd_scan(doc, parsed, rng, out, jobs=1):
    opts = doc["scan"]
    kind, params = _engine_params(doc)
    params = {k: v for k, v in params.items() if k in ("chi_max", "sweeps", "tol")}
    seed = int(rng.integers(2 ** 32))
    rows = phase_scan(opts["betas"], opts.get("n_sites", 40), kind, jobs=jobs, seed=seed,
                      **params)
    warning = any(r.error for r in rows)
    if warning:
        log.warning("%d scan rows recorded solver errors", sum(bool(r.error) for r in rows))
    files = {
        "scan.csv": rows_to_csv(rows),
        "scan.json": rows_to_json(rows) + "\n",
        "scan_summary.json": _dumps({"header": _header("scan", doc), "warning": warning}),
    }
    if opts.get("plot_script", False):
        files["plot_scan.py"] = PLOT_SCRIPT
    return files


def cmd_mixed(doc, parsed, rng, out):
    opts = doc["mixed"]
    n = opts.get("n_sites", 12)
    program = parsed.get("program", LogicalProgram())
    paths = enumerate_paths(program)
    base_run = mixed_state_wire(MixedResource.from_weights(n, opts.get("baseline", [1, 0, 0, 0])),
                                program, paths)
    runs, mixtures = [], []
    for w in opts["weights"]:
        resource = MixedResource.from_weights(n, w)
        run = mixed_state_wire(resource, program, paths)
        runs.append(run)
        entry = {"weights": w, "min_fidelity": min(r.fidelity for r in run),
                 "distance_to_baseline": channel_distance(run, base_run)}
        if opts.get("shots"):
            shots = sample_readouts(resource, opts["shots"], rng)
            counts = {}
            for sites, label in shots:
                key = "exhausted" if label is None else f"{sites}:{label}"
                counts[key] = counts.get(key, 0) + 1
            entry["readout_counts"] = counts
        mixtures.append(entry)
    pairwise = max([channel_distance(a, b) for i, a in enumerate(runs) for b in runs[i + 1:]],
                   default=0.0)
    report = {"mixtures": mixtures, "max_pairwise_distance": pairwise, "paths": len(paths)}
    return {"mixed.json": _dumps({"header": _header("mixed", doc), "report": report})}


def cmd_twochain(doc, parsed, rng, out):
    spec_a = parsed["chain"]
    spec_b = parsed.get("chain_b", spec_a)
    opts = doc.get("twochain", {})
    logical = parsed.get("logical", np.full(4, 0.5, dtype=complex))
    joint = decouple_two_chains(spec_a, spec_b, logical)
    outcomes = tuple(opts["outcomes"]) if "outcomes" in opts else None
    res = two_chain_gate(joint, spec_a, spec_b, outcomes=outcomes, rng=rng)
    kraus, leak = two_chain_kraus(spec_a, spec_b, res.outcomes)
    gate, pa, pb, fid = identify_two_qubit_gate(kraus)
    report = {
        "outcomes": list(res.outcomes), "probability": res.probability,
        "logical": [[float(z.real), float(z.imag)] for z in res.logical],
        "gate": gate, "byproduct": [pa, pb], "gate_fidelity": fid,
        "leakage": max(leak, res.leakage),
    }
    return {"twochain.json": _dumps({"header": _header("twochain", doc),
                                     "report": report})}


COMMANDS = {"ground": cmd_ground, "wire": cmd_wire, "scan": cmd_scan, "mixed": cmd_mixed,
            "twochain": cmd_twochain}

SOLVER_ERRORS = (EigensolverError, DoubletError, LeakageError, PropagatorError,
                 TomographyAborted, CorrelationFitError, CanonicalFormError, OutcomeError,
                 RegionGuardError)
RESOURCE_ERRORS = (ChainExhaustedError, DimensionGuardError, MemoryError)


def _parser():
    p = argparse.ArgumentParser(prog="haldane-wire", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for scan rows")
    p.add_argument("--out", default=None, help="output directory (config 'output' or '.')")
    return p


def _attach_sidecar(out):
    handler = logging.FileHandler(out / "run.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be a 64-bit unsigned integer")
        doc, parsed = load_config(args.config, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    doc = dict(doc, seed=seed)
    out = Path(args.out or doc.get("output", "."))
    out.mkdir(parents=True, exist_ok=True)
    handler = _attach_sidecar(out)
    rng = np.random.Generator(np.random.PCG64(seed))
    log.info("%s started (seed %d, %s)", args.command, seed, RNG_NAME)
    try:
        fn = COMMANDS[args.command]
        files = fn(doc, parsed, rng, out, jobs=args.jobs) if args.command == "scan" \
            else fn(doc, parsed, rng, out)
        for name, text in files.items():
            (out / name).write_text(text)
        log.info("%s finished: %s", args.command, ", ".join(sorted(files)))
        return EXIT_OK
    except ConfigError as exc:
        log.error("config error: %s", exc)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RESOURCE_ERRORS as exc:
        log.error("resource exhausted: %s", exc)
        print(f"resource exhausted: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except SOLVER_ERRORS as exc:
        log.error("solver failure: %s", exc)
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    finally:
        log.removeHandler(handler)
        handler.close()


if __name__ == "__main__":
    sys.exit(main())
