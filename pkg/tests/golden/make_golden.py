"""Regenerate ``golden.json`` from the independent oracle in ``tests/oracle.py``.

Run from the repository root: ``python tests/golden/make_golden.py``.
"""
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
import oracle  # noqa: E402


def total_spin_gap(n, beta, ramp=None):
    """First excitation among S_tot = 1/2 states (right edge qubit, 2Sz = 1)."""
    h, dims = oracle.hamiltonian(n, beta, "right_qubit", ramp=ramp)
    sz = np.real(oracle.total_sz(dims).diagonal())
    idx = np.flatnonzero(np.isclose(2 * sz, 1))
    ops = [sum(oracle._embed({k: (oracle.S1 if d == 3 else oracle.S12)[a]}, dims)
               for k, d in enumerate(dims)) for a in "xyz"]
    s2 = sum(o @ o for o in ops)[idx][:, idx].toarray()
    sw, sv = np.linalg.eigh(s2)
    q = sv[:, np.isclose(sw, 0.75, atol=1e-8)]
    half = np.linalg.eigvalsh(q.conj().T @ h[idx][:, idx].toarray() @ q)
    return float(half[1] - half[0])


def main():
    betas = [-2 / 3, -1 / 3, 0.0, 0.5]
    gold = {
        "aklt_right_qubit_energy": {
            str(n): float(oracle.sector_spectrum(n, -1 / 3, 1, 1, "right_qubit")[0])
            for n in range(4, 9)},
        "sector_spectra_right_qubit": {
            f"{n}:{b:.6f}": {
                "half": oracle.sector_spectrum(n, b, 1, 2, "right_qubit").tolist(),
                "three_half": oracle.sector_spectrum(n, b, 3, 1, "right_qubit").tolist()}
            for n in range(4, 9) for b in betas},
        "heisenberg_open_n6_sz0": oracle.sector_spectrum(6, 0.0, 0, 3).tolist(),
        "ramp_gap_linear11": {
            str(n): [total_spin_gap(n, 0.0, {0: lam}) for lam in np.linspace(1, 0, 11)]
            for n in (4, 6, 8)},
    }
    out = Path(__file__).with_name("golden.json")
    out.write_text(json.dumps(gold, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
