import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from haldane_wire.spin_algebra import (
    PAULI, cg_half_one, ladder_operators, logical_rx, logical_rz, measurement_observable,
    rotated_basis, spin_operators, standard_basis, symmetry_action, sz_basis, two_site_gate,
)

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


@pytest.mark.parametrize("spin", [0.5, 1])
def test_spin_commutators_and_casimir(spin):
    sx, sy, sz = spin_operators(spin)
    assert np.allclose(sx @ sy - sy @ sx, 1j * sz)
    assert np.allclose(sy @ sz - sz @ sy, 1j * sx)
    casimir = sx @ sx + sy @ sy + sz @ sz
    assert np.allclose(casimir, spin * (spin + 1) * np.eye(sx.shape[0]))


def test_spin_one_sx_spectrum():
    sx, _, _ = spin_operators(1)
    assert np.allclose(np.linalg.eigvalsh(sx), [-1, 0, 1])


def test_ladder_operators_are_adjoint():
    sp, sm, sz = ladder_operators(1)
    assert np.allclose(sm, sp.conj().T)
    assert np.allclose(sp @ sm - sm @ sp, 2 * sz)


def test_unsupported_spin_rejected():
    with pytest.raises(ValueError):
        spin_operators(1.5)


def test_standard_basis_bras_and_observable():
    b = standard_basis()
    assert np.allclose(b.bras[0], [-1 / np.sqrt(2), 0, 1 / np.sqrt(2)])
    assert np.allclose(b.bras @ b.bras.conj().T, np.eye(3))
    # <x|, <y|, <z| are eigenvectors of m^z(0) with eigenvalues +1, -1, 0
    m = measurement_observable(0.0)
    for bra, lam in zip(b.bras, (1.0, -1.0, 0.0)):
        assert np.allclose(bra.conj() @ m, lam * bra.conj())
    flip = np.zeros((3, 3))
    flip[0, 2] = flip[2, 0] = -1
    assert np.allclose(m, flip)


def test_standard_bras_are_null_vectors_of_spin_components():
    sx, sy, sz = spin_operators(1)
    b = standard_basis()
    for bra, s in zip(b.bras, (sx, sy, sz)):
        assert np.allclose(s @ bra.conj(), 0)


@settings(max_examples=40, deadline=None)
@given(angles)
def test_rotated_z_basis_diagonalizes_observable(theta):
    b = rotated_basis("z", theta)
    assert np.allclose(b.bras @ b.bras.conj().T, np.eye(3), atol=1e-12)
    m = measurement_observable(theta)
    for bra, lam in zip(b.bras, (1.0, -1.0, 0.0)):
        assert np.allclose(m @ bra.conj(), lam * bra.conj(), atol=1e-12)
    assert np.allclose(np.linalg.eigvalsh(m), [-1, 0, 1], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(angles)
def test_rotated_x_basis_orthonormal(theta):
    b = rotated_basis("x", theta)
    assert np.allclose(b.bras @ b.bras.conj().T, np.eye(3), atol=1e-12)
    assert b.labels == ("+", "-", "x")


def test_rotated_basis_reduces_to_standard_at_zero():
    std = standard_basis().bras
    assert np.allclose(rotated_basis("z", 0.0).bras, std)


def test_rotated_basis_rejects_bad_input():
    with pytest.raises(ValueError):
        rotated_basis("y", 0.3)
    with pytest.raises(ValueError):
        rotated_basis("z", np.inf)


def test_sz_basis_labels():
    b = sz_basis()
    assert b.labels == ("+1", "0", "-1")
    assert np.allclose(b.bras, np.eye(3))


def test_cg_half_block_matches_decoupling_amplitudes():
    cg = cg_half_one()
    c = np.sqrt(2 / 3)
    # a0 -> sqrt(2/3)[ |0>|G0>/sqrt2 - |+1>|G1> ]
    expected = np.zeros((3, 2))
    expected[1, 0] = c / np.sqrt(2)
    expected[0, 1] = -c
    assert np.allclose(cg.half[0], expected)
    iso = cg.isometry()
    assert np.allclose(iso.conj().T @ iso, np.eye(6), atol=1e-12)


def test_cg_sectors_have_definite_total_spin():
    cg = cg_half_one()
    s1 = spin_operators(1)
    sh = spin_operators(0.5)
    tot = [np.kron(a, np.eye(2)) + np.kron(np.eye(3), b) for a, b in zip(s1, sh)]
    s2 = sum(t @ t for t in tot)
    for v in cg.half:
        assert np.allclose(s2 @ v.reshape(6), 0.75 * v.reshape(6))
    for v in cg.quartet:
        assert np.allclose(s2 @ v.reshape(6), 3.75 * v.reshape(6))


def test_pi_z_rotation_and_time_reversal():
    u = symmetry_action("pi_z").unitary
    assert np.allclose(u, np.diag([-1, 1, -1]))
    tr = symmetry_action("TR")
    for s in spin_operators(1):
        assert np.allclose(tr.conjugate(s), -s)


def test_symmetry_rejects_unknown_kind_and_shape():
    with pytest.raises(ValueError):
        symmetry_action("pi_w")
    with pytest.raises(ValueError):
        symmetry_action("TR").conjugate(np.eye(2))


def test_two_site_gate_flips_sign_of_up_up_only():
    u = two_site_gate()
    target = np.eye(9)
    target[0, 0] = -1
    assert np.allclose(u, target, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(angles, angles)
def test_logical_rotations_compose(a, b):
    assert np.allclose(logical_rz(a) @ logical_rz(b), logical_rz(a + b))
    assert np.allclose(logical_rx(a) @ logical_rx(b), logical_rx(a + b))
    h = (PAULI["X"] + PAULI["Z"]) / np.sqrt(2)
    assert np.allclose(h @ logical_rz(a) @ h, logical_rx(a))
