import numpy as np
import pytest

from sunada_lab.covers import BaseGraph, quotient
from sunada_lab.errors import BadK, DimensionMismatch, RNotInvariant
from sunada_lab.magnetic import ConnectionData, MagneticOperator, build_operator, descend_connection, eigenvalues
from sunada_lab.quantum import CurvatureField, quantum_equivalence, quantum_hamiltonian

from test_covers import brooks_tower, fano_vg
from test_magnetic import random_conn


def scalar_op(lam, k):
    return MagneticOperator(np.array([[lam]], dtype=complex), k)


def test_scalar_examples():
    R = CurvatureField.constant(1)
    assert eigenvalues(quantum_hamiltonian(scalar_op(2.0, 1), R, 1))[0] == pytest.approx(5 / 6)
    assert eigenvalues(quantum_hamiltonian(scalar_op(2.0, 2), R, 2))[0] == pytest.approx(5 / 24)


def test_zero_curvature_halves_spectrum():
    g = BaseGraph.cycle(5)
    op = build_operator(g, random_conn(g, 3), 1)
    H = quantum_hamiltonian(op, CurvatureField.constant(5, 0.0), 1)
    assert np.allclose(eigenvalues(H), eigenvalues(op) / 2, atol=1e-14)


def test_errors():
    op = scalar_op(1.0, 1)
    with pytest.raises(BadK):
        quantum_hamiltonian(op, CurvatureField.constant(1), 0)
    with pytest.raises(DimensionMismatch):
        quantum_hamiltonian(op, CurvatureField.constant(2), 1)


@pytest.mark.parametrize("k", range(1, 9))
def test_affine_law_and_norm_bound(k):
    g = BaseGraph.from_pairs(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
    op = build_operator(g, random_conn(g, k), k)
    R = CurvatureField.constant(4)
    H = quantum_hamiltonian(op, R, k)
    assert np.abs(eigenvalues(H) - (eigenvalues(op) - 1 / 3) / (2 * k * k)).max() < 1e-12
    assert np.linalg.norm(H.matrix, 2) <= (np.linalg.norm(op.matrix, 2) + 2 / 6) / (2 * k * k) + 1e-12


def test_equal_subgroups_gap_zero():
    vg, g1, _ = fano_vg()
    m = quotient(vg, g1)
    c = descend_connection(m, random_conn(vg.base, 1))
    rep = quantum_equivalence(m, c, m, c, range(1, 9))
    assert rep.verdict and max(rep.gaps) == 0


def test_k_zero_rejected():
    vg, g1, _ = fano_vg()
    m = quotient(vg, g1)
    c = ConnectionData.zero(m)
    with pytest.raises(BadK):
        quantum_equivalence(m, c, m, c, [0, 1])


def test_non_invariant_curvature_rejected():
    vg, G, g1, g2, tau = brooks_tower()
    m1, m2, mid = quotient(vg, g1), quotient(vg, g2), quotient(vg, G)
    c1, c2 = ConnectionData.zero(m1), ConnectionData.zero(m2)
    R = np.full(28, -2.0)
    R[3] = 0.0
    with pytest.raises(RNotInvariant) as err:
        quantum_equivalence(m1, c1, m2, c2, [1], CurvatureField(R), CurvatureField.constant(28), mid=mid)
    assert 3 in err.value.orbit
