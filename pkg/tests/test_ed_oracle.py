import itertools

import numpy as np
import pytest

from gaudin import dicke, ed_oracle, rg_core
from gaudin.algebra import LevelSet, RATIONAL, TRIGONOMETRIC
from gaudin.dicke import OperatorExpression, build_dicke_hamiltonian, excitation_number
from gaudin.ed_oracle import (
    HilbertBasis,
    MatrixOperator,
    commutator_norm,
    eigencheck,
    realize,
    realize_rg_charges,
    sector_spectrum,
    spectrum,
)
from gaudin.errors import (
    BasisMismatchError,
    DomainError,
    RepresentationError,
    ValidationError,
)
from gaudin.rg_core import DickeSpec, ModelSpec

JC = DickeSpec((1.0,), (0.5,), 0.5, 1.0, 1)


def _op(symbol, level=None):
    return OperatorExpression(((1.0, ((symbol, level),)),))


def test_spin_half_matrices_and_commutator():
    basis = HilbertBasis.spins([0.5])
    sz = realize(_op("sz", 0), basis).matrix
    sp = realize(_op("sp", 0), basis).matrix
    sm = realize(_op("sm", 0), basis).matrix
    assert np.allclose(sz, np.diag([-0.5, 0.5]))
    assert np.allclose(sp @ sm - sm @ sp, 2.0 * sz)


def test_su2_commutators_general_spin():
    for s in (0.5, 1.0, 1.5, 2.0):
        basis = HilbertBasis.spins([s])
        sz = realize(_op("sz", 0), basis).matrix
        sp = realize(_op("sp", 0), basis).matrix
        sm = sp.conj().T
        assert np.max(np.abs(sp @ sm - sm @ sp - 2.0 * sz)) < 1e-12
        assert np.max(np.abs(sz @ sp - sp @ sz - sp)) < 1e-12


def test_boson_truncation_artifact_localized():
    basis = HilbertBasis.bosons([3])
    b = realize(_op("b"), basis).matrix
    bdag = realize(_op("bdag"), basis).matrix
    comm = b @ bdag - bdag @ b
    expect = np.eye(4)
    expect[3, 3] = -3.0  # truncation artifact at the top Fock row
    assert np.allclose(comm, expect)


def test_jc_sector_matrix_matches_hand_expansion():
    ham = realize(build_dicke_hamiltonian(JC), HilbertBasis.dicke(JC, 4))
    idx = ham.basis.sector_indices(1)
    block = ham.matrix[np.ix_(idx, idx)]
    # sector basis {|n=1, mu=-1/2>, |n=0, mu=+1/2>}
    expect = np.array([[1.0 - 0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(block, expect)
    assert np.allclose(np.linalg.eigvalsh(block), [0.0, 1.0], atol=1e-14)


def test_spectrum_detuned_jc():
    spec = DickeSpec((0.5,), (0.5,), 0.3, 1.0, 1)
    ham = realize(build_dicke_hamiltonian(spec), HilbertBasis.dicke(spec, 6))
    ev = sector_spectrum(ham, 1)
    assert ev == pytest.approx(
        [0.5 - np.sqrt(0.1525), 0.5 + np.sqrt(0.1525)], abs=1e-10
    )


def test_spectrum_free_limit_is_combinatorial():
    spec = DickeSpec((0.7,), (0.5,), 0.0, 1.0, 1)
    ham = realize(build_dicke_hamiltonian(spec), HilbertBasis.dicke(spec, 2))
    expect = sorted(
        1.0 * n + 0.7 * mu for n in (0, 1, 2) for mu in (-0.5, 0.5)
    )
    assert np.allclose(spectrum(ham), expect, atol=1e-14)


def test_spectrum_requires_hermitian():
    basis = HilbertBasis.bosons([2])
    op = realize(_op("bdag"), basis)
    with pytest.raises(ValidationError):
        spectrum(op)


def test_commutator_disjoint_factors_is_zero():
    basis = HilbertBasis.spins([0.5, 0.5])
    a = realize(_op("sz", 0), basis)
    b = realize(_op("sz", 1), basis)
    assert commutator_norm(a, b) == 0.0


def test_hamiltonian_commutes_with_excitation_number():
    for cutoff in (4, 9):
        basis = HilbertBasis.dicke(JC, cutoff)
        ham = realize(build_dicke_hamiltonian(JC), basis)
        num = realize(excitation_number(JC), basis)
        assert commutator_norm(ham, num) < 1e-12


def test_sector_closure():
    spec = DickeSpec((0.8, 1.3), (0.5, 0.5), 0.2, 1.0, 2)
    basis = HilbertBasis.dicke(spec, 6)
    ham = realize(build_dicke_hamiltonian(spec), basis)
    full = spectrum(ham)
    pieces = np.sort(
        np.concatenate(
            [sector_spectrum(ham, m) for m in sorted(set(basis.excitation_numbers()))]
        )
    )
    assert np.allclose(pieces, full, atol=1e-10)


def test_rg_charges_commute_xi_one_rational():
    ls = LevelSet.from_spins((0.3, 1.1), (0.5, 0.5))
    spec = ModelSpec(ls, RATIONAL, 1, 0.42)
    r1, r2 = realize_rg_charges(spec, 1.0)
    assert commutator_norm(r1, r2) < 1e-12


def test_rg_charges_commute_on_unitary_grid():
    ls = LevelSet.from_spins((0.7, 1.9, 3.2), (0.5, 0.5, 0.5))
    spec = ModelSpec(ls, TRIGONOMETRIC, 1, 0.37)
    charges = realize_rg_charges(spec, 0.5)  # grid point n = 4 for Omega = 2
    for a, b in itertools.combinations(charges, 2):
        assert commutator_norm(a, b) < 1e-10


def test_rg_charges_off_grid_rejected():
    ls = LevelSet.from_spins((0.7, 1.9), (0.5, 0.5))
    spec = ModelSpec(ls, TRIGONOMETRIC, 1, 0.37)
    with pytest.raises(RepresentationError):
        realize_rg_charges(spec, 0.77)


def test_bosonic_charges_commute_and_need_cutoffs():
    ls = LevelSet.from_spins((0.3, 1.1), (0.5, 0.5))
    spec = ModelSpec(ls, RATIONAL, 1, 0.42)
    with pytest.raises(DomainError):
        realize_rg_charges(spec, 0.0)
    c1, c2 = realize_rg_charges(spec, 0.0, boson_cutoffs=(10, 10))
    assert commutator_norm(c1, c2) < 1e-10


def test_free_charges_are_number_operators():
    ls = LevelSet.from_spins((0.3, 1.1), (0.5, 0.5))
    spec = ModelSpec(ls, RATIONAL, 1, 0.0)
    for op in realize_rg_charges(spec, 1.0):
        off = op.matrix - np.diag(np.diag(op.matrix))
        assert np.max(np.abs(off)) == 0.0
    for op in realize_rg_charges(spec, 0.0, boson_cutoffs=(4, 4)):
        off = op.matrix - np.diag(np.diag(op.matrix))
        assert np.max(np.abs(off)) == 0.0


def test_eigencheck_diagonal_exact():
    basis = HilbertBasis.bosons([3])
    op = realize(_op("n"), basis)
    v = np.zeros(4)
    v[2] = 1.0
    ray, rel = eigencheck(op, v)
    assert ray == pytest.approx(2.0)
    assert rel == 0.0


def test_eigencheck_random_vector_is_discriminating():
    spec = DickeSpec((0.8, 1.3), (0.5, 0.5), 0.2, 1.0, 2)
    ham = realize(build_dicke_hamiltonian(spec), HilbertBasis.dicke(spec, 6))
    rng = np.random.default_rng(3)
    v = rng.normal(size=ham.basis.total_dim)
    ray, rel = eigencheck(ham, v)
    assert rel > 0.01


def test_eigencheck_zero_vector_rejected():
    basis = HilbertBasis.bosons([2])
    op = realize(_op("n"), basis)
    with pytest.raises(ValidationError):
        eigencheck(op, np.zeros(3))


def test_basis_mismatch_errors():
    basis = HilbertBasis.spins([0.5])
    with pytest.raises(BasisMismatchError):
        realize(_op("bdag"), basis)
    with pytest.raises(BasisMismatchError):
        realize(_op("sz", 3), basis)
    a = realize(_op("sz", 0), basis)
    b = realize(_op("n"), HilbertBasis.bosons([2]))
    with pytest.raises(BasisMismatchError):
        commutator_norm(a, b)


def test_hermitian_flag_verified():
    basis = HilbertBasis.bosons([2])
    mat = realize(_op("bdag"), basis).matrix
    with pytest.raises(ValidationError):
        MatrixOperator(mat, basis, hermitian=True)
