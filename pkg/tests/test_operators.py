"""Unit tests for operator bases, embeddings, and measurement records."""

import numpy as np
import pytest

from hamlearn import operators
from hamlearn.operators import (
    DegenerateEigenstateError,
    LatticeSpec,
    MeasurementRecord,
    OperatorBasis,
    assemble,
    basis_generic,
    basis_two_local,
    eigenstate_measurements,
    embed_two_local,
    random_hermitian,
)


def embed_bruteforce(a4, i, j, n):
    """Independent oracle: build the embedded operator element by element.

    Qubit 1 is the most significant bit of the register index.
    """
    d = 2**n
    out = np.zeros((d, d), dtype=complex)
    for r in range(d):
        rb = [(r >> (n - q)) & 1 for q in range(1, n + 1)]
        for c in range(d):
            cb = [(c >> (n - q)) & 1 for q in range(1, n + 1)]
            if any(rb[q] != cb[q] for q in range(n) if q + 1 not in (i, j)):
                continue
            sub_r = 2 * rb[i - 1] + rb[j - 1]
            sub_c = 2 * cb[i - 1] + cb[j - 1]
            out[r, c] = a4[sub_r, sub_c]
    return out


class TestLattice:
    def test_chain(self):
        lat = LatticeSpec.chain(4)
        assert lat.edges == ((1, 2), (2, 3), (3, 4))

    def test_fully_connected(self):
        lat = LatticeSpec.fully_connected(4)
        assert len(lat.edges) == 6
        assert all(i < j for i, j in lat.edges)

    def test_bad_edge(self):
        with pytest.raises(ValueError):
            LatticeSpec(3, ((3, 1),))

    def test_duplicate_edge(self):
        with pytest.raises(ValueError):
            LatticeSpec(3, ((1, 2), (1, 2)))

    def test_too_few_qubits(self):
        with pytest.raises(ValueError):
            LatticeSpec(1, ())


class TestEmbedding:
    def test_against_bruteforce(self):
        rng = np.random.default_rng(31)
        for n in (2, 3, 4):
            for i in range(1, n):
                for j in range(i + 1, n + 1):
                    a4 = random_hermitian(4, rng)
                    got = embed_two_local(a4, i, j, n)
                    want = embed_bruteforce(a4, i, j, n)
                    assert np.array_equal(got, want), (n, i, j)

    def test_spectrum_multiplicity(self):
        rng = np.random.default_rng(37)
        a4 = random_hermitian(4, rng)
        w4 = np.linalg.eigvalsh(a4)
        n = 4
        full = embed_two_local(a4, 2, 4, n)
        w = np.linalg.eigvalsh(full)
        expected = np.sort(np.repeat(w4, 2 ** (n - 2)))
        assert np.allclose(w, expected, atol=1e-12)

    def test_bad_pair(self):
        with pytest.raises(ValueError):
            embed_two_local(np.eye(4), 2, 2, 3)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            embed_two_local(np.eye(2), 1, 2, 2)


class TestBases:
    def test_generic_shapes_and_labels(self):
        rng = np.random.default_rng(41)
        basis = basis_generic(8, 3, rng)
        assert basis.size == 3
        assert basis.dim == 8
        assert basis.labels == ["A1", "A2", "A3"]
        assert basis.n_qubits == 3

    def test_two_local_chain(self):
        rng = np.random.default_rng(43)
        basis = basis_two_local(LatticeSpec.chain(4), rng)
        assert basis.size == 3
        assert basis.dim == 16
        assert basis.locality == [(1, 2), (2, 3), (3, 4)]
        assert basis.labels == ["A1_2", "A2_3", "A3_4"]

    def test_random_hermitian_is_hermitian(self):
        rng = np.random.default_rng(47)
        for _ in range(10):
            a = random_hermitian(4, rng)
            assert np.linalg.norm(a - a.conj().T) == 0.0

    def test_random_hermitian_deterministic(self):
        a = random_hermitian(4, np.random.default_rng(5))
        b = random_hermitian(4, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_basis_validation(self):
        with pytest.raises(ValueError):
            OperatorBasis(dim=2, terms=[], labels=[])
        with pytest.raises(ValueError):
            OperatorBasis(dim=2, terms=[np.eye(2)], labels=["a", "b"])
        with pytest.raises(ValueError):
            OperatorBasis(dim=2, terms=[np.eye(2), np.eye(2)], labels=["a", "a"])
        with pytest.raises(ValueError):
            OperatorBasis(dim=3, terms=[np.eye(2)], labels=["a"])

    def test_assemble(self):
        basis = OperatorBasis(
            dim=2, terms=[operators.PAULI_X, operators.PAULI_Z], labels=["x", "z"]
        )
        h = assemble(basis, [2.0, -1.0])
        assert np.allclose(h, np.array([[-1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(ValueError):
            assemble(basis, [1.0])


class TestMeasurements:
    def test_eigenvalue_identity(self):
        # lambda_k = sum_i c_i <psi_k|A_i|psi_k> for every eigenstate
        rng = np.random.default_rng(53)
        for _ in range(10):
            basis = basis_generic(8, 3, rng)
            c = rng.uniform(0, 1, 3)
            w = np.linalg.eigvalsh(assemble(basis, c))
            for k in range(8):
                rec = eigenstate_measurements(basis, c, k)
                assert abs(c @ rec.a - w[k]) < 1e-10

    def test_numerical_range(self):
        rng = np.random.default_rng(59)
        basis = basis_generic(4, 2, rng)
        c = rng.uniform(0, 1, 2)
        rec = eigenstate_measurements(basis, c, 1)
        for k, term in enumerate(basis.terms):
            w = np.linalg.eigvalsh(term)
            assert w[0] - 1e-10 <= rec.a[k] <= w[-1] + 1e-10

    def test_truth_fields(self):
        rng = np.random.default_rng(61)
        basis = basis_generic(4, 2, rng)
        c = rng.uniform(0, 1, 2)
        rec = eigenstate_measurements(basis, c, 2, seed=99, basis_ref="b0")
        assert rec.basis_ref == "b0"
        assert rec.truth.eigen_index == 2
        assert rec.truth.seed == 99
        assert np.array_equal(rec.truth.c_true, c)

    def test_degenerate_rejected(self):
        basis = OperatorBasis(dim=2, terms=[np.eye(2)], labels=["I"])
        with pytest.raises(DegenerateEigenstateError):
            eigenstate_measurements(basis, [1.0], 0)

    def test_index_out_of_range(self):
        basis = OperatorBasis(dim=2, terms=[operators.PAULI_Z], labels=["z"])
        with pytest.raises(ValueError):
            eigenstate_measurements(basis, [1.0], 2)


class TestSerialization:
    def test_basis_round_trip(self, tmp_path):
        rng = np.random.default_rng(67)
        basis = basis_two_local(LatticeSpec.chain(3), rng)
        path = tmp_path / "basis.json"
        operators.save_basis(basis, path)
        back = operators.load_basis(path)
        assert back.dim == basis.dim
        assert back.labels == basis.labels
        assert back.locality == basis.locality
        for a, b in zip(back.terms, basis.terms):
            assert np.array_equal(a, b)

    def test_record_round_trip(self, tmp_path):
        rng = np.random.default_rng(71)
        basis = basis_generic(4, 2, rng)
        c = rng.uniform(0, 1, 2)
        rec = eigenstate_measurements(basis, c, 1, seed=5)
        path = tmp_path / "record.json"
        operators.save_record(rec, path)
        back = operators.load_record(path)
        assert np.array_equal(back.a, rec.a)
        assert back.truth.eigen_index == 1
        assert back.truth.lambda_true == rec.truth.lambda_true

    def test_record_without_truth(self):
        rec = MeasurementRecord(basis_ref="b", a=np.array([0.5]))
        back = MeasurementRecord.from_json(rec.to_json())
        assert back.truth is None
