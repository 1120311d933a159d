"""Operator bases, lattice embeddings, and eigenstate measurement records."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linalg

GAP_TOL = 1e-8

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class DegenerateEigenstateError(ValueError):
    """Raised when the requested eigenstate sits in a (near-)degenerate level."""


@dataclass(frozen=True)
class LatticeSpec:
    """Qubit lattice as an edge list; qubits are 1-indexed, edges i < j."""

    num_qubits: int
    edges: tuple

    def __post_init__(self):
        if self.num_qubits < 2:
            raise ValueError("lattice needs at least 2 qubits")
        seen = set()
        for i, j in self.edges:
            if not (1 <= i < j <= self.num_qubits):
                raise ValueError(f"bad edge ({i},{j}) for {self.num_qubits} qubits")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add((i, j))

    @classmethod
    def chain(cls, n: int) -> "LatticeSpec":
        return cls(n, tuple((i, i + 1) for i in range(1, n)))

    @classmethod
    def fully_connected(cls, n: int) -> "LatticeSpec":
        return cls(n, tuple((i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)))


@dataclass
class OperatorBasis:
    """Ordered set of Hermitian operators A_1..A_m sharing one dimension."""

    dim: int
    terms: list
    labels: list
    locality: Optional[list] = None  # per-term qubit support (i, j) or None

    def __post_init__(self):
        if len(self.terms) < 1:
            raise ValueError("basis needs at least one term")
        if len(self.labels) != len(self.terms):
            raise ValueError("labels/terms length mismatch")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")
        if self.locality is not None and len(self.locality) != len(self.terms):
            raise ValueError("locality/terms length mismatch")
        for lab, t in zip(self.labels, self.terms):
            t = linalg.check_hermitian(t)
            if t.shape[0] != self.dim:
                raise ValueError(f"term {lab} has dimension {t.shape[0]}, expected {self.dim}")

    @property
    def size(self) -> int:
        return len(self.terms)

    @property
    def n_qubits(self) -> Optional[int]:
        n = int(round(np.log2(self.dim)))
        return n if 2**n == self.dim else None

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "n_qubits": self.n_qubits,
            "terms": [
                {
                    "label": lab,
                    "support": list(self.locality[k]) if self.locality and self.locality[k] else None,
                    "matrix": linalg.matrix_to_json(t),
                }
                for k, (lab, t) in enumerate(zip(self.labels, self.terms))
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OperatorBasis":
        terms = [linalg.matrix_from_json(t["matrix"]) for t in obj["terms"]]
        labels = [t["label"] for t in obj["terms"]]
        supports = [tuple(t["support"]) if t.get("support") else None for t in obj["terms"]]
        locality = supports if any(s is not None for s in supports) else None
        return cls(dim=int(obj["dim"]), terms=terms, labels=labels, locality=locality)


@dataclass
class Truth:
    """Test-only provenance of a measurement record."""

    c_true: np.ndarray
    eigen_index: int
    lambda_true: float
    seed: Optional[int] = None


@dataclass
class MeasurementRecord:
    """Expectation values a_i = <psi|A_i|psi> on one eigenstate."""

    basis_ref: str
    a: np.ndarray
    truth: Optional[Truth] = None

    def to_json(self) -> dict:
        truth = None
        if self.truth is not None:
            truth = {
                "c_true": np.asarray(self.truth.c_true).tolist(),
                "eigen_index": self.truth.eigen_index,
                "lambda_true": self.truth.lambda_true,
                "seed": self.truth.seed,
            }
        return {"basis_ref": self.basis_ref, "a": np.asarray(self.a).tolist(), "truth": truth}

    @classmethod
    def from_json(cls, obj: dict) -> "MeasurementRecord":
        truth = None
        if obj.get("truth") is not None:
            t = obj["truth"]
            truth = Truth(
                c_true=np.asarray(t["c_true"], dtype=float),
                eigen_index=int(t["eigen_index"]),
                lambda_true=float(t["lambda_true"]),
                seed=t.get("seed"),
            )
        return cls(basis_ref=obj["basis_ref"], a=np.asarray(obj["a"], dtype=float), truth=truth)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    """E + E^dagger with the d^2 entries of E uniform on (-1,1) + i(-1,1)."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    e = rng.uniform(-1, 1, (d, d)) + 1j * rng.uniform(-1, 1, (d, d))
    return linalg.hermitize(e)


def embed_two_local(a4: np.ndarray, i: int, j: int, n: int) -> np.ndarray:
    """Embed a 4x4 operator on qubits (i, j) of an n-qubit register.

    Qubit 1 is the most significant tensor factor, so the result is bit-exact
    under serialization regardless of the edge.
    """
    a4 = linalg.check_hermitian(a4)
    if a4.shape != (4, 4):
        raise ValueError(f"expected a 4x4 operator, got {a4.shape}")
    if not (1 <= i < j <= n):
        raise ValueError(f"qubit pair ({i},{j}) out of range for n = {n}")
    if n == 2:
        return a4.copy()
    rest = [q for q in range(1, n + 1) if q != i and q != j]
    full = np.kron(a4, np.eye(2 ** (n - 2)))
    # tensor axes of `full` currently belong to qubits [i, j, *rest];
    # permute them into register order 1..n
    order = [i, j] + rest
    perm = [order.index(q) for q in range(1, n + 1)]
    t = full.reshape([2] * (2 * n))
    t = t.transpose(perm + [n + p for p in perm])
    return np.ascontiguousarray(t.reshape(2**n, 2**n))


def basis_generic(d: int, m: int, rng: np.random.Generator) -> OperatorBasis:
    """m independent dense random Hermitian terms of dimension d."""
    if m < 1:
        raise ValueError("need at least one term")
    terms = [random_hermitian(d, rng) for _ in range(m)]
    labels = [f"A{k + 1}" for k in range(m)]
    return OperatorBasis(dim=d, terms=terms, labels=labels)


def basis_two_local(lattice: LatticeSpec, rng: np.random.Generator) -> OperatorBasis:
    """One random 4x4 Hermitian term per lattice edge, embedded on the register."""
    n = lattice.num_qubits
    terms, labels, locality = [], [], []
    for i, j in lattice.edges:
        a4 = random_hermitian(4, rng)
        terms.append(embed_two_local(a4, i, j, n))
        labels.append(f"A{i}_{j}")
        locality.append((i, j))
    return OperatorBasis(dim=2**n, terms=terms, labels=labels, locality=locality)


def assemble(basis: OperatorBasis, c: Sequence[float]) -> np.ndarray:
    """H = sum_i c_i A_i."""
    c = np.asarray(c, dtype=float)
    if c.shape != (basis.size,):
        raise ValueError(f"coefficient vector length {c.shape} != basis size {basis.size}")
    h = np.zeros((basis.dim, basis.dim), dtype=complex)
    for ci, ai in zip(c, basis.terms):
        h += ci * ai
    return h


def eigenstate_measurements(
    basis: OperatorBasis,
    c: Sequence[float],
    eigen_index: int,
    seed: Optional[int] = None,
    basis_ref: str = "basis",
) -> MeasurementRecord:
    """Measure every basis term on the eigen_index-th eigenstate of H(c).

    Eigenstates are ordered by ascending eigenvalue. A (near-)degenerate
    level is rejected: the reconstruction target is not unique there.
    """
    c = np.asarray(c, dtype=float)
    h = assemble(basis, c)
    w, u = np.linalg.eigh(h)
    d = basis.dim
    if not (0 <= eigen_index < d):
        raise ValueError(f"eigen_index {eigen_index} out of range for dimension {d}")
    if eigen_index > 0 and w[eigen_index] - w[eigen_index - 1] <= GAP_TOL:
        raise DegenerateEigenstateError(
            f"eigenvalue {eigen_index} degenerate with {eigen_index - 1} "
            f"(gap {w[eigen_index] - w[eigen_index - 1]:.3e})"
        )
    if eigen_index < d - 1 and w[eigen_index + 1] - w[eigen_index] <= GAP_TOL:
        raise DegenerateEigenstateError(
            f"eigenvalue {eigen_index} degenerate with {eigen_index + 1} "
            f"(gap {w[eigen_index + 1] - w[eigen_index]:.3e})"
        )
    psi = u[:, eigen_index]
    a = np.empty(basis.size)
    for k, term in enumerate(basis.terms):
        val = psi.conj() @ (term @ psi)
        if abs(val.imag) > 1e-8:
            raise RuntimeError(f"expectation of Hermitian term has imaginary part {val.imag:.3e}")
        a[k] = val.real
    truth = Truth(c_true=c.copy(), eigen_index=eigen_index, lambda_true=float(w[eigen_index]), seed=seed)
    return MeasurementRecord(basis_ref=basis_ref, a=a, truth=truth)


def save_basis(basis: OperatorBasis, path) -> None:
    with open(path, "w") as fh:
        json.dump(basis.to_json(), fh)


def load_basis(path) -> OperatorBasis:
    with open(path) as fh:
        return OperatorBasis.from_json(json.load(fh))


def save_record(record: MeasurementRecord, path) -> None:
    with open(path, "w") as fh:
        json.dump(record.to_json(), fh)


def load_record(path) -> MeasurementRecord:
    with open(path) as fh:
        return MeasurementRecord.from_json(json.load(fh))
