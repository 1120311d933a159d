"""Reconstruction objective, its exact gradient, and spectrum diagnostics.

The objective for a coefficient estimate x (which absorbs the inverse
temperature: a converged x equals sqrt(beta) * c) is

    f(x) = sum_i (tr(A_i rho(x)) - a_i)^2 + tr(Hs^2 rho(x)),

with Hs = sum_i x_i (A_i - a_i I) and rho = exp(-Hs^2) / tr exp(-Hs^2).
The gradient is forward-propagated through the intermediate values
v2..v10 (one matrix-exponential directional derivative per coefficient).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .operators import OperatorBasis

IMAG_RESIDUE_TOL = 1e-8


@dataclass
class GraphEval:
    """All intermediate node values of one objective evaluation."""

    x: np.ndarray
    v2: np.ndarray  # Hs
    v3: np.ndarray  # Hs^2
    v4: np.ndarray  # exp(-Hs^2)
    v5: float  # tr v4
    v6: np.ndarray  # rho
    v7: np.ndarray  # residuals tr(A_j rho) - a_j
    v8: float  # sum of squared residuals
    v9: float  # tr(Hs^2 rho)
    v10: float  # f = v8 + v9
    grad: Optional[np.ndarray] = None

    def to_json(self) -> dict:
        return {
            "x": self.x.tolist(),
            "v2": linalg.matrix_to_json(self.v2),
            "v3": linalg.matrix_to_json(self.v3),
            "v4": linalg.matrix_to_json(self.v4),
            "v5": self.v5,
            "v6": linalg.matrix_to_json(self.v6),
            "v7": self.v7.tolist(),
            "v8": self.v8,
            "v9": self.v9,
            "v10": self.v10,
            "grad": None if self.grad is None else self.grad.tolist(),
        }


@dataclass
class Diagnostics:
    """Spectrum of Hs^2 and the Boltzmann weight of its ground level."""

    spectrum: np.ndarray
    ground_prob: float
    gaps: np.ndarray


def first_positive_gap(spectrum: np.ndarray, tol: float = 1e-12) -> float:
    """First gap of an ascending spectrum exceeding tol (0.0 if none)."""
    gaps = np.diff(spectrum)
    for g in gaps:
        if g > tol:
            return float(g)
    return 0.0


def build_shifted_terms(basis: OperatorBasis, a: Sequence[float]) -> list:
    """B_i = A_i - a_i I; these are also the per-coefficient derivatives of Hs."""
    a = np.asarray(a, dtype=float)
    if a.shape != (basis.size,):
        raise ValueError(f"measurement vector length {a.shape} != basis size {basis.size}")
    eye = np.eye(basis.dim)
    return [term - ai * eye for term, ai in zip(basis.terms, a)]


def _real_trace(value: complex, scale: float = 1.0) -> float:
    """Real part of a trace that is real in exact arithmetic.

    scale carries the conditioning of the expression (product of operand
    norms); the imaginary residue is judged against it, since traces of large
    nearly-cancelling products legitimately carry round-off of that size.
    """
    if abs(value.imag) > IMAG_RESIDUE_TOL * max(1.0, abs(value.real), scale):
        raise RuntimeError(f"trace expected real, imaginary residue {value.imag:.3e}")
    return value.real


def _real_traces(values: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Vectorized form of _real_trace for arrays of guarded traces."""
    bound = IMAG_RESIDUE_TOL * np.maximum(1.0, np.maximum(np.abs(values.real), scales))
    residue = np.abs(values.imag)
    if np.any(residue > bound):
        worst = float(np.max(residue))
        raise RuntimeError(f"trace expected real, imaginary residue {worst:.3e}")
    return values.real


class ReconstructionObjective:
    """f(x), grad f(x), and diagnostics for one (basis, measurements) pair.

    The forward pass (one Hermitian eigendecomposition of Hs^2) is cached on
    the argument, so value/gradient/diagnostics at the same x share it. The
    exponential is evaluated with the minimum eigenvalue subtracted; the
    shift cancels in rho and in all reported ratios but prevents underflow
    once the spectrum grows large near convergence.
    """

    def __init__(self, basis: OperatorBasis, a: Sequence[float]):
        self.basis = basis
        self.a = np.asarray(a, dtype=float)
        self.shifted_terms = build_shifted_terms(basis, self.a)
        self._b_stack = np.asarray(self.shifted_terms, dtype=complex)
        self._cache_key: Optional[bytes] = None
        self._cache: Optional[dict] = None

    @property
    def size(self) -> int:
        return self.basis.size

    def _forward(self, x: np.ndarray) -> dict:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise ValueError(f"x has shape {x.shape}, expected ({self.size},)")
        if not np.all(np.isfinite(x)):
            raise ValueError("x contains non-finite entries")
        key = x.tobytes()
        if self._cache_key == key:
            return self._cache
        d = self.basis.dim
        v2 = np.zeros((d, d), dtype=complex)
        for xi, b in zip(x, self.shifted_terms):
            v2 += xi * b
        v3 = v2 @ v2
        lam, u = np.linalg.eigh(v3)
        mu = lam[0]
        wexp = np.exp(-(lam - mu))  # spectral shift: e^{-v3} = e^{-mu} U diag(wexp) U^dag
        v5s = float(np.sum(wexp))
        v4s = (u * wexp) @ u.conj().T
        v6 = v4s / v5s
        v6 = (v6 + v6.conj().T) / 2
        v7 = np.empty(self.size)
        for j, term in enumerate(self.basis.terms):
            v7[j] = _real_trace(linalg.trace_product(term, v6)) - self.a[j]
        v8 = float(v7 @ v7)
        # tr(v3 v6) in the shared eigenbasis; v3 is PSD, so clip the tiny
        # negative eigh round-off (visible at ||x|| ~ 1e2+) to keep f >= 0
        v9 = float(np.sum(np.maximum(lam, 0.0) * wexp) / v5s)
        fwd = {
            "x": x.copy(),
            "v2": v2,
            "v3": v3,
            "lam": lam,
            "u": u,
            "mu": mu,
            "wexp": wexp,
            "v5s": v5s,
            "v4s": v4s,
            "v6": v6,
            "v7": v7,
            "v8": v8,
            "v9": v9,
            "f": v8 + v9,
        }
        self._cache_key = key
        self._cache = fwd
        return fwd

    def value(self, x) -> float:
        return self._forward(np.asarray(x, dtype=float))["f"]

    def gradient(self, x) -> np.ndarray:
        """Exact gradient by forward propagation, one direction per coefficient.

        Everything is evaluated in the eigenbasis of v3: with P_k = U^dag B_k U
        and Q = sum_i x_i P_i, the derivative of v3 along coefficient k is
        represented by M_k = P_k Q + Q P_k, the derivative of the shifted
        exponential by T_k = Phi * (-M_k) (Phi the divided-difference table),
        and every downstream quantity is a trace against diagonal weights.
        The spectral shift mu is held fixed during differentiation; rho and
        every downstream node are invariant under the shift, so the result is
        the exact derivative.
        """
        fwd = self._forward(np.asarray(x, dtype=float))
        lam, u, mu = fwd["lam"], fwd["u"], fwd["mu"]
        v5s, v7, wexp = fwd["v5s"], fwd["v7"], fwd["wexp"]
        xvec = fwd["x"]
        d = self.basis.dim
        phi = linalg._divided_difference_table(-(lam - mu))
        uh = u.conj().T
        p = uh @ (self._b_stack @ u)  # (m, d, d), batched over directions
        q = np.tensordot(xvec, p, axes=1)
        m_arr = p @ q + q @ p
        t_arr = -phi[np.newaxis] * m_arr
        # A_j = B_j + a_j I, so its eigenbasis representation is P_j + a_j I
        a_rep = p + self.a[:, np.newaxis, np.newaxis] * np.eye(d)
        a_norms = np.linalg.norm(a_rep, axis=(1, 2))
        norm_m = np.linalg.norm(m_arr, axis=(1, 2))
        norm_t = np.linalg.norm(t_arr, axis=(1, 2))
        # t_j = tr(A_j v4s), used in the quotient-rule term of d(tr A_j rho)
        t = np.einsum("jii,i->j", a_rep, wexp).real
        v9u = float(np.sum(lam * wexp)) / v5s  # unclipped tr(v3 rho)
        lam_scale = float(np.max(np.abs(lam))) if d else 0.0
        dv5s = _real_traces(np.einsum("kii->k", t_arr), norm_t)
        tr_a_t = _real_traces(  # tr(A_j T_k) for every (j, k)
            np.einsum("jab,kba->jk", a_rep, t_arr), np.outer(a_norms, norm_t)
        )
        dv7 = tr_a_t / v5s - np.outer(t, dv5s) / v5s**2
        dv8 = 2 * v7 @ dv7
        tr_dv3_v6 = _real_traces(np.einsum("kii,i->k", m_arr, wexp), norm_m) / v5s
        tr_v3_dv4s = _real_traces(np.einsum("kii,i->k", t_arr, lam), lam_scale * norm_t)
        dv9 = tr_dv3_v6 + tr_v3_dv4s / v5s - v9u * dv5s / v5s
        grad = dv8 + dv9
        fwd["grad"] = grad
        return grad.copy()

    def graph(self, x) -> GraphEval:
        """Full node-by-node evaluation, with v4/v5 reported unshifted."""
        fwd = self._forward(np.asarray(x, dtype=float))
        scale = np.exp(-fwd["mu"])  # may underflow to 0 for debug output; rho is unaffected
        return GraphEval(
            x=fwd["x"].copy(),
            v2=fwd["v2"].copy(),
            v3=fwd["v3"].copy(),
            v4=scale * fwd["v4s"],
            v5=scale * fwd["v5s"],
            v6=fwd["v6"].copy(),
            v7=fwd["v7"].copy(),
            v8=fwd["v8"],
            v9=fwd["v9"],
            v10=fwd["f"],
            grad=None if "grad" not in fwd else fwd["grad"].copy(),
        )

    def diagnostics(self, x) -> Diagnostics:
        """Spectrum of Hs^2, its gaps, and the ground-level Boltzmann weight.

        ground_prob = e^{-E_g} / tr e^{-Hs^2}, computed in the shifted form
        1 / sum_i e^{-(E_i - E_g)} which is identical by cancellation.
        """
        fwd = self._forward(np.asarray(x, dtype=float))
        spectrum = np.maximum(fwd["lam"], 0.0)  # Hs^2 is PSD; clip eigh round-off
        ground_prob = float(1.0 / np.sum(np.exp(-(fwd["lam"] - fwd["lam"][0]))))
        return Diagnostics(spectrum=spectrum, ground_prob=ground_prob, gaps=np.diff(spectrum))


def density_matrix(basis: OperatorBasis, a, x) -> np.ndarray:
    """rho(x) = exp(-Hs^2) / tr exp(-Hs^2)."""
    return ReconstructionObjective(basis, a)._forward(np.asarray(x, dtype=float))["v6"].copy()


def evaluate(basis: OperatorBasis, a, x) -> float:
    return ReconstructionObjective(basis, a).value(x)


def gradient(basis: OperatorBasis, a, x) -> np.ndarray:
    return ReconstructionObjective(basis, a).gradient(x)


def diagnostics(basis: OperatorBasis, a, x) -> Diagnostics:
    return ReconstructionObjective(basis, a).diagnostics(x)
