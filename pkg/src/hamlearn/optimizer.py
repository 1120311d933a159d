"""BFGS minimization with strong Wolfe line search and a random-restart loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .objective import ReconstructionObjective, first_positive_gap
from .operators import OperatorBasis


@dataclass
class SolveConfig:
    eps: float = 1e-8  # objective acceptance threshold
    eps0: float = 1e-6  # gradient-norm stationarity threshold
    max_iters: int = 500  # per restart
    max_restarts: int = 50
    init_low: float = -1.0
    init_high: float = 1.0
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_step_halvings: int = 60  # line-search evaluation budget
    hops_per_restart: int = 12  # outward basin-hop proposals after each stall
    seed: Optional[int] = None

    def __post_init__(self):
        if self.eps <= 0 or self.eps0 <= 0:
            raise ValueError("eps and eps0 must be positive")
        if not (0 < self.wolfe_c1 < self.wolfe_c2 < 1):
            raise ValueError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.max_iters < 1 or self.max_restarts < 1:
            raise ValueError("iteration and restart budgets must be >= 1")
        if self.hops_per_restart < 0:
            raise ValueError("hops_per_restart must be >= 0")
        if self.init_low >= self.init_high:
            raise ValueError("empty initialization range")

    @classmethod
    def from_dict(cls, obj: dict) -> "SolveConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown solve-config keys: {sorted(unknown)}")
        return cls(**obj)


@dataclass
class SolveResult:
    x_opt: np.ndarray
    f_final: float
    grad_norm_final: float
    restarts_used: int
    iterations_total: int
    converged: bool
    trace: list = field(default_factory=list)  # (f, grad_norm, ground_prob) per iteration
    gap_first_initial: float = 0.0  # first positive gap of Hs^2 at x^(0) of the winning restart
    gap_first_final: float = 0.0
    ground_prob_final: float = 0.0


class BfgsOutcome(NamedTuple):
    x: np.ndarray
    f: float
    grad_norm: float
    iterations: int
    stationary: bool  # False when the line search failed
    inv_hessian: np.ndarray


class _LineSearchFailure(Exception):
    pass


# Converged coefficient vectors sit at ||x|| of a few tens at most; beyond
# this the squared-Hamiltonian spectrum exceeds float64 resolution.
ITERATE_NORM_CAP = 1e5


def _cubic_minimum(a_lo, f_lo, g_lo, a_hi, f_hi, g_hi):
    """Minimizer of the cubic interpolant; None when it is not usable."""
    if a_lo == a_hi:
        return None
    d1 = g_lo + g_hi - 3 * (f_lo - f_hi) / (a_lo - a_hi)
    disc = d1 * d1 - g_lo * g_hi
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), a_hi - a_lo)
    denom = g_hi - g_lo + 2 * d2
    if denom == 0:
        return None
    a = a_hi - (a_hi - a_lo) * (g_hi + d2 - d1) / denom
    return a if np.isfinite(a) else None


def _wolfe_search(phi, dphi, f0, g0, c1, c2, max_evals, a_max=1e10):
    """Strong Wolfe line search (bracket then zoom with cubic interpolation).

    phi(a)/dphi(a) evaluate the restricted objective and its slope; g0 < 0 is
    required. Returns (alpha, f_alpha). Raises _LineSearchFailure when the
    evaluation budget runs out without an acceptable step.
    """
    evals = [0]

    def take(a):
        evals[0] += 1
        if evals[0] > max_evals:
            raise _LineSearchFailure
        return phi(a), dphi(a)

    def zoom(a_lo, f_lo, g_lo, a_hi, f_hi, g_hi):
        while True:
            a = _cubic_minimum(a_lo, f_lo, g_lo, a_hi, f_hi, g_hi)
            lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
            width = hi - lo
            if a is None or not (lo + 0.05 * width < a < hi - 0.05 * width):
                a = 0.5 * (a_lo + a_hi)
            if width < 1e-16 * max(1.0, abs(a_lo)):
                raise _LineSearchFailure
            fa, ga = take(a)
            if fa > f0 + c1 * a * g0 or fa >= f_lo:
                a_hi, f_hi, g_hi = a, fa, ga
            else:
                if abs(ga) <= -c2 * g0:
                    return a, fa
                if ga * (a_hi - a_lo) >= 0:
                    a_hi, f_hi, g_hi = a_lo, f_lo, g_lo
                a_lo, f_lo, g_lo = a, fa, ga

    a_prev, f_prev, g_prev = 0.0, f0, g0
    a = min(1.0, a_max)
    while True:
        fa, ga = take(a)
        if fa > f0 + c1 * a * g0 or (a_prev > 0 and fa >= f_prev):
            return zoom(a_prev, f_prev, g_prev, a, fa, ga)
        if abs(ga) <= -c2 * g0:
            return a, fa
        if ga >= 0:
            return zoom(a, fa, ga, a_prev, f_prev, g_prev)
        if a >= a_max:  # capped extension: accept the Armijo-satisfying step
            return a, fa
        a_prev, f_prev, g_prev = a, fa, ga
        a = min(2 * a, a_max)


def bfgs_minimize(
    objective: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    cfg: SolveConfig,
    f_target: Optional[float] = None,
    callback: Optional[Callable[[np.ndarray, float, float], None]] = None,
) -> BfgsOutcome:
    """BFGS with the standard rank-2 inverse-Hessian update.

    Stops when the gradient norm falls below cfg.eps0 (and, if f_target is
    given, only once the objective is below it -- the flat tail of the
    reconstruction objective has small gradients well before the objective
    itself is small), when f_target is reached, at the iteration cap, or on
    line-search failure. Always returns the best iterate seen.
    """
    x = np.asarray(x0, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 contains non-finite entries")
    n = x.size
    h = np.eye(n)
    fx = objective(x)
    gx = grad(x)
    best_x, best_f, best_g = x.copy(), fx, float(np.linalg.norm(gx))
    first_update = True
    iterations = 0
    stationary = False

    def track(xk, fk, gnorm):
        nonlocal best_x, best_f, best_g
        if fk < best_f:
            best_x, best_f, best_g = xk.copy(), fk, gnorm
        if callback is not None:
            callback(xk, fk, gnorm)

    gnorm = float(np.linalg.norm(gx))
    track(x, fx, gnorm)
    for _ in range(cfg.max_iters):
        if f_target is not None and fx < f_target:
            stationary = True
            break
        if gnorm < cfg.eps0 and (f_target is None or fx < f_target):
            stationary = True
            break
        if gnorm < 1e-12:
            stationary = True
            break
        p = -(h @ gx)
        slope = float(p @ gx)
        if slope >= 0:  # numerical loss of descent: reset to steepest descent
            h = np.eye(n)
            p = -gx
            slope = -float(gx @ gx)

        g_alpha = {}

        def phi(a):
            return objective(x + a * p)

        def dphi(a):
            ga = grad(x + a * p)
            g_alpha[a] = ga
            return float(ga @ p)

        # keep a single line search from jumping more than three decades past
        # the current iterate; runaway directions are cut off by the norm cap
        p_norm = float(np.linalg.norm(p))
        a_max = max(1.0, 1e3 * (1.0 + float(np.linalg.norm(x))) / p_norm)
        try:
            alpha, f_new = _wolfe_search(
                phi, dphi, fx, slope, cfg.wolfe_c1, cfg.wolfe_c2, cfg.max_step_halvings, a_max
            )
        except _LineSearchFailure:
            break
        iterations += 1
        s = alpha * p
        x_new = x + s
        if float(np.linalg.norm(x_new)) > ITERATE_NORM_CAP:
            # far beyond any meaningful inverse-temperature scale; the matrix
            # exponentials are pure round-off out here, so abandon the restart
            break
        g_new = g_alpha.get(alpha)
        if g_new is None:
            g_new = grad(x_new)
        y = g_new - gx
        sy = float(s @ y)
        if sy > 1e-12:
            if first_update:
                h = (sy / float(y @ y)) * np.eye(n)
                first_update = False
            rho = 1.0 / sy
            hy = h @ y
            h = h - rho * (np.outer(s, hy) + np.outer(hy, s)) + rho * (
                rho * float(y @ hy) + 1.0
            ) * np.outer(s, s)
        x, fx, gx = x_new, f_new, g_new
        gnorm = float(np.linalg.norm(gx))
        track(x, fx, gnorm)
    else:
        stationary = gnorm < cfg.eps0
    if f_target is not None and fx < f_target:
        stationary = True
    return BfgsOutcome(best_x, best_f, best_g, iterations, stationary, h)


def check_measurement_range(basis: OperatorBasis, a: np.ndarray) -> None:
    """Each a_i must lie in the numerical range of A_i (up to tolerance)."""
    a = np.asarray(a, dtype=float)
    if a.shape != (basis.size,):
        raise ValueError(f"measurement vector length {a.shape} != basis size {basis.size}")
    for k, term in enumerate(basis.terms):
        w = np.linalg.eigvalsh(term)
        if a[k] < w[0] - 1e-10 or a[k] > w[-1] + 1e-10:
            raise ValueError(
                f"measurement a[{k}] = {a[k]:.6g} outside the numerical range "
                f"[{w[0]:.6g}, {w[-1]:.6g}] of term {basis.labels[k]}"
            )


# Basin-hop proposal parameters. A stalled minimizer almost always sits at a
# scale too small for the global valley, pointing within a few degrees of a
# nearby deeper basin; proposals therefore push outward in norm with a small
# random rotation of the direction.
HOP_SCALE_CHOICES = (1.2, 1.5, 2.0)
HOP_SIGMA_CHOICES = (0.05, 0.1, 0.2)
HOP_MIN_NORM = 8.0


def _hop_proposal(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Outward-rescaled, direction-perturbed start point near a stalled iterate."""
    xn = float(np.linalg.norm(x))
    if xn == 0.0:
        return rng.standard_normal(x.size)
    s = max(float(rng.choice(HOP_SCALE_CHOICES)) * xn, HOP_MIN_NORM)
    prop = x / xn + float(rng.choice(HOP_SIGMA_CHOICES)) * rng.standard_normal(x.size)
    return s * prop / float(np.linalg.norm(prop))


def solve_hamiltonian(basis: OperatorBasis, a, cfg: Optional[SolveConfig] = None) -> SolveResult:
    """Random-restart outer loop: BFGS from fresh uniform draws until f < eps.

    Each restart that stalls above the acceptance threshold is followed by a
    short monotone basin-hopping chain (cfg.hops_per_restart proposals from
    _hop_proposal, keeping a hop only when it improves the chain); spurious
    minimizers cluster at small norm close in angle to deeper basins, so the
    chains convert many otherwise-wasted restarts into solutions.

    Exhausting the restart budget returns the best-so-far iterate with
    converged = False; it is a reportable outcome, not an exception.
    """
    if cfg is None:
        cfg = SolveConfig()
    a = np.asarray(a, dtype=float)
    check_measurement_range(basis, a)
    obj = ReconstructionObjective(basis, a)
    rng = np.random.default_rng(cfg.seed)

    best: Optional[BfgsOutcome] = None
    best_gaps = (0.0, 0.0)
    trace: list = []
    iterations_total = 0
    restarts_used = 0
    converged = False
    for _ in range(cfg.max_restarts):
        restarts_used += 1
        x0 = rng.uniform(cfg.init_low, cfg.init_high, obj.size)
        gap_initial = first_positive_gap(obj.diagnostics(x0).spectrum)
        run_trace: list = []

        def record(xk, fk, gnorm):
            run_trace.append((fk, gnorm, obj.diagnostics(xk).ground_prob))

        outcome = bfgs_minimize(obj.value, obj.gradient, x0, cfg, f_target=cfg.eps, callback=record)
        iterations_total += outcome.iterations
        outcome_trace = run_trace
        for _ in range(cfg.hops_per_restart):
            if outcome.f < cfg.eps:
                break
            prop = _hop_proposal(outcome.x, rng)
            run_trace = []
            hop = bfgs_minimize(
                obj.value, obj.gradient, prop, cfg, f_target=cfg.eps, callback=record
            )
            iterations_total += hop.iterations
            if hop.f < outcome.f:
                outcome = hop
                outcome_trace = run_trace
        if best is None or outcome.f < best.f:
            best = outcome
            best_gaps = (gap_initial, first_positive_gap(obj.diagnostics(outcome.x).spectrum))
            trace = outcome_trace
        if outcome.f < cfg.eps:
            converged = True
            break
    assert best is not None
    return SolveResult(
        x_opt=best.x,
        f_final=best.f,
        grad_norm_final=best.grad_norm,
        restarts_used=restarts_used,
        iterations_total=iterations_total,
        converged=converged,
        trace=trace,
        gap_first_initial=best_gaps[0],
        gap_first_final=best_gaps[1],
        ground_prob_final=obj.diagnostics(best.x).ground_prob,
    )
