"""Discrete GW baseline: conditional-gradient solver over the coupling polytope,
a log-domain entropic inner solver, an exhaustive small-instance oracle, and
the plan-fitted affine map.

The quadratic objective decomposes into a marginal-only constant plus a
bilinear term, so both the cost and its gradient cost O(N^2 M + N M^2).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractViolation, SingularFit, SolverDivergence
from .validation import (
    as_matrix,
    check_positive,
    check_probability_vector,
    check_square_symmetric,
)


@dataclass(frozen=True)
class CostProfile:
    """Pairwise intra-space cost matrices for the two point clouds."""

    C_X: np.ndarray
    C_Y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "C_X", check_square_symmetric(self.C_X, name="C_X"))
        object.__setattr__(self, "C_Y", check_square_symmetric(self.C_Y, name="C_Y"))

    @classmethod
    def inner_product(cls, X, Y) -> "CostProfile":
        X = as_matrix(X, name="X")
        Y = as_matrix(Y, name="Y")
        return cls(X @ X.T, Y @ Y.T)


@dataclass
class DiscretePlan:
    """Nonnegative coupling with its prescribed marginals and solve metadata."""

    coupling: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray
    converged: bool = True
    n_iter: int = 0
    marginal_error: float = 0.0
    objective_history: list = field(default_factory=list)

    def __post_init__(self):
        self.coupling = as_matrix(self.coupling, name="coupling")
        self.row_marginal = check_probability_vector(
            self.row_marginal, size=self.coupling.shape[0], name="row_marginal")
        self.col_marginal = check_probability_vector(
            self.col_marginal, size=self.coupling.shape[1], name="col_marginal")
        if np.any(self.coupling < 0.0):
            raise ContractViolation("coupling must be nonnegative")

    def check_marginals(self, tol: float = 1e-6) -> None:
        err = max(
            float(np.max(np.abs(self.coupling.sum(axis=1) - self.row_marginal))),
            float(np.max(np.abs(self.coupling.sum(axis=0) - self.col_marginal))),
        )
        if err > tol:
            raise ContractViolation(f"marginal violation {err:.3e} exceeds {tol:g}")


def sinkhorn(cost, a, b, epsilon: float, max_iter: int = 2000,
             tol: float = 1e-9) -> DiscretePlan:
    """Entropic OT plan via log-domain alternating scaling.

    Always runs in the log domain, so tiny epsilon only costs iterations,
    never underflow. If the marginal violation has not reached tol within
    max_iter, the plan is returned with converged=False.
    """
    C = as_matrix(cost, name="cost")
    a = check_probability_vector(a, size=C.shape[0], name="a")
    b = check_probability_vector(b, size=C.shape[1], name="b")
    check_positive(epsilon, "epsilon")

    logK = -C / epsilon
    loga = np.log(a)
    logb = np.log(b)
    u = np.zeros_like(loga)
    v = np.zeros_like(logb)

    def logsumexp(M, axis):
        peak = M.max(axis=axis, keepdims=True)
        return (peak + np.log(np.sum(np.exp(M - peak), axis=axis, keepdims=True))).squeeze(axis)

    err = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        u = loga - logsumexp(logK + v[None, :], axis=1)
        v = logb - logsumexp(logK + u[:, None], axis=0)
        plan = np.exp(logK + u[:, None] + v[None, :])
        err = max(
            float(np.max(np.abs(plan.sum(axis=1) - a))),
            float(np.max(np.abs(plan.sum(axis=0) - b))),
        )
        if err <= tol:
            break
    plan = np.exp(logK + u[:, None] + v[None, :])
    return DiscretePlan(plan, a, b, converged=err <= 1e-6,
                        n_iter=it, marginal_error=err)


def gw_cost(plan: DiscretePlan, profile: CostProfile) -> float:
    """Quadratic GW objective of a plan, via the marginal decomposition."""
    pi = plan.coupling
    Cx, Cy = profile.C_X, profile.C_Y
    if pi.shape != (Cx.shape[0], Cy.shape[0]):
        raise ContractViolation("plan shape inconsistent with the cost profile")
    a = pi.sum(axis=1)
    b = pi.sum(axis=0)
    quad = float(a @ (Cx * Cx) @ a + b @ (Cy * Cy) @ b)
    bilinear = float(np.sum(pi * (Cx @ pi @ Cy)))
    return quad - 2.0 * bilinear


@dataclass
class GWSolveConfig:
    max_iter: int = 200
    tol: float = 1e-10
    inner: str = "auto"  # auto | assignment | sinkhorn
    epsilon_scale: float = 1e-3
    sinkhorn_max_iter: int = 2000
    # scipy's assignment solves 2000x2000 in well under a second, so the
    # benchmark protocol's sample size stays on the exact path
    assignment_limit: int = 2048
    # conditional gradient alone is a local search on these concave
    # instances; seeded restarts plus swap polish recover the global
    # optimum on most small Monge-feasible problems
    n_starts: int = 8
    polish_limit: int = 128


def _is_uniform(w: np.ndarray) -> bool:
    return bool(np.allclose(w, 1.0 / w.size, atol=1e-12))


def _linear_minimizer(lin: np.ndarray, a: np.ndarray, b: np.ndarray,
                      config: GWSolveConfig) -> np.ndarray:
    """Coupling maximizing <lin, gamma> over the transport polytope."""
    N, M = lin.shape
    use_assignment = (
        config.inner == "assignment"
        or (config.inner == "auto" and N == M and N <= config.assignment_limit
            and _is_uniform(a) and _is_uniform(b))
    )
    if use_assignment:
        if N != M:
            raise ContractViolation("assignment inner solver needs N == M")
        rows, cols = linear_sum_assignment(-lin)
        gamma = np.zeros_like(lin)
        gamma[rows, cols] = 1.0 / N
        return gamma
    spread = float(lin.max() - lin.min())
    if spread == 0.0:
        return np.outer(a, b)
    eps = config.epsilon_scale * spread
    plan = sinkhorn(-lin, a, b, epsilon=eps, max_iter=config.sinkhorn_max_iter,
                    tol=1e-9)
    return plan.coupling


def _frank_wolfe(pi, Cx, Cy, a, b, config: GWSolveConfig):
    """Conditional-gradient descent from the given coupling; returns (pi, history)."""
    history = [gw_cost(DiscretePlan(pi, a, b), CostProfile(Cx, Cy))]
    for _ in range(config.max_iter):
        lin = Cx @ pi @ Cy
        gamma = _linear_minimizer(lin, a, b, config)
        delta = gamma - pi
        slope = -4.0 * float(np.sum(lin * delta))
        if not np.isfinite(slope):
            raise SolverDivergence("non-finite search direction")
        scale = max(1.0, abs(history[-1]))
        if slope >= -config.tol * scale:
            break
        curvature = -2.0 * float(np.sum(delta * (Cx @ delta @ Cy)))
        if curvature > 0.0:
            t = min(1.0, -slope / (2.0 * curvature))
        else:
            t = 1.0
        if t <= 0.0:
            break
        pi = pi + t * delta
        obj = gw_cost(DiscretePlan(pi, a, b), CostProfile(Cx, Cy))
        if not np.isfinite(obj):
            raise SolverDivergence("objective diverged")
        history.append(obj)
        if history[-2] - history[-1] <= config.tol * scale and t >= 1.0 - 1e-12:
            break
    return pi, history


def _perm_cost(Cx, Cy, perm) -> float:
    N = perm.size
    diff = Cx - Cy[np.ix_(perm, perm)]
    return float(np.sum(diff * diff)) / (N * N)


def _two_opt(Cx, Cy, perm):
    """First-improvement swap polish of a permutation; deterministic sweeps."""
    N = perm.size
    perm = perm.copy()
    best = _perm_cost(Cx, Cy, perm)
    improved = True
    while improved:
        improved = False
        for i in range(N - 1):
            for j in range(i + 1, N):
                perm[i], perm[j] = perm[j], perm[i]
                cost = _perm_cost(Cx, Cy, perm)
                if cost < best - 1e-15:
                    best = cost
                    improved = True
                else:
                    perm[i], perm[j] = perm[j], perm[i]
    return perm, best


def _assignment_of(pi) -> np.ndarray:
    rows, cols = linear_sum_assignment(-pi)
    perm = np.empty(pi.shape[0], dtype=int)
    perm[rows] = cols
    return perm


def _refine_monge(pi, Cx, Cy, a, config: GWSolveConfig):
    """Restart-and-polish stage for uniform equal-size (Monge-feasible) instances.

    The concave objective makes plain conditional gradient a permutation-
    vertex local search, so the stage explores seeded restarts refined by
    best-response iteration and a 2-opt swap polish, returning the best
    permutation found (or None when nothing beats the incumbent).
    """
    N = a.size
    candidates = [_assignment_of(pi)]
    for start in range(config.n_starts):
        perm = np.random.default_rng([7841, start]).permutation(N)
        coupling = np.zeros((N, N))
        coupling[np.arange(N), perm] = a
        for _ in range(config.max_iter):
            lin = Cx @ coupling @ Cy
            nxt = _assignment_of(lin)
            if np.array_equal(nxt, perm):
                break
            if _perm_cost(Cx, Cy, nxt) >= _perm_cost(Cx, Cy, perm) - 1e-15:
                break
            perm = nxt
            coupling = np.zeros((N, N))
            coupling[np.arange(N), perm] = a
        candidates.append(perm)

    best_perm, best_cost = None, np.inf
    for cand in candidates:
        polished, cost = _two_opt(Cx, Cy, cand)
        if cost < best_cost:
            best_perm, best_cost = polished, cost
    return best_perm, best_cost


def gw_discrete(profile: CostProfile, a, b,
                config: GWSolveConfig | None = None) -> DiscretePlan:
    """Conditional-gradient (Frank-Wolfe) minimization of the GW objective.

    Starts from the product coupling; every step solves the linearized
    transport problem and takes the exact quadratic line-search step, so the
    recorded objective never increases. GW is non-convex: the result is the
    best local optimum found. On small instances with uniform equal-size
    marginals, seeded restarts plus a swap polish are tried as well and kept
    only when they improve the objective.
    """
    config = config or GWSolveConfig()
    Cx, Cy = profile.C_X, profile.C_Y
    a = check_probability_vector(a, size=Cx.shape[0], name="a")
    b = check_probability_vector(b, size=Cy.shape[0], name="b")

    pi, history = _frank_wolfe(np.outer(a, b), Cx, Cy, a, b, config)

    monge = (a.size == b.size and a.size <= config.polish_limit
             and config.n_starts >= 0 and _is_uniform(a) and _is_uniform(b))
    if monge and config.polish_limit > 0:
        perm, cost = _refine_monge(pi, Cx, Cy, a, config)
        if perm is not None and cost < history[-1] - 1e-15:
            pi = np.zeros((a.size, b.size))
            pi[np.arange(a.size), perm] = a
            history.append(cost)

    plan = DiscretePlan(np.maximum(pi, 0.0), a, b, converged=True,
                        n_iter=len(history) - 1, marginal_error=0.0,
                        objective_history=history)
    plan.marginal_error = max(
        float(np.max(np.abs(plan.coupling.sum(axis=1) - a))),
        float(np.max(np.abs(plan.coupling.sum(axis=0) - b))),
    )
    return plan


def gw_bruteforce(profile: CostProfile, max_size: int = 8) -> tuple[np.ndarray, float]:
    """Exhaustive optimum over permutation couplings; refuses beyond N = 8."""
    Cx, Cy = profile.C_X, profile.C_Y
    N = Cx.shape[0]
    if Cy.shape[0] != N:
        raise ContractViolation("brute force requires equal-size configurations")
    if N > min(max_size, 8):
        raise ContractViolation(f"brute force refused for N = {N} > 8")
    best_cost = np.inf
    best_perm = None
    for perm in itertools.permutations(range(N)):
        p = np.asarray(perm)
        diff = Cx - Cy[np.ix_(p, p)]
        cost = float(np.sum(diff * diff)) / (N * N)
        if cost < best_cost:
            best_cost = cost
            best_perm = p
    return best_perm, best_cost


def barycentric_lr(plan: DiscretePlan, X, Y, ridge: float = 1e-8):
    """Affine map (A, b) minimizing the plan-weighted least squares to the targets.

    Solves the normal equations with a small ridge; raises SingularFit if the
    design is degenerate beyond that rescue.
    """
    X = as_matrix(X, name="X")
    Y = as_matrix(Y, name="Y")
    pi = plan.coupling
    if pi.shape != (X.shape[0], Y.shape[0]):
        raise ContractViolation("plan shape inconsistent with X and Y row counts")
    design = np.hstack([X, np.ones((X.shape[0], 1))])
    a = pi.sum(axis=1)
    gram = design.T @ (design * a[:, None])
    gram[np.diag_indices_from(gram)] += ridge
    rhs = design.T @ (pi @ Y)
    try:
        theta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularFit(f"normal equations singular despite ridge: {exc}") from exc
    if not np.all(np.isfinite(theta)):
        raise SingularFit("least-squares solution is not finite")
    A = theta[:-1].T
    b = theta[-1]
    return A, b


def plan_to_csv(plan: DiscretePlan, path, min_mass: float = 1e-12) -> None:
    """Write the plan as (row, col, mass) triplets, dropping negligible mass."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("row,col,mass\n")
        rows, cols = np.nonzero(plan.coupling >= min_mass)
        for r, c in zip(rows, cols):
            fh.write(f"{r},{c},{plan.coupling[r, c]!r}\n")
