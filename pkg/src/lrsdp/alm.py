"""Outer augmented Lagrangian loop: subproblem solves, multiplier updates,
dual assembly, saddle escape, rank adaptation, penalty adaptation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from . import manifolds, problem as prob, rtr, spectral
from .manifolds import FactorPoint, HessianContext
from .problem import KktResidues, ManifoldKind, SdpProblem
from .spectral import SymOperator


@dataclass
class SolverOptions:
    tol: float = 1e-8
    p0: int = 2
    sigma0: float = 1.0
    sigma_min: float = 1e-2
    sigma_max: float = 1e7
    gamma: float = 2.0
    tau: float = 1.0
    theta: float = 1e-3          # singular-value threshold for rank cuts
    delta_ne: int = 10           # max columns added per saddle escape
    eps0: float = 1e-2           # inner gradient tolerance schedule
    eps_decay: float = 0.5
    eps_floor: float = 1e-11
    max_outer_iters: int = 300
    max_time: Optional[float] = None
    max_inner_iters: int = 200
    seed: int = 0

    def validate(self):
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if not self.sigma_min <= self.sigma0 <= self.sigma_max:
            raise ValueError("need sigma_min <= sigma0 <= sigma_max")
        if self.delta_ne < 1:
            raise ValueError("delta_ne must be at least 1")


@dataclass
class IterationTrace:
    k: int
    p: int
    sigma: float
    eps: float
    eta_p: float
    eta_d: float
    eta_g: float
    eta_max: float
    gradnorm: float
    inner_iters: int
    time: float


@dataclass
class Solution:
    Y: FactorPoint
    y: np.ndarray
    z: np.ndarray
    S: SymOperator
    lambda_min: float
    lambda_max: float
    objective: float             # reported convention (sign and offset)
    residues: KktResidues
    trace: List[IterationTrace]
    status: str                  # "converged" | "iteration-limit" | "time-limit"
    iterations: int
    wall_time: float


class AlmSubproblem:
    """Penalized factorized cost for one outer iteration (fixed y, sigma)."""

    def __init__(self, sdp, y, sigma):
        self.sdp = sdp
        self.y = y
        self.sigma = sigma

    def cost(self, point):
        r0 = prob.apply_constraints(self.sdp, point.Y) - self.sdp.b
        return (prob.objective(self.sdp, point.Y) - float(np.dot(self.y, r0))
                + 0.5 * self.sigma * float(np.dot(r0, r0)))

    def at(self, point):
        sdp, sigma = self.sdp, self.sigma
        Y = point.Y
        r0 = prob.apply_constraints(sdp, Y) - sdp.b
        cost = (prob.objective(sdp, Y) - float(np.dot(self.y, r0))
                + 0.5 * sigma * float(np.dot(r0, r0)))
        resid = r0 - self.y / sigma if sdp.m else r0

        # materialize grad Phi(X) once per point when the dimension allows;
        # Hessian products then cost two dense matmuls plus one A / A* pass
        if sdp.n <= spectral.DENSE_THRESHOLD:
            Sd = sdp.C.to_dense() + sigma * prob.adjoint_dense(sdp, resid)
            stilde_times = Sd.__matmul__
        else:
            def stilde_times(V):
                return sdp.C.matvec(V) \
                    + sigma * prob.apply_adjoint_times(sdp, resid, V)
        W = stilde_times(Y)
        z = manifolds.multiplier_z(point, W)
        grad = manifolds.riem_grad(point, W, z)

        # sparse map G with A(Y U^T + U Y^T) = G vec(U), built once per point
        m, n, p = sdp.m, sdp.n, point.p
        if m:
            G = _sym_constraint_map(sdp, Y)
            adjT = sdp._adjoint_map_T()

        def curvature(U):
            if m == 0:
                return np.zeros_like(U)
            w = G @ U.ravel()
            return sigma * (adjT @ w).reshape(n, n) @ Y

        ctx = HessianContext(stilde_times, curvature, z)
        return _PointState(point, cost, grad, ctx)

    def dual_residual(self, point):
        r0 = prob.apply_constraints(self.sdp, point.Y) - self.sdp.b
        return r0 - self.y / self.sigma if self.sdp.m else r0


def _sym_constraint_map(sdp, Y):
    """Sparse (m, n p) matrix G with A(Y U^T + U Y^T) = G vec(U).

    Triplet t of A_k contributes w_t Y[r_t] at the columns of row c_t and
    w_t Y[c_t] at the columns of row r_t.
    """
    n, p = Y.shape
    tr, tc, tw, tm = sdp._tr, sdp._tc, sdp._tw, sdp._tm
    rows = np.repeat(np.concatenate([tm, tm]), p)
    cols = ((np.concatenate([tc, tr])[:, None] * p
             + np.arange(p)[None, :]).ravel())
    vals = np.concatenate([tw[:, None] * Y[tr],
                           tw[:, None] * Y[tc]], axis=0).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(sdp.m, n * p))


@dataclass
class _PointState:
    point: FactorPoint
    cost: float
    grad: np.ndarray
    ctx: HessianContext

    def hess_vec(self, U):
        return manifolds.riem_hess_vec(self.point, U, self.ctx)


def assemble_dual(sdp, point, y, sigma):
    """Multipliers z and the dual slack operator S = grad Phi(X) - B*(z)."""
    sub = AlmSubproblem(sdp, y, sigma)
    resid = sub.dual_residual(point)
    W = sdp.C.matvec(point.Y) \
        + sigma * prob.apply_adjoint_times(sdp, resid, point.Y)
    z = manifolds.multiplier_z(point, W)

    def action(V):
        out = sdp.C.matvec(V) + sigma * prob.apply_adjoint_times(sdp, resid, V)
        return out - manifolds.bstar_times(point, z, V)

    dense = None
    if sdp.n <= spectral.DENSE_THRESHOLD:
        dense = sdp.C.to_dense() + sigma * prob.adjoint_dense(sdp, resid)
        if point.manifold is ManifoldKind.UNIT_TRACE:
            dense = dense - z[0] * np.eye(sdp.n)
        elif point.manifold is ManifoldKind.UNIT_DIAGONAL:
            dense = dense - np.diag(z)
    return z, SymOperator(sdp.n, action, dense=dense)


def escape_direction(S, r, delta_ne, tol_escape, seed=0):
    """Second-order descent direction from negative eigenvalues of S.

    Returns (U, delta, n_ne_est) where U is n x (r + delta) with the first r
    columns zero and the rest the eigenvectors of the delta most negative
    eigenvalues; delta = 0 means no escape is needed.
    """
    k = min(delta_ne + 1, S.n)
    pairs = spectral.extreme_eigs(S, k, side="smallest", seed=seed)
    n_ne_est = sum(1 for val, _ in pairs if val < -tol_escape)
    delta = min(n_ne_est, delta_ne)
    if delta == 0:
        return np.zeros((S.n, r)), 0, n_ne_est
    U = np.zeros((S.n, r + delta))
    for j in range(delta):
        U[:, r + j] = pairs[j][1]
    return U, delta, n_ne_est


def truncate_rank(point, theta, rng=None):
    """SVD-truncate the factor to its numerical rank and re-feasibilize.

    Keeps singular values above theta * s_1; the truncated factor is
    retracted back onto the manifold (row or global renormalization), which
    perturbs it by at most the discarded singular mass.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    W, s, _ = spectral.thin_svd(point.Y)
    if s[0] <= 0.0:
        rng = rng or np.random.default_rng(0)
        col = manifolds.random_point(
            point.n, 1, point.manifold, rng.integers(2**32)).Y
        return FactorPoint(col, point.manifold), 1
    r = int(np.max(np.nonzero(s > theta * s[0])[0])) + 1
    Yr = W[:, :r] * s[:r]
    base = FactorPoint(np.zeros_like(Yr), point.manifold)
    try:
        truncated = manifolds.retract(base, Yr)
    except manifolds.RetractionError:
        # a zero row in the truncated factor: keep the untruncated point
        return point, point.p
    return truncated, r


def update_penalty(sigma, eta_p_raw, gradnorm, opts):
    """Adaptive penalty: grow when feasibility lags the gradient, else shrink."""
    if eta_p_raw > opts.tau * gradnorm:
        return min(sigma * opts.gamma, opts.sigma_max)
    return max(sigma / opts.gamma, opts.sigma_min)


def solve(sdp, opts=None):
    """Solve the SDP to KKT residues below tol via the outer ALM loop."""
    opts = opts or SolverOptions()
    opts.validate()
    t_start = time.perf_counter()
    rng = np.random.default_rng(opts.seed)

    p = max(1, opts.p0)
    point = manifolds.random_point(sdp.n, p, sdp.manifold, opts.seed)
    y = np.zeros(sdp.m)
    sigma = opts.sigma0
    eps = opts.eps0
    pending_dir = None
    trace: List[IterationTrace] = []
    status = "iteration-limit"
    eps_relaxed = False

    for k in range(opts.max_outer_iters):
        sub = AlmSubproblem(sdp, y, sigma)
        inner_opts = rtr.RtrOptions(grad_tol=eps,
                                    max_inner_iters=opts.max_inner_iters)
        point, report = rtr.minimize(sub, point, warm_dir=pending_dir,
                                     opts=inner_opts)
        pending_dir = None
        if report.reason == "radius-collapse" and not eps_relaxed:
            # soft failure: accept a 10x looser gradient this iteration
            eps_relaxed = True
        gradnorm = report.gradnorm

        r0 = prob.apply_constraints(sdp, point.Y) - sdp.b
        y_next = y - sigma * r0
        z, S = assemble_dual(sdp, point, y, sigma)
        lam_min = spectral.extreme_eigs(S, 1, side="smallest",
                                        seed=opts.seed)[0][0]
        lam_max = spectral.extreme_eigs(S, 1, side="largest", tol=1e-8,
                                        seed=opts.seed)[0][0]
        res = prob.kkt_residues(sdp, point.Y, y_next, z, lam_min, lam_max)
        trace.append(IterationTrace(
            k=k, p=point.p, sigma=sigma, eps=eps,
            eta_p=res.eta_p, eta_d=res.eta_d, eta_g=res.eta_g,
            eta_max=res.eta_max, gradnorm=gradnorm,
            inner_iters=report.iterations,
            time=time.perf_counter() - t_start))
        y = y_next

        if res.eta_max <= opts.tol:
            status = "converged"
            break
        if opts.max_time is not None \
                and time.perf_counter() - t_start > opts.max_time:
            status = "time-limit"
            break

        # rank truncation, then saddle escape padding (new columns of zeros)
        point, r = truncate_rank(point, opts.theta, rng)
        tol_escape = max(1e-12, 1e-4 * opts.tol * (1.0 + abs(lam_max)))
        U, delta, _ = escape_direction(S, r, opts.delta_ne, tol_escape,
                                       seed=opts.seed + k + 1)
        if delta > 0:
            Y_pad = np.concatenate(
                [point.Y, np.zeros((sdp.n, delta))], axis=1)
            point = FactorPoint(Y_pad, sdp.manifold)
            pending_dir = U

        eta_p_raw = np.linalg.norm(r0) / (1.0 + np.linalg.norm(sdp.b))
        sigma = update_penalty(sigma, eta_p_raw, gradnorm, opts)
        eps = max(opts.eps_floor, eps * opts.eps_decay)
        if eps_relaxed:
            eps = min(10.0 * eps, opts.eps0)
            eps_relaxed = False
    else:
        k = opts.max_outer_iters - 1

    obj = sdp.reported_objective(prob.objective(sdp, point.Y))
    return Solution(
        Y=point, y=y, z=z, S=S, lambda_min=float(lam_min),
        lambda_max=float(lam_max), objective=float(obj), residues=res,
        trace=trace, status=status, iterations=len(trace),
        wall_time=time.perf_counter() - t_start)
