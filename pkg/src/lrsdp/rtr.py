"""Riemannian trust-region inner solver with truncated CG subproblems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .manifolds import FactorPoint, RetractionError, retract

_ARMIJO_C1 = 1e-4
_ARMIJO_FACTOR = 0.5
_ARMIJO_MAX_BACKTRACKS = 40
_RADIUS_COLLAPSE = 1e-14


@dataclass
class RtrOptions:
    grad_tol: float = 1e-8
    max_inner_iters: int = 200
    initial_radius: Optional[float] = None  # default 0.1 * sqrt(n p)
    max_radius: Optional[float] = None      # default 10 * initial_radius
    rho_prime: float = 0.1
    tcg_kappa: float = 0.1
    tcg_theta: float = 1.0
    max_cg_iters: Optional[int] = None      # default dim of the tangent space


@dataclass
class RtrReport:
    gradnorm: float
    iterations: int
    cost_decrease: float
    reason: str  # "tolerance" | "max-iters" | "radius-collapse"


def _inner(A, B):
    return float(np.dot(A.ravel(), B.ravel()))


def tcg(grad, hess_vec, radius, kappa=0.1, theta=1.0, max_iters=None):
    """Truncated CG (Steihaug-Toint) for the trust-region model.

    Minimizes <grad, s> + 0.5 <s, H s> over ||s|| <= radius, stopping on
    negative curvature, the boundary, or the residual rule
    ||r|| <= ||r0|| * min(kappa, ||r0||^theta).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if max_iters is None:
        max_iters = grad.size
    eta = np.zeros_like(grad)
    r = grad.copy()
    d = -r
    rr = _inner(r, r)
    r0_norm = np.sqrt(rr)
    target = r0_norm * min(kappa, r0_norm ** theta)
    e_norm2 = 0.0
    for _ in range(max_iters):
        Hd = hess_vec(d)
        dHd = _inner(d, Hd)
        e_d = _inner(eta, d)
        d_norm2 = _inner(d, d)
        if dHd <= 0:
            tau = _boundary_step(e_norm2, e_d, d_norm2, radius)
            return eta + tau * d, "negative-curvature"
        alpha = rr / dHd
        new_e_norm2 = e_norm2 + 2 * alpha * e_d + alpha * alpha * d_norm2
        if new_e_norm2 >= radius * radius:
            tau = _boundary_step(e_norm2, e_d, d_norm2, radius)
            return eta + tau * d, "boundary"
        eta = eta + alpha * d
        e_norm2 = new_e_norm2
        r = r + alpha * Hd
        rr_new = _inner(r, r)
        if np.sqrt(rr_new) <= target:
            return eta, "converged"
        d = -r + (rr_new / rr) * d
        rr = rr_new
    return eta, "max-cg-iters"


def _boundary_step(e_norm2, e_d, d_norm2, radius):
    # positive root of ||eta + tau d||^2 = radius^2
    disc = e_d * e_d + d_norm2 * (radius * radius - e_norm2)
    return (-e_d + np.sqrt(max(disc, 0.0))) / d_norm2


def _line_search(model, point, state, direction):
    """Backtracking Armijo search along a supplied descent direction.

    Directions of zero gradient overlap (saddle escapes) are accepted on
    strict cost decrease alone.
    """
    slope = min(_inner(state.grad, direction), 0.0)
    t = 1.0
    for _ in range(_ARMIJO_MAX_BACKTRACKS):
        try:
            trial = retract(point, direction, t)
        except RetractionError:
            t *= _ARMIJO_FACTOR
            continue
        c = model.cost(trial)
        if c < state.cost + _ARMIJO_C1 * t * slope and c < state.cost:
            return trial
        t *= _ARMIJO_FACTOR
    return None


def minimize(model, point, warm_dir=None, opts=None):
    """Drive the Riemannian gradient norm of the model below grad_tol.

    ``model`` supplies ``cost(point)`` and ``at(point)``; the latter returns
    a state with ``cost``, ``grad`` (tangent ndarray) and ``hess_vec(U)``.
    A supplied warm direction is consumed by an Armijo line search before
    the trust-region loop starts.
    """
    opts = opts or RtrOptions()
    n, p = point.Y.shape
    radius = opts.initial_radius or 0.1 * np.sqrt(n * p)
    max_radius = opts.max_radius or 10.0 * radius
    radius = min(radius, max_radius)

    state = model.at(point)
    cost0 = state.cost
    if warm_dir is not None:
        warmed = _line_search(model, point, state, warm_dir)
        if warmed is not None:
            point = warmed
            state = model.at(point)

    iters = 0
    reason = "max-iters"
    gradnorm = np.sqrt(_inner(state.grad, state.grad))
    best_point, best_cost, best_gradnorm = point, state.cost, gradnorm
    while iters < opts.max_inner_iters:
        if gradnorm <= opts.grad_tol:
            reason = "tolerance"
            break
        if radius < _RADIUS_COLLAPSE:
            reason = "radius-collapse"
            break
        iters += 1
        step, _stop = tcg(state.grad, state.hess_vec, radius,
                          opts.tcg_kappa, opts.tcg_theta, opts.max_cg_iters)
        step_norm = np.sqrt(_inner(step, step))
        pred = -(_inner(state.grad, step)
                 + 0.5 * _inner(step, state.hess_vec(step)))
        try:
            trial = retract(point, step)
            trial_cost = model.cost(trial)
        except RetractionError:
            radius *= 0.25
            continue
        # regularized ratio; near the noise floor rho ~ 1 and the
        # (noise-scale) step is accepted rather than spinning in place
        reg = 1e-13 * max(1.0, abs(state.cost))
        rho = (state.cost - trial_cost + reg) / (pred + reg)
        if rho < 0.25:
            radius *= 0.25
        elif rho > 0.75 and step_norm >= 0.99 * radius:
            radius = min(2.0 * radius, max_radius)
        if rho > opts.rho_prime:
            point = trial
            state = model.at(point)
            gradnorm = np.sqrt(_inner(state.grad, state.grad))
            if state.cost <= best_cost:
                best_point, best_cost = point, state.cost
                best_gradnorm = gradnorm
    else:
        reason = "max-iters"
    if gradnorm <= opts.grad_tol:
        reason = "tolerance"
    elif state.cost > best_cost:
        # noise-scale uphill accepts can end above the best visited cost;
        # the returned iterate must keep the monotone decrease guarantee
        point, gradnorm = best_point, best_gradnorm
        state = model.at(point)
    return point, RtrReport(gradnorm=float(gradnorm), iterations=iters,
                            cost_decrease=float(cost0 - state.cost),
                            reason=reason)
