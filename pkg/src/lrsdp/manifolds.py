"""Geometry of the factor manifolds: projection, retraction, multipliers,
Riemannian gradient and Hessian-vector products.

A point is a dense n x p factor Y together with its manifold kind. Tangent
vectors are plain ndarrays tied to a base point by context.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .problem import ManifoldKind

_FEAS_TOL = 1e-12


class RetractionError(RuntimeError):
    """A retraction step produced a degenerate (unnormalizable) factor."""


@dataclass(frozen=True)
class FactorPoint:
    """Factor Y of X = Y Y^T constrained to a manifold."""

    Y: np.ndarray
    manifold: ManifoldKind

    @property
    def n(self):
        return self.Y.shape[0]

    @property
    def p(self):
        return self.Y.shape[1]

    def feasibility_error(self):
        """Distance of Y from its manifold's defining equations."""
        if self.manifold is ManifoldKind.FREE:
            return 0.0
        if self.manifold is ManifoldKind.UNIT_TRACE:
            return abs(np.linalg.norm(self.Y) - 1.0)
        return float(np.max(np.abs(np.linalg.norm(self.Y, axis=1) - 1.0)))


def project_tangent(point, U):
    """Orthogonal projection of U onto the tangent space at the point."""
    Y = point.Y
    if U.shape != Y.shape:
        raise ValueError(f"shape mismatch: {U.shape} vs {Y.shape}")
    if point.manifold is ManifoldKind.FREE:
        return U.copy()
    if point.manifold is ManifoldKind.UNIT_TRACE:
        return U - float(np.sum(U * Y)) * Y
    row_dots = np.einsum("ij,ij->i", U, Y)
    return U - row_dots[:, None] * Y


def retract(point, U, t=1.0):
    """Metric-projection retraction of Y + t U back onto the manifold."""
    Z = point.Y + t * U
    if point.manifold is ManifoldKind.FREE:
        return FactorPoint(Z, point.manifold)
    if point.manifold is ManifoldKind.UNIT_TRACE:
        nrm = np.linalg.norm(Z)
        if nrm < 1e-300:
            raise RetractionError("zero factor after step")
        return FactorPoint(Z / nrm, point.manifold)
    nrms = np.linalg.norm(Z, axis=1)
    if np.min(nrms) < 1e-300:
        raise RetractionError("zero row after step")
    return FactorPoint(Z / nrms[:, None], point.manifold)


def multiplier_z(point, grad_phi_Y):
    """Closed-form manifold multipliers from W = grad Phi(X) Y.

    UNIT_TRACE: z = <Y, W> (one entry). UNIT_DIAGONAL: z_i = Y_i . W_i,
    row-wise. FREE: empty. Never touches X itself.
    """
    Y = point.Y
    if point.manifold is ManifoldKind.FREE:
        return np.zeros(0)
    if point.manifold is ManifoldKind.UNIT_TRACE:
        return np.array([float(np.sum(Y * grad_phi_Y))])
    return np.einsum("ij,ij->i", Y, grad_phi_Y)


def bstar_times(point, z, V):
    """B*(z) @ V for the manifold's constraint matrices."""
    if point.manifold is ManifoldKind.FREE:
        return np.zeros_like(V)
    if point.manifold is ManifoldKind.UNIT_TRACE:
        return z[0] * V
    return z[:, None] * V


def riem_grad(point, grad_phi_Y, z):
    """Riemannian gradient 2 S Y = 2 (grad Phi(X) Y - B*(z) Y)."""
    return 2.0 * (grad_phi_Y - bstar_times(point, z, point.Y))


@dataclass
class HessianContext:
    """Point-local data needed for Riemannian Hessian-vector products.

    stilde_times: V -> grad Phi(X) V (the Euclidean dual matrix action).
    curvature:    U -> sigma * A*(A(Y U^T + U Y^T)) Y (penalty curvature).
    z:            manifold multipliers; on the sphere z[0] = Tr(grad Phi X)
                  and on the oblique manifold z = diag(grad Phi X).
    """

    stilde_times: Callable[[np.ndarray], np.ndarray]
    curvature: Callable[[np.ndarray], np.ndarray]
    z: np.ndarray


def riem_hess_vec(point, U, ctx, check_tangent=False):
    """Riemannian Hessian of the penalized cost applied to a tangent U."""
    if check_tangent:
        tu = project_tangent(point, U)
        if np.linalg.norm(tu - U) > 1e-8 * max(1.0, np.linalg.norm(U)):
            raise ValueError("input is not a tangent vector")
    Y = point.Y
    htilde = 2.0 * (ctx.stilde_times(U) + ctx.curvature(U))
    if point.manifold is ManifoldKind.FREE:
        return htilde
    if point.manifold is ManifoldKind.UNIT_TRACE:
        return htilde - float(np.sum(htilde * Y)) * Y - 2.0 * ctx.z[0] * U
    row_dots = np.einsum("ij,ij->i", htilde, Y)
    return htilde - row_dots[:, None] * Y - 2.0 * ctx.z[:, None] * U


def random_point(n, p, manifold, seed):
    """Standard-normal factor retracted onto the manifold; deterministic."""
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((n, p))
    base = FactorPoint(np.zeros((n, p)), ManifoldKind(manifold))
    return retract(base, Y)
