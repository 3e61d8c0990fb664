"""Convex potentials with values, (sub)gradients, proximal maps and envelopes.

All operations are shape-polymorphic over the leading axes: a point is an
array whose last axis has length `dim`, so an (N, d) batch of particles is
processed in one vectorized call.  Every built-in is a finite convex function
on all of R^d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Potential",
    "IsotropicQuadratic",
    "DiagonalQuadratic",
    "L1Potential",
    "CompositePotential",
    "ProxSolverSettings",
    "ProxConvergenceError",
    "soft_threshold",
]


class ProxConvergenceError(RuntimeError):
    """Iterative prox subproblem failed to reach tolerance within the budget."""


@dataclass(frozen=True)
class ProxSolverSettings:
    """Controls for the iterative prox used when no closed form exists."""

    max_iterations: int = 10_000
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


def soft_threshold(x: np.ndarray, threshold: float) -> np.ndarray:
    """Componentwise sign(x) * max(|x| - threshold, 0)."""
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


class Potential:
    """A convex potential V on R^d.

    Subclasses provide `value` and `prox`; smooth families also provide
    `gradient`.  Metadata:

    - ``strong_convexity``: the modulus of strong convexity (0 = merely convex)
    - ``grad_lipschitz``: Lipschitz constant of the gradient of the smooth
      part, or None when there is no smooth part
    - ``lipschitz``: Euclidean Lipschitz constant of the nonsmooth part, or
      None when there is none
    """

    dim: int
    strong_convexity: float = 0.0
    grad_lipschitz: float | None = None
    lipschitz: float | None = None
    is_smooth: bool = False

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise ValueError(
                f"point has trailing dimension {x.shape[-1] if x.ndim else 0}, "
                f"potential has dim {self.dim}"
            )
        return x

    def value(self, x) -> float | np.ndarray:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise ValueError(f"{type(self).__name__} is not differentiable everywhere")

    def subgradient(self, x) -> np.ndarray:
        """A member of the subdifferential at x (the gradient where smooth)."""
        return self.gradient(x)

    def prox(self, h: float, x) -> np.ndarray:
        raise NotImplementedError

    def moreau_envelope(self, h: float, x) -> float | np.ndarray:
        """inf_y { V(y) + |x-y|^2/(2h) }, evaluated at the prox point."""
        _check_step(h)
        x = self._check_point(x)
        y = self.prox(h, x)
        return self.value(y) + np.sum((x - y) ** 2, axis=-1) / (2.0 * h)

    def moreau_gradient(self, h: float, x) -> np.ndarray:
        """Gradient of the envelope: (x - prox(x)) / h."""
        _check_step(h)
        x = self._check_point(x)
        return (x - self.prox(h, x)) / h


def _check_step(h: float):
    if not h > 0:
        raise ValueError("step size h must be positive")


class IsotropicQuadratic(Potential):
    """V(x) = lam * |x|^2 / 2, lam > 0."""

    is_smooth = True

    def __init__(self, lam: float, dim: int):
        if lam <= 0:
            raise ValueError("lam must be positive")
        if dim < 1:
            raise ValueError("dim must be positive")
        self.lam = float(lam)
        self.dim = int(dim)
        self.strong_convexity = self.lam
        self.grad_lipschitz = self.lam
        self.lipschitz = None

    def value(self, x):
        x = self._check_point(x)
        return 0.5 * self.lam * np.sum(x * x, axis=-1)

    def gradient(self, x):
        return self.lam * self._check_point(x)

    def prox(self, h, x):
        _check_step(h)
        return self._check_point(x) / (1.0 + self.lam * h)


class DiagonalQuadratic(Potential):
    """V(x) = sum_i w_i x_i^2 / 2 with positive weights w."""

    is_smooth = True

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a nonempty vector")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        self.weights = w
        self.dim = w.size
        self.strong_convexity = float(w.min())
        self.grad_lipschitz = float(w.max())
        self.lipschitz = None

    def value(self, x):
        x = self._check_point(x)
        return 0.5 * np.sum(self.weights * x * x, axis=-1)

    def gradient(self, x):
        return self.weights * self._check_point(x)

    def prox(self, h, x):
        _check_step(h)
        return self._check_point(x) / (1.0 + h * self.weights)


class L1Potential(Potential):
    """V(x) = w * |x|_1 with w >= 0; prox is soft thresholding.

    The Euclidean Lipschitz constant is w * sqrt(d) (tight, since
    |x|_1 <= sqrt(d) |x|).
    """

    is_smooth = False

    def __init__(self, weight: float, dim: int):
        if weight < 0:
            raise ValueError("weight must be nonnegative")
        if dim < 1:
            raise ValueError("dim must be positive")
        self.weight = float(weight)
        self.dim = int(dim)
        self.strong_convexity = 0.0
        self.grad_lipschitz = None
        self.lipschitz = self.weight * float(np.sqrt(dim))

    def value(self, x):
        x = self._check_point(x)
        return self.weight * np.sum(np.abs(x), axis=-1)

    def subgradient(self, x):
        # sign(0) = 0 is a valid subgradient at the kink
        return self.weight * np.sign(self._check_point(x))

    def prox(self, h, x):
        _check_step(h)
        return soft_threshold(self._check_point(x), h * self.weight)


class CompositePotential(Potential):
    """V = f + g with f smooth (gradient-Lipschitz) and g prox-capable.

    The prox has no closed form; it is computed by proximal-gradient
    iteration on the strongly convex subproblem

        min_y  f(y) + g(y) + |x - y|^2 / (2h)

    with step 1/(M + 1/h), stopping on the fixed-point residual.
    """

    is_smooth = False

    def __init__(self, smooth: Potential, nonsmooth: Potential,
                 solver: ProxSolverSettings | None = None):
        if not smooth.is_smooth or smooth.grad_lipschitz is None:
            raise ValueError("smooth part must be differentiable with Lipschitz gradient")
        if smooth.dim != nonsmooth.dim:
            raise ValueError("smooth and nonsmooth parts must share a dimension")
        self.smooth = smooth
        self.nonsmooth = nonsmooth
        self.solver = solver or ProxSolverSettings()
        self.dim = smooth.dim
        # g is merely convex, so the strong convexity of V is that of f
        self.strong_convexity = smooth.strong_convexity
        self.grad_lipschitz = smooth.grad_lipschitz
        self.lipschitz = nonsmooth.lipschitz

    def value(self, x):
        return self.smooth.value(x) + self.nonsmooth.value(x)

    def subgradient(self, x):
        return self.smooth.gradient(x) + self.nonsmooth.subgradient(x)

    def prox(self, h, x):
        _check_step(h)
        x = self._check_point(x)
        step = 1.0 / (self.smooth.grad_lipschitz + 1.0 / h)
        y = x.copy()
        for _ in range(self.solver.max_iterations):
            grad = self.smooth.gradient(y) + (y - x) / h
            y_next = self.nonsmooth.prox(step, y - step * grad)
            residual = float(np.max(np.sqrt(np.sum((y_next - y) ** 2, axis=-1))))
            y = y_next
            if residual <= self.solver.tolerance:
                return y
        raise ProxConvergenceError(
            f"prox subproblem did not reach residual {self.solver.tolerance:g} "
            f"within {self.solver.max_iterations} iterations (last residual {residual:g})"
        )
