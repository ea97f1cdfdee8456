"""Convex SCA subproblem built around the current beamformer.

Each concave quadratic ``w^T Qtilde_m w`` is replaced by its tangent plane
``a_m^T w + b_m`` at the expansion point, giving a piecewise-affine upper
bound. The stacked operator ``[A; lam I]`` is kept implicit. Optional
per-antenna ``weights`` turn the penalty into ``lam * sum_j weights_j ||w_j||``
(the identity block becomes diagonal).
"""

from dataclasses import dataclass, replace

import numpy as np

from mpsca.problem import group_norms


@dataclass(frozen=True, eq=False)
class SurrogateModel:
    A: np.ndarray  # M x 2N, rows a_m
    b: np.ndarray  # M
    lam: float
    radius: float
    lipschitz: float
    iteration: int = 0
    weights: np.ndarray = None  # per-antenna multipliers of lam; None means all ones

    @property
    def n_users(self):
        return self.A.shape[0]

    @property
    def dim(self):
        return self.A.shape[1]

    @property
    def coord_lam(self):
        """Penalty weight per real coordinate (length 2N)."""
        if self.weights is None:
            return np.full(self.dim, self.lam)
        return self.lam * np.concatenate([self.weights, self.weights])

    def stacked_transpose_apply(self, y, s):
        """``Abar^T x`` for ``x = (y, s)``."""
        return self.A.T @ y + self.coord_lam * s

    def stacked_apply(self, w_bar):
        """``Abar w + bbar`` split into its simplex and group-ball blocks."""
        return self.A @ w_bar + self.b, self.coord_lam * w_bar


def _lipschitz(A, lam, weights):
    top = lam if weights is None else lam * float(np.max(weights))
    return max(float(np.linalg.norm(A, axis=1).max()), top)


def linearize(inst, w_n, lam, iteration=0, weights=None):
    """Tangent-plane model at ``w_n``: ``a_m = 2 Qtilde_m w_n``, ``b_m = -w_n^T Qtilde_m w_n``."""
    w_n = inst._check(w_n)
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    qw = np.einsum("mij,j->mi", inst.q_bar, w_n)
    A = -2.0 * qw
    b = qw @ w_n
    A.setflags(write=False)
    b.setflags(write=False)
    return SurrogateModel(
        A=A, b=b, lam=float(lam), radius=inst.radius, lipschitz=_lipschitz(A, lam, weights),
        iteration=iteration, weights=weights,
    )


def with_lambda(model, lam, weights=None):
    """Same linearization with a different penalty (and matching ``L``)."""
    return replace(model, lam=float(lam), weights=weights, lipschitz=_lipschitz(model.A, lam, weights))


def gradient_scale(model):
    """``max_m ||a_m||``, the slope of the linearized worst-user term."""
    return float(np.linalg.norm(model.A, axis=1).max())


def weighted_penalty(w_bar, weights=None):
    norms = group_norms(w_bar)
    return float(norms.sum() if weights is None else np.dot(weights, norms))


def surrogate_value(model, w_bar):
    w_bar = np.asarray(w_bar, dtype=float)
    return float(np.max(model.A @ w_bar + model.b) + model.lam * weighted_penalty(w_bar, model.weights))
