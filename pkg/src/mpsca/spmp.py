"""Saddle-point Mirror-Prox for the bilinear SCA subproblem.

The subproblem is ``min_{w in W} max_{(y, s) in simplex x S} y^T (A w + b) + lam s^T w``
with ``W`` the power ball and ``S`` the product of per-antenna unit discs.
The mirror map is ``1/2||w||^2 + sum y log y + 1/2||s||^2``, so the ``w`` and
``s`` blocks take projected gradient steps and ``y`` takes a multiplicative
(entropic) step followed by normalization.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from mpsca import _kernels
from mpsca.problem import FEASIBILITY_RTOL
from mpsca.surrogate import surrogate_value

Y_FLOOR = _kernels.TINY
DEFAULT_GAP_EVERY = 25
DEFAULT_GAP_RTOL = 1e-5


@dataclass
class SaddleState:
    w: np.ndarray
    y: np.ndarray
    s: np.ndarray
    avg_w: np.ndarray = None
    avg_y: np.ndarray = None
    avg_s: np.ndarray = None
    t: int = 0

    def __post_init__(self):
        self.w = np.array(self.w, dtype=float)
        self.y = np.array(self.y, dtype=float)
        self.s = np.array(self.s, dtype=float)
        if self.avg_w is None:
            self.avg_w, self.avg_y, self.avg_s = self.w.copy(), self.y.copy(), self.s.copy()

    @classmethod
    def start(cls, w, n_users):
        """Feasible start at ``w`` with uniform ``y`` and ``s = 0``."""
        w = np.asarray(w, dtype=float)
        return cls(w=w, y=np.full(n_users, 1.0 / n_users), s=np.zeros_like(w))

    def copy(self):
        return SaddleState(
            self.w.copy(), self.y.copy(), self.s.copy(),
            self.avg_w.copy(), self.avg_y.copy(), self.avg_s.copy(), self.t,
        )

    def is_feasible(self, power):
        n = self.s.size // 2
        pair = np.hypot(self.s[:n], self.s[n:])
        return bool(
            np.dot(self.w, self.w) <= power * (1.0 + FEASIBILITY_RTOL)
            and np.all(self.y > 0)
            and abs(self.y.sum() - 1.0) <= 1e-12
            and np.all(pair <= 1.0 + 1e-12)
        )


@dataclass
class SolverReport:
    iterations: int
    gap: float
    gap_trace: list = field(default_factory=list)  # (iteration, ergodic gap)
    wall_time: float = 0.0
    choice: str = "average"
    stopped_early: bool = False
    state: SaddleState = field(default=None, repr=False)

    def to_dict(self, timing=True):
        return {
            "iterations": self.iterations,
            "gap": self.gap,
            "choice": self.choice,
            "stopped_early": self.stopped_early,
            "wall_ms": self.wall_time * 1e3 if timing else 0.0,
        }


def vector_field(model, state):
    """``(grad_w phi, -grad_y phi, -grad_s phi)`` of ``phi = y^T(Aw+b) + lam s^T w``."""
    lam = model.coord_lam
    g_w = model.A.T @ state.y + lam * state.s
    g_y = -(model.A @ state.w + model.b)
    g_s = -lam * state.w
    return g_w, g_y, g_s


def mirror_grad(state):
    """Gradient of the mirror map, returned as ``(w, 1 + log y, s)``."""
    if np.any(state.y <= 0):
        raise ValueError("simplex block must be strictly positive")
    return state.w.copy(), 1.0 + np.log(np.maximum(state.y, Y_FLOOR)), state.s.copy()


def mirror_grad_inverse(dual):
    w, theta, s = dual
    return np.array(w, dtype=float), np.exp(np.asarray(theta, dtype=float) - 1.0), np.array(s, dtype=float)


def project_ball(u, radius):
    u = np.asarray(u, dtype=float)
    nrm = np.linalg.norm(u)
    return u * (radius / nrm) if nrm > radius else u.copy()


def project_group_ball(s):
    s = np.asarray(s, dtype=float)
    if s.size % 2:
        raise ValueError(f"group vector must have even length, got {s.size}")
    n = s.size // 2
    r = np.hypot(s[:n], s[n:])
    scale = np.where(r > 1.0, 1.0 / np.where(r > 1.0, r, 1.0), 1.0)
    return s * np.concatenate([scale, scale])


def project_simplex_kl(y):
    """KL (Bregman) projection of a positive vector onto the probability simplex."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("KL projection requires strictly positive entries")
    total = y.sum()
    if abs(total - 1.0) <= 1e-15:
        return y.copy()
    return y / total


def _prox(model, base, grad, alpha):
    dual = mirror_grad(base)
    shifted = tuple(d - alpha * g for d, g in zip(dual, grad))
    with np.errstate(over="raise"):
        try:
            w, y, s = mirror_grad_inverse(shifted)
        except FloatingPointError as exc:
            raise FloatingPointError(f"mirror step overflowed (alpha={alpha:g}); step size too large") from exc
    if not np.all(np.isfinite(y)):
        raise FloatingPointError(f"mirror step produced non-finite weights (alpha={alpha:g})")
    y = np.maximum(project_simplex_kl(np.maximum(y, Y_FLOOR)), Y_FLOOR)
    return SaddleState(project_ball(w, model.radius), y, project_group_ball(s))


def mp_iteration(model, state, alpha):
    """One extragradient step; returns a new state with updated ergodic averages."""
    if alpha <= 0:
        raise ValueError(f"step size must be positive, got {alpha}")
    r = _prox(model, state, vector_field(model, state), alpha)
    z = _prox(model, state, vector_field(model, r), alpha)
    t = state.t + 1
    if state.t == 0:
        avg = (r.w, r.y, r.s)
    else:
        avg = tuple((state.t * a + v) / t for a, v in ((state.avg_w, r.w), (state.avg_y, r.y), (state.avg_s, r.s)))
    return SaddleState(z.w, z.y, z.s, *(a.copy() for a in avg), t)


def primal_envelope(model, w):
    return surrogate_value(model, w)


def dual_envelope(model, y, s):
    """``min_{||w|| <= R} x^T(Abar w + bbar) = y^T b - R ||A^T y + lam s||``."""
    return float(np.dot(y, model.b) - model.radius * np.linalg.norm(model.stacked_transpose_apply(y, s)))


def duality_gap(model, w_cand, x_cand):
    y, s = x_cand
    return primal_envelope(model, w_cand) - dual_envelope(model, y, s)


def best_response(model, y, s=None):
    """Exact minimizer of ``y^T(Aw + b) + lam sum_j weights_j ||w_j||`` over the power ball.

    Group soft-thresholding of ``-A^T y`` at ``lam`` scaled onto the sphere;
    groups whose slope does not beat the penalty are exactly zero.
    """
    g = -(model.A.T @ y)
    n = g.size // 2
    norms = np.hypot(g[:n], g[n:])
    thr = model.coord_lam[:n]
    keep = np.where(norms > thr, 1.0 - thr / np.where(norms > 0, norms, 1.0), 0.0)
    v = g * np.concatenate([keep, keep])
    nrm = np.linalg.norm(v)
    return v * (model.radius / nrm) if nrm > 0 else v


def step_size(model, safety=1.0):
    return safety / (2.0 * model.lipschitz) if model.lipschitz > 0 else 1.0


def solve_subproblem(model, init, max_iters=1000, gap_tol=None, gap_every=DEFAULT_GAP_EVERY, step_safety=1.0):
    """Run Mirror-Prox from ``init`` and return ``(w, report)``.

    ``gap_tol=None`` uses ``1e-5 * (1 + |surrogate(init.w)|)``; ``math.inf``
    disables the gap test so exactly ``max_iters`` iterations run. The
    returned beamformer is the lowest-surrogate point among the ergodic
    average, the last iterate, and the best responses to the averaged and
    last dual weights (ties resolved in that order).
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    t0 = time.perf_counter()
    if gap_tol is None:
        gap_tol = DEFAULT_GAP_RTOL * (1.0 + abs(surrogate_value(model, init.w)))
    elif math.isinf(gap_tol):
        gap_tol = math.inf
    alpha = step_size(model, step_safety)
    A = np.ascontiguousarray(model.A, dtype=float)
    b = np.ascontiguousarray(model.b, dtype=float)
    w, y, s = init.w.copy(), init.y.copy(), init.s.copy()
    aw, ay, as_, t, status, tr_t, tr_gap = _kernels.run_mirror_prox(
        A, b, np.ascontiguousarray(model.coord_lam), float(model.radius), float(alpha), w, y, s,
        int(max_iters), int(gap_every), float(gap_tol),
    )
    if status < 0:
        raise FloatingPointError(f"mirror step overflowed at iteration {t + 1} (alpha={alpha:g}); step size too large")
    state = SaddleState(w, y, s, aw, ay, as_, t)
    candidates = {
        "average": aw,
        "last": w,
        "response-average": best_response(model, ay),
        "response-last": best_response(model, y),
    }
    values = {name: surrogate_value(model, c) for name, c in candidates.items()}
    choice = min(values, key=values.get)  # first listed wins ties
    w_out = candidates[choice].copy()
    h_best = max(dual_envelope(model, y, s), dual_envelope(model, ay, as_))
    report = SolverReport(
        iterations=int(t),
        gap=float(values[choice] - h_best),
        gap_trace=[(int(i), float(g)) for i, g in zip(tr_t, tr_gap)],
        wall_time=time.perf_counter() - t0,
        choice=choice,
        stopped_early=status == 1,
        state=state,
    )
    return w_out, report
