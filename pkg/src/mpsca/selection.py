"""SCA outer loop, lambda bisection for exact-K selection, and the reduced re-solve."""

import logging
from dataclasses import dataclass, field

import numpy as np

from mpsca.problem import DEFAULT_TAU_REL, ZERO_ATOL, group_norms, group_support, min_snr, to_db, user_snrs
from mpsca.realcplx import embed_vector, extract_complex
from mpsca.spmp import SaddleState, solve_subproblem
from mpsca.surrogate import gradient_scale, linearize, weighted_penalty, with_lambda

log = logging.getLogger(__name__)

# Seed derivation. Probe i, restart 0: seed + i. Probe i, restart r >= 1:
# entropy [seed, i, r]. Reduced re-solve restart r: entropy [seed, RESOLVE_KEY + r],
# shared with the exhaustive oracle so its restarts contain the pipeline's.
RESOLVE_KEY = 1_000_000


def probe_seed(seed, probe, restart=0):
    return seed + probe if restart == 0 else [seed, probe, restart]


def resolve_seed(seed, restart):
    return [seed, RESOLVE_KEY + restart]


LAMBDA_RULES = ("absolute", "slope", "snr")
PROBE_INITS = ("random", "dense")
DENSE_KEY = 2_000_000


@dataclass(frozen=True)
class ScaConfig:
    sca_iters: int = 10
    mp_iters: int = 1000
    gap_tol: float = None
    tau_rel: float = DEFAULT_TAU_REL
    seed: int = 0
    gap_every: int = 25
    step_safety: float = 1.0
    restarts: int = 3
    warm_dual: bool = True

    def __post_init__(self):
        if self.sca_iters < 1 or self.mp_iters < 1:
            raise ValueError("sca_iters and mp_iters must be >= 1")
        if not 0.0 < self.tau_rel < 1.0:
            raise ValueError(f"tau_rel must lie in (0, 1), got {self.tau_rel}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class BisectionConfig:
    """Bisection bracket and depth.

    ``rule`` fixes how the bracketed dimensionless weight maps to a penalty at
    each linearization (see ``lambda_unit``); ``"absolute"`` uses it as is.
    ``init="dense"`` starts every probe from one unpenalized SCA solution;
    ``"random"`` draws a fresh start per probe.
    """

    lambda_lb: float = 0.0
    lambda_ub: float = 2.0
    max_depth: int = 30
    rule: str = "snr"
    reweight_eps: float = 0.2
    warm_start: bool = False
    probe_restarts: int = 1
    init: str = "dense"

    def __post_init__(self):
        if not 0.0 <= self.lambda_lb < self.lambda_ub:
            raise ValueError(f"need 0 <= lambda_lb < lambda_ub, got [{self.lambda_lb}, {self.lambda_ub}]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.rule not in LAMBDA_RULES:
            raise ValueError(f"unknown lambda rule {self.rule!r}")
        if self.reweight_eps is not None and not self.reweight_eps > 0:
            raise ValueError("reweight_eps must be positive")
        if self.probe_restarts < 1:
            raise ValueError("probe_restarts must be >= 1")
        if self.init not in PROBE_INITS:
            raise ValueError(f"unknown probe init {self.init!r}; expected one of {PROBE_INITS}")


@dataclass
class ScaResult:
    w: np.ndarray
    trace: list
    reports: list
    lam: float

    @property
    def mp_iterations(self):
        return sum(r.iterations for r in self.reports)

    @property
    def objective(self):
        return self.trace[-1]


def random_beamformer(n_antennas, power, rng):
    """Complex Gaussian direction scaled onto the power sphere, real-embedded."""
    w = rng.standard_normal(n_antennas) + 1j * rng.standard_normal(n_antennas)
    w_bar = embed_vector(w)
    return w_bar * (np.sqrt(power) / np.linalg.norm(w_bar))


def lambda_unit(model, rule):
    """Multiplier turning a dimensionless weight into a penalty for ``model``.

    ``absolute``: 1. ``slope``: ``max_m ||a_m||``. ``snr``: ``2 min_m b_m / R``,
    i.e. twice the current worst-user SNR per unit of radius.
    """
    if rule == "absolute":
        return 1.0
    if rule == "slope":
        return gradient_scale(model)
    if rule == "snr":
        return 2.0 * max(float(model.b.min()), 0.0) / model.radius
    raise ValueError(f"unknown lambda rule {rule!r}; expected one of {LAMBDA_RULES}")


def group_weights(w_bar, eps):
    """Reweighting ``1 / (eps + ||w_j|| / ||w||)``: slope of ``sum_j log(eps + ||w_j|| / ||w||)`` at fixed power."""
    norms = group_norms(w_bar)
    total = np.linalg.norm(w_bar)
    return 1.0 / (eps + norms / total) if total > 0 else np.full(norms.size, 1.0 / eps)


def penalized_objective(inst, w_bar, lam, weights=None):
    return float(-user_snrs(inst, w_bar).min() + lam * weighted_penalty(w_bar, weights))


def sca_solve(inst, lam, cfg=ScaConfig(), w_init=None, seed=None, rule="absolute", reweight_eps=None):
    """Successive convex approximation of the regularized problem.

    A step is kept only if it strictly lowers the objective; otherwise the
    loop stops at the current point. With the default ``rule="absolute"``
    and no reweighting this is ``max_m w^T Qtilde_m w + lam ||w||_{1,2}``
    and the trace is monotone. Other rules rescale ``lam`` at every
    linearization (see ``lambda_unit``) and keep iterates at full power;
    ``reweight_eps`` adds per-antenna weights from ``group_weights``. In those
    modes each trace entry is evaluated with the penalty of the step that
    produced it.
    """
    if rule not in LAMBDA_RULES:
        raise ValueError(f"unknown lambda rule {rule!r}; expected one of {LAMBDA_RULES}")
    adaptive = rule != "absolute" or reweight_eps is not None
    if w_init is None:
        rng = np.random.default_rng(cfg.seed if seed is None else seed)
        w = random_beamformer(inst.n_antennas, inst.power, rng)
    else:
        w = inst._check(w_init).copy()
        if not inst.is_feasible(w):
            raise ValueError("initial beamformer violates the power constraint")
    trace, reports = [], []
    dual = None
    for n in range(cfg.sca_iters):
        model = linearize(inst, w, 0.0, iteration=n)
        lam_n = lam * lambda_unit(model, rule)
        weights = None if reweight_eps is None else group_weights(w, reweight_eps)
        model = with_lambda(model, lam_n, weights)
        obj = penalized_objective(inst, w, lam_n, weights)
        if not trace:
            trace.append(obj)
        init = SaddleState.start(w, inst.n_users)
        if dual is not None:
            init.y, init.s = dual.y.copy(), dual.s.copy()
        w_new, rep = solve_subproblem(
            model, init, max_iters=cfg.mp_iters, gap_tol=cfg.gap_tol,
            gap_every=cfg.gap_every, step_safety=cfg.step_safety,
        )
        reports.append(rep)
        if group_norms(w_new).max() <= ZERO_ATOL * inst.radius:
            w_new = np.zeros_like(w_new)
        elif adaptive:
            w_new = w_new * (inst.radius / np.linalg.norm(w_new))
        obj_new = penalized_objective(inst, w_new, lam_n, weights)
        if not obj_new < obj:
            break
        w = w_new
        trace.append(obj_new)
        if not w.any():
            break
        if cfg.warm_dual:
            dual = rep.state
    return ScaResult(w=w, trace=trace, reports=reports, lam=float(lam))


def count_active(w_bar, tau_rel=DEFAULT_TAU_REL, scale=1.0):
    return int(group_support(w_bar, tau_rel, scale).size)


def top_groups(w_bar, k):
    """Indices of the ``k`` largest antenna groups, ascending; ties go to the lower index."""
    order = np.argsort(-group_norms(w_bar), kind="stable")
    return np.sort(order[:k])


@dataclass
class Probe:
    lam_hat: float
    active: int
    support: np.ndarray
    result: ScaResult = field(repr=False)


@dataclass
class BisectionOutcome:
    lam_star: float
    support: np.ndarray
    probes: list
    exact: bool

    @property
    def trace(self):
        return [(p.lam_hat, p.active) for p in self.probes]


def probe_merit(inst, w_bar, lam, bis_cfg):
    """Objective of a probe with its penalty rule re-applied at ``w_bar`` itself."""
    lam = lam * lambda_unit(linearize(inst, w_bar, 0.0), bis_cfg.rule)
    weights = None if bis_cfg.reweight_eps is None else group_weights(w_bar, bis_cfg.reweight_eps)
    return penalized_objective(inst, w_bar, lam, weights)


def _probe(inst, lam_hat, sca_cfg, bis_cfg, i, w_prev):
    best, best_merit = None, np.inf
    for r in range(bis_cfg.probe_restarts):
        w_init = w_prev if r == 0 else None
        res = sca_solve(inst, lam_hat, sca_cfg, w_init=w_init, seed=probe_seed(sca_cfg.seed, i, r),
                        rule=bis_cfg.rule, reweight_eps=bis_cfg.reweight_eps)
        merit = probe_merit(inst, res.w, lam_hat, bis_cfg)
        if merit < best_merit:
            best, best_merit = res, merit
    return best


def bisect_lambda(inst, k, sca_cfg=ScaConfig(), bis_cfg=BisectionConfig()):
    """Bisect the regularization weight until exactly ``k`` antenna groups stay active.

    Probe ``i`` starts from the shared dense solution (``init="dense"``) or a
    fresh random point seeded with ``seed + i``; with ``warm_start`` later
    probes start from the previous probe's solution instead. Extra
    ``probe_restarts`` use random starts and the lowest ``probe_merit`` wins.
    If no probe hits ``k``, the probe with the fewest active groups above
    ``k`` is kept and trimmed to its ``k`` strongest groups.
    """
    n = inst.n_antennas
    if not 1 <= k <= n:
        raise ValueError(f"K must lie in [1, {n}], got {k}")
    if k == n:
        return BisectionOutcome(0.0, np.arange(n), [], True)

    lb, ub = bis_cfg.lambda_lb, bis_cfg.lambda_ub
    probes = []
    w_start = None
    if bis_cfg.init == "dense":
        w_start = sca_solve(inst, 0.0, sca_cfg, seed=[sca_cfg.seed, DENSE_KEY]).w
    w_prev = w_start
    for i in range(bis_cfg.max_depth):
        lam_hat = lb + (ub - lb) / 2
        res = _probe(inst, lam_hat, sca_cfg, bis_cfg, i, w_prev)
        support = group_support(res.w, sca_cfg.tau_rel, inst.radius)
        probes.append(Probe(lam_hat, int(support.size), support, res))
        if bis_cfg.warm_start and support.size:
            w_prev = res.w
        if support.size == k:
            return BisectionOutcome(lam_hat, support, probes, True)
        if support.size > k:
            lb = lam_hat
        else:
            ub = lam_hat

    over = [p for p in probes if p.active >= k]
    if over:
        pick = min(over, key=lambda p: (p.active, -p.lam_hat))
    else:
        res = sca_solve(inst, 0.0, sca_cfg, seed=probe_seed(sca_cfg.seed, bis_cfg.max_depth))
        support = group_support(res.w, sca_cfg.tau_rel, inst.radius)
        pick = Probe(0.0, int(support.size), support, res)
        probes.append(pick)
    log.warning(
        "bisection did not reach K=%d in %d probes; trimming the lambda=%.6g solution (%d active)",
        k, bis_cfg.max_depth, pick.lam_hat, pick.active,
    )
    return BisectionOutcome(pick.lam_hat, top_groups(pick.result.w, k), probes, False)


def best_of_restarts(inst, cfg, restarts):
    """Plain (lam = 0) SCA from ``restarts`` seeded random starts; best min-SNR wins, earliest on ties."""
    best, best_snr, runs = None, -np.inf, []
    for r in range(restarts):
        res = sca_solve(inst, 0.0, cfg, seed=resolve_seed(cfg.seed, r))
        runs.append(res)
        snr = min_snr(inst, res.w)
        if snr > best_snr:
            best, best_snr = res, snr
    return best, best_snr, runs


def pad_beamformer(w_reduced, antennas, n_antennas):
    w = np.zeros(n_antennas, dtype=complex)
    w[np.asarray(antennas, dtype=int)] = extract_complex(w_reduced)
    return w


@dataclass
class SelectionResult:
    antennas: np.ndarray  # 0-based, ascending
    beamformer: np.ndarray  # complex N-vector, zero off-support
    min_snr: float
    lam_star: float
    trace: list
    exact: bool
    sca_iterations: int
    mp_iterations: int
    reports: dict = field(default_factory=dict, repr=False)

    @property
    def min_snr_db(self):
        return to_db(self.min_snr)

    @property
    def k(self):
        return int(self.antennas.size)

    def to_dict(self, timing=True):
        return {
            "antennas": [int(a) for a in self.antennas],
            "beamformer": [[float(z.real), float(z.imag)] for z in self.beamformer],
            "min_snr": self.min_snr,
            "min_snr_db": self.min_snr_db,
            "lambda_star": self.lam_star,
            "bisection_trace": [[float(l), int(s)] for l, s in self.trace],
            "exact_k": self.exact,
            "sca_iterations": self.sca_iterations,
            "mp_iterations": self.mp_iterations,
            "reports": {
                stage: [r.to_dict(timing) for r in reps] for stage, reps in self.reports.items()
            },
        }


def solve_joint(inst, k, sca_cfg=ScaConfig(), bis_cfg=BisectionConfig()):
    """Select ``k`` antennas and design the beamformer on them."""
    outcome = bisect_lambda(inst, k, sca_cfg, bis_cfg)
    sub = inst.restrict(outcome.support)
    best, _, runs = best_of_restarts(sub, sca_cfg, sca_cfg.restarts)
    w = pad_beamformer(best.w, outcome.support, inst.n_antennas)
    probe_runs = [p.result for p in outcome.probes]
    all_runs = probe_runs + runs
    return SelectionResult(
        antennas=np.asarray(outcome.support, dtype=int),
        beamformer=w,
        min_snr=min_snr(inst, embed_vector(w)),
        lam_star=float(outcome.lam_star),
        trace=outcome.trace,
        exact=outcome.exact,
        sca_iterations=sum(len(r.reports) for r in all_runs),
        mp_iterations=sum(r.mp_iterations for r in all_runs),
        reports={
            "bisection": [rep for r in probe_runs for rep in r.reports],
            "resolve": [rep for r in runs for rep in r.reports],
        },
    )
