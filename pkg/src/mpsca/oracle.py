"""Reference solutions: the analytic single-user optimum and exhaustive subset search."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from mpsca.problem import to_db
from mpsca.selection import ScaConfig, best_of_restarts, pad_beamformer

DEFAULT_SUBSET_CAP = 10_000


class SubsetCapExceeded(ValueError):
    def __init__(self, count, cap):
        super().__init__(f"exhaustive search over {count} subsets exceeds the cap of {cap}")
        self.count = count
        self.cap = cap


@dataclass
class OracleResult:
    subset: tuple  # 0-based antenna indices
    min_snr: float
    method: str  # "analytic" or "exhaustive-sca"
    beamformer: np.ndarray = None
    per_subset: dict = field(default_factory=dict)
    sca_iterations: int = 0
    mp_iterations: int = 0

    @property
    def min_snr_db(self):
        return to_db(self.min_snr)


def single_user_optimum(h, noise_var, power, k):
    """Matched filter on the ``k`` strongest antennas (ties to the lower index)."""
    h = np.asarray(h, dtype=complex).ravel()
    if not 1 <= k <= h.size:
        raise ValueError(f"K must lie in [1, {h.size}], got {k}")
    order = np.argsort(-np.abs(h), kind="stable")
    subset = tuple(int(i) for i in np.sort(order[:k]))
    w = np.zeros_like(h)
    hs = h[list(subset)]
    nrm = np.linalg.norm(hs)
    if nrm > 0:
        w[list(subset)] = hs * (np.sqrt(power) / nrm)
    return OracleResult(subset=subset, min_snr=float(power * nrm**2 / noise_var), method="analytic", beamformer=w)


def exhaustive_subsets(inst, k, sca_cfg=ScaConfig(), restarts=5, cap=DEFAULT_SUBSET_CAP, workers=1):
    """Best ``k``-subset by multi-restart plain SCA on every reduced instance.

    Subsets are visited lexicographically; ties go to the earlier subset.
    Restart ``r`` uses the same seed as restart ``r`` of ``solve_joint``'s
    re-solve, so the oracle never does worse than the pipeline on the
    subset the pipeline picks.
    """
    n = inst.n_antennas
    if not 1 <= k <= n:
        raise ValueError(f"K must lie in [1, {n}], got {k}")
    count = math.comb(n, k)
    if count > cap:
        raise SubsetCapExceeded(count, cap)
    subsets = list(combinations(range(n), k))

    def run(subset):
        return best_of_restarts(inst.restrict(subset), sca_cfg, restarts)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, subsets))
    else:
        outcomes = [run(sub) for sub in subsets]

    per_subset = {}
    best_idx, best_snr = 0, -np.inf
    sca_iters = mp_iters = 0
    for i, (subset, (res, snr, runs)) in enumerate(zip(subsets, outcomes)):
        per_subset[subset] = snr
        sca_iters += sum(len(r.reports) for r in runs)
        mp_iters += sum(r.mp_iterations for r in runs)
        if snr > best_snr:
            best_idx, best_snr = i, snr
    subset = subsets[best_idx]
    w = pad_beamformer(outcomes[best_idx][0].w, subset, n)
    return OracleResult(
        subset=subset, min_snr=float(best_snr), method="exhaustive-sca", beamformer=w,
        per_subset=per_subset, sca_iterations=sca_iters, mp_iterations=mp_iters,
    )


def oracle(inst, k, sca_cfg=ScaConfig(), restarts=5, cap=DEFAULT_SUBSET_CAP, workers=1):
    """Analytic answer for single-user instances, exhaustive search otherwise."""
    if inst.n_users == 1:
        return single_user_optimum(inst.channels[0], inst.noise_vars[0], inst.power, k)
    return exhaustive_subsets(inst, k, sca_cfg, restarts, cap, workers)

