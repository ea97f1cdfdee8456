"""Problem instances and objective/norm evaluation on real-embedded beamformers."""

from dataclasses import dataclass, field

import numpy as np

from mpsca.realcplx import embed_quadratic

FEASIBILITY_RTOL = 1e-9
DEFAULT_TAU_REL = 1e-3
# groups below ZERO_ATOL * scale count as exactly zero (round-off after collapse)
ZERO_ATOL = 1e-8


def _pairs(w_bar):
    w_bar = np.asarray(w_bar, dtype=float).ravel()
    if w_bar.size % 2:
        raise ValueError(f"real embedding must have even length, got {w_bar.size}")
    n = w_bar.size // 2
    return w_bar[:n], w_bar[n:]


def group_norms(w_bar):
    """Per-antenna norms ``||(w(j), w(j+N))||_2``."""
    re, im = _pairs(w_bar)
    return np.hypot(re, im)


def group_l12_norm(w_bar):
    return float(np.sum(group_norms(w_bar)))


def group_support(w_bar, tau_rel=DEFAULT_TAU_REL, scale=1.0):
    """Antenna indices (0-based, ascending) whose group norm exceeds ``tau_rel * max``.

    A vector whose largest group is below ``ZERO_ATOL * scale`` (pass the power
    radius) is treated as zero and has empty support.
    """
    if not 0.0 < tau_rel < 1.0:
        raise ValueError(f"tau_rel must lie in (0, 1), got {tau_rel}")
    norms = group_norms(w_bar)
    top = norms.max() if norms.size else 0.0
    if top <= ZERO_ATOL * scale:
        return np.zeros(0, dtype=int)
    return np.flatnonzero(norms > tau_rel * top)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Single-group multicast instance.

    ``channels`` is ``M x N`` complex (row ``m`` is ``h_m``). SNR of user ``m``
    for beamformer ``w`` is ``|h_m^H w|^2 / sigma_m^2``.
    """

    channels: np.ndarray
    noise_vars: np.ndarray
    power: float
    q_bar: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.channels, dtype=complex))
        sigma2 = np.asarray(self.noise_vars, dtype=float).ravel()
        if sigma2.size == 1 and h.shape[0] > 1:
            sigma2 = np.full(h.shape[0], sigma2[0])
        if sigma2.size != h.shape[0]:
            raise ValueError(f"{h.shape[0]} channels but {sigma2.size} noise variances")
        if not np.all(sigma2 > 0):
            raise ValueError("noise variances must be positive")
        if not self.power > 0:
            raise ValueError(f"power must be positive, got {self.power}")
        h.setflags(write=False)
        sigma2.setflags(write=False)
        q_bar = np.stack([embed_quadratic(np.outer(hm, hm.conj()) / s2) for hm, s2 in zip(h, sigma2)])
        q_bar.setflags(write=False)
        object.__setattr__(self, "channels", h)
        object.__setattr__(self, "noise_vars", sigma2)
        object.__setattr__(self, "power", float(self.power))
        object.__setattr__(self, "q_bar", q_bar)

    @property
    def n_antennas(self):
        return self.channels.shape[1]

    @property
    def n_users(self):
        return self.channels.shape[0]

    @property
    def q_tilde(self):
        return -self.q_bar

    @property
    def radius(self):
        return float(np.sqrt(self.power))

    def is_feasible(self, w_bar):
        return float(np.dot(w_bar, w_bar)) <= self.power * (1.0 + FEASIBILITY_RTOL)

    def restrict(self, antennas):
        """Instance keeping only the given antenna columns."""
        idx = np.asarray(antennas, dtype=int)
        return ProblemInstance(self.channels[:, idx], self.noise_vars, self.power)

    def _check(self, w_bar):
        w_bar = np.asarray(w_bar, dtype=float).ravel()
        if w_bar.size != 2 * self.n_antennas:
            raise ValueError(f"beamformer has length {w_bar.size}, expected {2 * self.n_antennas}")
        return w_bar


def user_snrs(inst, w_bar):
    w_bar = inst._check(w_bar)
    return np.einsum("i,mij,j->m", w_bar, inst.q_bar, w_bar)


def min_snr(inst, w_bar):
    """Worst-user linear SNR ``min_m w^T Qbar_m w``."""
    return max(float(user_snrs(inst, w_bar).min()), 0.0)


def regularized_objective(inst, w_bar, lam):
    """``max_m w^T Qtilde_m w + lam * ||w||_{1,2}``, the quantity SCA decreases."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    snrs = user_snrs(inst, w_bar)
    return float(-snrs.min() + lam * group_l12_norm(w_bar))


def to_db(snr):
    snr = np.asarray(snr, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(snr)
    return float(out) if out.ndim == 0 else out
