"""Seeded multipath channels for a half-wavelength uniform linear array.

Draw order (part of the instance-file contract): numpy ``PCG64`` streams from
``SeedSequence(seed, spawn_key=(trial, m))`` per user. Each user stream draws
the path count ``L_m`` first, then an ``L_m x 2`` block of standard normals
(real, imaginary gain parts), then ``L_m`` departure angles.
"""

from dataclasses import dataclass

import numpy as np

from mpsca.problem import ProblemInstance


@dataclass(frozen=True)
class ChannelModelConfig:
    n_antennas: int
    n_users: int
    min_paths: int = 4
    max_paths: int = 10
    noise_var: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_antennas < 1 or self.n_users < 1:
            raise ValueError("n_antennas and n_users must be >= 1")
        if not 1 <= self.min_paths <= self.max_paths:
            raise ValueError(f"empty path range [{self.min_paths}, {self.max_paths}]")
        if not self.noise_var > 0:
            raise ValueError("noise_var must be positive")


def steering_vector(theta, n):
    """ULA response ``exp(i pi k sin theta)``, k = 0..n-1 (element spacing half a wavelength)."""
    return np.exp(1j * np.pi * np.arange(n) * np.sin(theta))


def multipath_channel(gains, angles, n):
    """``h`` with ``h^H = sqrt(n / L) sum_l gain_l a(angle_l)^H``."""
    gains = np.atleast_1d(np.asarray(gains, dtype=complex))
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    steer = np.exp(1j * np.pi * np.outer(np.sin(angles), np.arange(n)))
    return np.sqrt(n / gains.size) * (gains.conj() @ steer)


def user_rng(seed, trial, m):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial, m))))


def draw_channel(cfg, m, rng):
    n_paths = int(rng.integers(cfg.min_paths, cfg.max_paths, endpoint=True))
    draws = rng.standard_normal((n_paths, 2))
    gains = (draws[:, 0] + 1j * draws[:, 1]) / np.sqrt(2.0)
    angles = rng.uniform(-np.pi / 2, np.pi / 2, size=n_paths)
    return multipath_channel(gains, angles, cfg.n_antennas)


def draw_channels(cfg, trial=0):
    return np.stack([draw_channel(cfg, m, user_rng(cfg.seed, trial, m)) for m in range(cfg.n_users)])


def draw_instance(cfg, power=10.0, trial=0):
    h = draw_channels(cfg, trial)
    return ProblemInstance(h, np.full(cfg.n_users, cfg.noise_var), power)
