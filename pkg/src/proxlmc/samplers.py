"""Particle samplers: the explicit-Euler Langevin step and the prox-split step.

The split step alternates a deterministic transport sub-step (each particle
moves to its prox point) with an exact diffusion sub-step (additive Gaussian
noise of variance 2h).  Ensembles are value-semantic: every step returns a new
`Ensemble` and never mutates its input.  Noise is counter-based, keyed by
(seed, step, particle), so trajectories are reproducible bit-for-bit.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

import numpy as np

from .potentials import Potential
from .rng import NoiseSource

__all__ = [
    "Algorithm",
    "Ensemble",
    "SchemeConfig",
    "GaussianInit",
    "step_transport",
    "step_diffusion",
    "step_ula",
    "run",
    "trajectory_to_csv",
    "write_snapshot",
    "read_snapshot",
]


class Algorithm(str, enum.Enum):
    ULA = "ula"
    PROX_ULA = "prox_ula"


@dataclass(frozen=True)
class Ensemble:
    """N x d particle matrix with its step index and half-step flag.

    `half_step` is True when the ensemble holds the post-transport,
    pre-diffusion state of the split scheme.
    """

    particles: np.ndarray
    step_index: int = 0
    half_step: bool = False

    def __post_init__(self):
        particles = np.asarray(self.particles, dtype=np.float64)
        if particles.ndim != 2 or particles.shape[0] < 1:
            raise ValueError("particles must be a nonempty (N, d) matrix")
        if not np.all(np.isfinite(particles)):
            raise ValueError("particles must be finite")
        if self.step_index < 0:
            raise ValueError("step_index must be nonnegative")
        object.__setattr__(self, "particles", particles)

    @property
    def n_particles(self) -> int:
        return self.particles.shape[0]

    @property
    def dim(self) -> int:
        return self.particles.shape[1]


@dataclass(frozen=True)
class SchemeConfig:
    h: float
    n_steps: int
    n_particles: int
    algorithm: Algorithm = Algorithm.PROX_ULA
    seed: int = 0
    record_half_steps: bool = False

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")
        if self.n_particles < 1:
            raise ValueError("n_particles must be positive")
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))


@dataclass(frozen=True)
class GaussianInit:
    """Initial law: componentwise mean + std * N(0, 1) (isotropic or product)."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        std = np.asarray(self.std, dtype=np.float64)
        if std.ndim == 0:
            std = np.full(mean.shape, float(std))
        if std.shape != mean.shape:
            raise ValueError("std must be a scalar or match the mean shape")
        if np.any(std < 0):
            raise ValueError("std must be nonnegative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def dim(self) -> int:
        return self.mean.size

    def sample(self, n_particles: int, seed: int) -> Ensemble:
        # step key 0 is reserved for the initial draw; dynamics use keys >= 1
        eta = NoiseSource(seed).standard_normals(0, n_particles, self.dim)
        return Ensemble(self.mean + self.std * eta, step_index=0, half_step=False)


def step_transport(e: Ensemble, p: Potential, h: float) -> Ensemble:
    """Move every particle to its prox point; marks the ensemble half-stepped."""
    if e.half_step:
        raise ValueError("transport expects a full-step ensemble")
    return Ensemble(p.prox(h, e.particles), step_index=e.step_index, half_step=True)


def step_diffusion(e: Ensemble, h: float, noise: NoiseSource,
                   particle_ids: np.ndarray | None = None) -> Ensemble:
    """Add sqrt(2h) * N(0, I) noise; completes the step begun by the transport."""
    if not e.half_step:
        raise ValueError("diffusion expects a half-step ensemble")
    if h <= 0:
        raise ValueError("h must be positive")
    eta = noise.standard_normals(e.step_index + 1, e.n_particles, e.dim, particle_ids)
    return Ensemble(e.particles + np.sqrt(2.0 * h) * eta,
                    step_index=e.step_index + 1, half_step=False)


def step_ula(e: Ensemble, p: Potential, h: float, noise: NoiseSource,
             particle_ids: np.ndarray | None = None) -> Ensemble:
    """One explicit-Euler Langevin step x - h grad V(x) + sqrt(2h) eta.

    Only defined for differentiable potentials.
    """
    if e.half_step:
        raise ValueError("ULA expects a full-step ensemble")
    if not p.is_smooth:
        raise ValueError("ULA requires a differentiable potential; "
                         "use the prox-split algorithm for nonsmooth targets")
    if h <= 0:
        raise ValueError("h must be positive")
    drift = e.particles - h * p.gradient(e.particles)
    eta = noise.standard_normals(e.step_index + 1, e.n_particles, e.dim, particle_ids)
    return Ensemble(drift + np.sqrt(2.0 * h) * eta,
                    step_index=e.step_index + 1, half_step=False)


def run(config: SchemeConfig, p: Potential, init: GaussianInit | Ensemble,
        noise: NoiseSource | None = None) -> list[Ensemble]:
    """Run the configured sampler; returns the recorded trajectory.

    The trajectory starts with the initial ensemble and contains one entry per
    full step, with the intermediate half-step ensembles interleaved when
    `config.record_half_steps` is set (prox-split only).
    """
    if isinstance(init, Ensemble):
        current = init
    else:
        if init.dim != p.dim:
            raise ValueError("initializer dimension must match the potential")
        current = init.sample(config.n_particles, config.seed)
    if current.dim != p.dim:
        raise ValueError("ensemble dimension must match the potential")
    if noise is None:
        noise = NoiseSource(config.seed)

    trajectory = [current]
    for _ in range(config.n_steps):
        if config.algorithm is Algorithm.PROX_ULA:
            half = step_transport(current, p, config.h)
            if config.record_half_steps:
                trajectory.append(half)
            current = step_diffusion(half, config.h, noise)
        else:
            current = step_ula(current, p, config.h, noise)
        trajectory.append(current)
    return trajectory


def trajectory_to_csv(trajectory: list[Ensemble], path) -> None:
    """Write `step, half, particle, x0..x{d-1}` rows with full f64 precision."""
    if not trajectory:
        raise ValueError("trajectory is empty")
    d = trajectory[0].dim
    header = "step,half,particle," + ",".join(f"x{i}" for i in range(d))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for ens in trajectory:
            half = 1 if ens.half_step else 0
            for i, row in enumerate(ens.particles):
                coords = ",".join(f"{v:.17g}" for v in row)
                fh.write(f"{ens.step_index},{half},{i},{coords}\n")


def write_snapshot(path, particles: np.ndarray) -> None:
    """Binary snapshot: u32 N, u32 d header then row-major little-endian f64."""
    particles = np.asarray(particles, dtype=np.float64)
    if particles.ndim != 2:
        raise ValueError("snapshot expects an (N, d) matrix")
    n, d = particles.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", n, d))
        fh.write(particles.astype("<f8").tobytes())


def read_snapshot(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise ValueError("snapshot file truncated")
        n, d = struct.unpack("<II", header)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n * d:
        raise ValueError("snapshot payload does not match header")
    return data.reshape(n, d).astype(np.float64)
