"""Optimal systems, input/noise generation and regressor construction."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .network import ShiftOperator

__all__ = [
    "Purpose",
    "substream",
    "OptimalSystem",
    "NoiseProfile",
    "RegressorSource",
    "StreamBlock",
    "generate_optimal_system",
    "abrupt_flip",
    "random_walk_update",
    "classical_regressor",
    "graph_regressor_step",
    "desired_signal",
    "uniform_noise_profile",
]

GRAPH_NOISE_SCALE = 0.009 / 0.4


class Purpose(IntEnum):
    """Tags separating the random substreams of one realization."""

    INPUT = 0
    NOISE = 1
    SCHEDULE = 2
    WALK = 3
    SYSTEM = 4


def substream(seed: int, realization: int, purpose: int) -> np.random.Generator:
    """Independent generator for a (master seed, realization, purpose) triple.

    Built with ``SeedSequence`` spawn keys, so the stream of a realization
    never depends on how many other realizations exist.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(realization), int(purpose)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class OptimalSystem:
    """Parameter vector to be estimated, with its evolution mode.

    ``mode`` is ``"static"``, ``"flip"`` (sign inversion at iteration
    ``flip_at``) or ``"random_walk"`` (per-coordinate variance ``sigma_q_sq``).
    """

    w_o: np.ndarray
    mode: str = "static"
    flip_at: int | None = None
    sigma_q_sq: float = 0.0

    @property
    def M(self) -> int:
        return self.w_o.shape[-1]


def generate_optimal_system(M: int, seed=None, rng: np.random.Generator | None = None,
                            size=()) -> OptimalSystem:
    if M < 1:
        raise ValueError(f"filter order must be at least 1, got {M}")
    if rng is None:
        rng = np.random.default_rng(seed)
    return OptimalSystem(rng.uniform(-1.0, 1.0, size=tuple(size) + (M,)))


def abrupt_flip(system: OptimalSystem) -> OptimalSystem:
    return OptimalSystem(-system.w_o, system.mode, system.flip_at, system.sigma_q_sq)


def random_walk_update(system: OptimalSystem, sigma_q_sq: float, rng=None, q=None) -> OptimalSystem:
    """One step of ``w(n) = w(n-1) + q(n)`` with ``q ~ N(0, sigma_q_sq I)``.

    Pass pre-drawn standard normals as ``q`` to bypass ``rng``.
    """
    if sigma_q_sq < 0:
        raise ValueError("random-walk variance must be nonnegative")
    if sigma_q_sq == 0:
        return system
    if q is None:
        q = rng.standard_normal(system.w_o.shape)
    return OptimalSystem(system.w_o + np.sqrt(sigma_q_sq) * q, system.mode,
                         system.flip_at, system.sigma_q_sq)


@dataclass(frozen=True)
class NoiseProfile:
    sigma_v_sq: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma_v_sq, dtype=float)
        if s.ndim != 1 or np.any(s <= 0):
            raise ValueError("noise variances must be a vector of positive reals")
        object.__setattr__(self, "sigma_v_sq", s)

    @property
    def sigma_min_sq(self) -> float:
        return float(self.sigma_v_sq.min())

    @property
    def sigma_max_sq(self) -> float:
        return float(self.sigma_v_sq.max())

    def scaled(self, factor: float) -> "NoiseProfile":
        return NoiseProfile(self.sigma_v_sq * factor)

    @classmethod
    def load(cls, path) -> "NoiseProfile":
        return cls(np.asarray(json.loads(Path(path).read_text()), dtype=float))


def uniform_noise_profile(V: int, low: float, high: float, seed: int) -> NoiseProfile:
    """Heterogeneous profile spanning exactly ``[low, high]``.

    Values are drawn uniformly and then mapped affinely so that the smallest
    equals ``low`` and the largest equals ``high``.
    """
    rng = np.random.default_rng(seed)
    raw = rng.uniform(size=V)
    if V == 1 or raw.max() == raw.min():
        return NoiseProfile(np.full(V, high))
    span = (raw - raw.min()) / (raw.max() - raw.min())
    return NoiseProfile(low + (high - low) * span)


def classical_regressor(history: np.ndarray, M: int) -> np.ndarray:
    """Tapped-delay regressor ``[u(n), u(n-1), ..., u(n-M+1)]``.

    ``history`` is ordered oldest first and ends at ``u(n)``; missing samples
    before time zero count as zeros.
    """
    h = np.asarray(history, dtype=float)[::-1][:M]
    return np.concatenate([h, np.zeros(M - len(h))])


class RegressorSource:
    """Per-node regressors for a stream of network-wide input vectors.

    Keeps the pipeline ``z_m(n) = A z_{m-1}(n-1)``, ``z_0(n) = u(n)``; in
    classical mode the shift is the identity and the pipeline degenerates to
    a tapped delay line per node. Leading batch dimensions are allowed.
    """

    def __init__(self, V: int, M: int, shift: ShiftOperator | np.ndarray | None = None, batch=()):
        self.V, self.M = V, M
        if isinstance(shift, ShiftOperator):
            shift = shift.A
        self.A = None if shift is None else np.asarray(shift, dtype=float)
        if self.A is not None and self.A.shape != (V, V):
            raise ValueError(f"shift operator shape {self.A.shape} does not match V={V}")
        self.mode = "classical" if self.A is None else "graph"
        self.z = np.zeros(tuple(batch) + (M, V))

    def step(self, u_new: np.ndarray) -> np.ndarray:
        """Push ``u(n)`` and return the regressors, shape ``(..., V, M)``."""
        u_new = np.asarray(u_new, dtype=float)
        if u_new.shape[-1] != self.V:
            raise ValueError(f"input has {u_new.shape[-1]} entries, expected V={self.V}")
        z = np.empty_like(self.z)
        if self.A is None:
            z[..., 1:, :] = self.z[..., :-1, :]
        else:
            z[..., 1:, :] = self.z[..., :-1, :] @ self.A.T
        z[..., 0, :] = u_new
        self.z = z
        return np.swapaxes(z, -1, -2)


def graph_regressor_step(source: RegressorSource, u_new: np.ndarray) -> np.ndarray:
    if source.mode != "graph":
        raise ValueError("graph_regressor_step requires a source with a shift operator")
    return source.step(u_new)


def desired_signal(x: np.ndarray, w_o: np.ndarray, sigma_v_sq, rng=None, v=None) -> np.ndarray:
    """``d_k = x_k^T w_o + v_k`` with Gaussian noise of variance ``sigma_v_sq``.

    ``x`` is ``(..., V, M)``; ``v`` may carry pre-drawn standard normals.
    """
    clean = np.einsum("...km,...m->...k", x, w_o)
    if v is None:
        v = rng.standard_normal(clean.shape)
    return clean + np.sqrt(sigma_v_sq) * v


class StreamBlock:
    """Buffered standard-normal (or uniform) draws for a batch of realizations.

    Each realization owns one generator per purpose; draws are taken in
    fixed-size blocks so the sequence seen by a realization is independent of
    the batch it runs in.
    """

    def __init__(self, seed: int, realizations, purpose: Purpose, width: int,
                 kind: str = "normal", block: int = 512):
        self.gens = [substream(seed, r, purpose) for r in realizations]
        self.width, self.kind, self.block = width, kind, block
        self._buf = None
        self._pos = block

    def _refill(self):
        if self.kind == "normal":
            parts = [g.standard_normal((self.block, self.width)) for g in self.gens]
        else:
            parts = [g.random((self.block, self.width)) for g in self.gens]
        self._buf = np.stack(parts, axis=1)
        self._pos = 0

    def next(self) -> np.ndarray:
        if self._pos >= self.block:
            self._refill()
        out = self._buf[self._pos]
        self._pos += 1
        return out
