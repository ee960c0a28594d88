"""Diffusion NLMS engine with adaptive sampling and censoring.

All state arrays carry a leading batch axis so that many independent
realizations advance together; node-level helpers accept the same arrays with
any number of leading dimensions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import expit

from . import metrics
from .network import AcwState, NetworkTopology, acw_update, validate_weights

__all__ = [
    "Algorithm",
    "RunMode",
    "SamplingController",
    "NodeState",
    "PhiPrimeTable",
    "DiffusionEngine",
    "InvariantViolation",
    "phi",
    "phi_prime",
    "sampling_indicator",
    "adapt",
    "adapt_step",
    "censor_adapt_step",
    "alpha_update",
    "clamp_alpha",
    "combine_step",
    "random_sampling_schedule",
    "diffusion_iteration",
]


class Algorithm(str, Enum):
    DNLMS_FULL = "dnlms_full"
    DNLMS_RANDOM = "dnlms_random"
    AS_DNLMS = "as_dnlms"
    ASC_DNLMS = "asc_dnlms"

    @property
    def adaptive_sampling(self) -> bool:
        return self in (Algorithm.AS_DNLMS, Algorithm.ASC_DNLMS)


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class RunMode:
    algorithm: Algorithm
    filter_mode: str = "classical"
    combiner: str = "acw"
    v_s: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.filter_mode not in ("classical", "graph"):
            raise ValueError(f"unknown filter mode {self.filter_mode!r}")
        if self.combiner not in ("uniform", "metropolis", "acw"):
            raise ValueError(f"unknown combiner {self.combiner!r}")
        if self.algorithm is Algorithm.DNLMS_RANDOM and self.v_s is None:
            raise ValueError("random sampling needs v_s")


def _sgm(x):
    return expit(x)


def phi(alpha, alpha_plus=4.0):
    """Sigmoid rescaled so that -alpha_plus, 0, alpha_plus map to 0, 0.5, 1."""
    lo, hi = _sgm(-alpha_plus), _sgm(alpha_plus)
    return (_sgm(alpha) - lo) / (hi - lo)


def phi_prime(alpha, alpha_plus=4.0):
    s = _sgm(alpha)
    return s * (1.0 - s) / (_sgm(alpha_plus) - _sgm(-alpha_plus))


class PhiPrimeTable:
    """Look-up table for ``phi_prime`` over ``[-alpha_plus, alpha_plus]``.

    Nearest-entry lookup; only used when modelling a table-based
    implementation.
    """

    def __init__(self, alpha_plus=4.0, size=1024):
        self.alpha_plus = alpha_plus
        self.grid = np.linspace(-alpha_plus, alpha_plus, size)
        self.values = phi_prime(self.grid, alpha_plus)
        self._step = self.grid[1] - self.grid[0]

    def __call__(self, alpha):
        idx = np.rint((np.asarray(alpha) + self.alpha_plus) / self._step).astype(int)
        return self.values[np.clip(idx, 0, len(self.values) - 1)]


def sampling_indicator(alpha):
    """1 where ``alpha >= 0`` (the tie goes to sampling), else 0."""
    return (np.asarray(alpha) >= 0).astype(np.int8)


def clamp_alpha(alpha, alpha_plus):
    # upper cap per the algorithm; the lower clamp is our extension
    return np.clip(alpha, -alpha_plus, alpha_plus)


@dataclass
class SamplingController:
    """Per-node sampling variables and the global sampling parameters."""

    beta: float
    mu_s: float
    alpha_plus: float = 4.0
    alpha: np.ndarray | None = None
    sbar: np.ndarray | None = None
    eps_sq: np.ndarray | None = None
    lut: PhiPrimeTable | None = None

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.mu_s <= 0:
            raise ValueError("mu_s must be positive")
        if self.alpha_plus <= 0:
            raise ValueError("alpha_plus must be positive")

    def reset(self, shape):
        self.alpha = np.full(shape, float(self.alpha_plus))
        self.sbar = np.ones(shape, dtype=bool)
        self.eps_sq = np.zeros(shape)

    def phi_prime(self, alpha):
        if self.lut is not None:
            return self.lut(alpha)
        return phi_prime(alpha, self.alpha_plus)


def alpha_update(alpha, C, eps_sq, sbar, beta, mu_s, alpha_plus=4.0, phi_prime_fn=None):
    """Stochastic-gradient step of the sampling variables.

    ``C[..., i, k]`` are the current weights, ``eps_sq[..., i]`` the latest
    squared errors known to the network and ``sbar[..., k]`` the sampling bits.
    The result is clamped to ``[-alpha_plus, alpha_plus]``.
    """
    if phi_prime_fn is None:
        dphi = phi_prime(alpha, alpha_plus)
    else:
        dphi = phi_prime_fn(alpha)
    local = np.einsum("...ik,...i->...k", C, eps_sq)
    return clamp_alpha(alpha + mu_s * dphi * (local - beta * sbar), alpha_plus)


def adapt(w, x, d, sbar, mu_tilde, delta, hold=None):
    """NLMS adaptation for every node at once.

    Returns ``(psi_next, e)`` where ``e = d - x^T w`` is evaluated for all
    nodes. Unsampled nodes get ``psi_next = w`` or, when ``hold`` is given
    (censoring), keep ``hold``.
    """
    e = d - np.einsum("...km,...km->...k", x, w)
    mu = mu_tilde / (delta + np.einsum("...km,...km->...k", x, x))
    updated = w + (mu * e)[..., None] * x
    sb = np.asarray(sbar, dtype=bool)[..., None]
    psi_next = np.where(sb, updated, w if hold is None else hold)
    return psi_next, e


@dataclass
class NodeState:
    """Single-node view used for step-by-step experimentation."""

    w: np.ndarray
    psi: np.ndarray
    mu_tilde: float
    delta: float = 1e-5
    x_norm_sq: float = field(default=0.0)

    def __post_init__(self):
        if not 0 < self.mu_tilde < 2:
            raise ValueError(f"mu_tilde must lie in (0, 2), got {self.mu_tilde}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        self.w = np.asarray(self.w, dtype=float)
        self.psi = np.asarray(self.psi, dtype=float)


def adapt_step(node: NodeState, x, d, sbar):
    """Returns ``(psi_next, e)``; ``e`` is None for an unsampled node."""
    x = np.asarray(x, dtype=float)
    if not sbar:
        return node.w.copy(), None
    node.x_norm_sq = float(x @ x)
    psi_next, e = adapt(node.w[None], x[None], np.atleast_1d(float(d)), np.ones(1, bool),
                        node.mu_tilde, node.delta)
    return psi_next[0], float(e[0])


def censor_adapt_step(node: NodeState, x, d, sbar):
    if not sbar:
        return node.psi.copy()
    return adapt_step(node, x, d, 1)[0]


def combine_step(C, psi):
    """``w_k = sum_j C[j, k] psi_j`` for every node."""
    C = np.asarray(C)
    psi = np.asarray(psi)
    if C.shape[-1] != psi.shape[-2] or C.shape[-2] != psi.shape[-2]:
        raise ValueError(f"weights {C.shape} incompatible with estimates {psi.shape}")
    return np.swapaxes(C, -1, -2) @ psi


def random_sampling_schedule(V, v_s, rng=None, uniforms=None):
    """Exactly ``v_s`` of ``V`` nodes set to 1, chosen uniformly.

    ``uniforms`` (shape ``(..., V)``) may replace ``rng`` for batched draws.
    """
    if not 0 <= v_s <= V:
        raise ValueError(f"v_s must lie in [0, {V}]")
    if uniforms is None:
        uniforms = rng.random(V)
    order = np.argsort(uniforms, axis=-1)
    out = np.zeros(np.shape(uniforms), dtype=bool)
    np.put_along_axis(out, order[..., :v_s], True, axis=-1)
    return out


@dataclass
class IterationRecord:
    """Metrics of one iteration; fields are per-realization arrays."""

    n: int
    nmsd: np.ndarray
    nmse: np.ndarray
    v_s: np.ndarray
    v_t: np.ndarray
    mults: np.ndarray
    sums: np.ndarray
    divs: np.ndarray
    comparisons: np.ndarray


class DiffusionEngine:
    """Full network state for a batch of realizations.

    Parameters
    ----------
    topology : NetworkTopology
    M : int
        Filter order.
    mu_tilde : array_like
        Per-node normalized step sizes in (0, 2).
    mode : RunMode
    sampling : SamplingController, optional
        Required for the adaptive-sampling algorithms.
    static_weights : ndarray, optional
        Combination matrix for the uniform/metropolis rules.
    nu, delta_c : float
        ACW forgetting factor and regularizer.
    delta : float
        NLMS regularizer.
    batch : int
        Number of realizations advanced together.
    check : bool
        Verify the weight, sampling and error-memory invariants every
        iteration (slow; meant for tests).
    """

    def __init__(self, topology: NetworkTopology, M: int, mu_tilde, mode: RunMode,
                 sampling: SamplingController | None = None, static_weights=None,
                 nu=0.2, delta_c=1e-5, delta=1e-5, batch=1, check=False):
        V = topology.V
        self.topology, self.M, self.mode = topology, M, mode
        self.V, self.batch = V, batch
        self.mu_tilde = np.broadcast_to(np.asarray(mu_tilde, dtype=float), (V,)).copy()
        if np.any(self.mu_tilde <= 0) or np.any(self.mu_tilde >= 2):
            raise ValueError("every mu_tilde must lie in (0, 2)")
        if delta <= 0:
            raise ValueError("delta must be positive")
        self.delta = float(delta)
        self.sizes = topology.sizes
        self.check = check
        self.n = 0

        shape = (batch, V)
        self.w = np.zeros(shape + (M,))
        self.psi = np.zeros(shape + (M,))
        self.acw = None
        if mode.combiner == "acw":
            self.acw = AcwState.create(topology, M, nu=nu, delta_c=delta_c, batch=(batch,))
            self.C = np.broadcast_to(topology.mask / topology.sizes, (batch, V, V)).copy()
        else:
            if static_weights is None:
                raise ValueError(f"{mode.combiner} combiner needs static_weights")
            report = validate_weights(static_weights, topology)
            if not report:
                raise ValueError(f"invalid static weights: {report.reason} at {report.index}")
            self.C = np.asarray(static_weights, dtype=float)

        self.sampling = sampling
        if mode.algorithm.adaptive_sampling:
            if sampling is None:
                raise ValueError(f"{mode.algorithm.value} needs a SamplingController")
            sampling.reset(shape)
            self.sbar = sampling.sbar
        else:
            self.sbar = np.ones(shape, dtype=bool)
        if mode.algorithm is Algorithm.DNLMS_RANDOM and not 0 <= mode.v_s <= V:
            raise ValueError(f"v_s must lie in [0, {V}]")

    def snapshot(self, realization=0) -> dict:
        """JSON-ready state of one realization."""
        doc = {
            "n": self.n,
            "w": self.w[realization].tolist(),
            "psi": self.psi[realization].tolist(),
            "sbar": self.sbar[realization].astype(int).tolist(),
        }
        if self.sampling is not None and self.mode.algorithm.adaptive_sampling:
            doc["alpha"] = self.sampling.alpha[realization].tolist()
        return doc

    def snapshot_json(self, realization=0) -> str:
        return json.dumps(self.snapshot(realization), sort_keys=True)

    def reset_realizations(self, which):
        """Zero the state of diverged realizations so they stop overflowing."""
        self.w[which] = 0.0
        self.psi[which] = 0.0
        if self.acw is not None:
            self.acw.sigma_hat_sq[which] = 0.0
            self.acw.psi_bar[which] = 0.0
        if self.mode.algorithm.adaptive_sampling:
            s = self.sampling
            s.alpha[which] = s.alpha_plus
            s.eps_sq[which] = 0.0
            self.sbar[which] = True


def diffusion_iteration(engine: DiffusionEngine, x, d, w_o, schedule_uniforms=None) -> IterationRecord:
    """Advance every realization by one iteration.

    Order: sampling decision, adaptation (or censored hold), weight update,
    sampling-variable update with this iteration's weights, combination.
    ``x`` is ``(R, V, M)``, ``d`` is ``(R, V)``, ``w_o`` is ``(R, M)`` or ``(M,)``.
    """
    mode, alg = engine.mode, engine.mode.algorithm
    s = engine.sampling

    if alg is Algorithm.DNLMS_RANDOM:
        engine.sbar = random_sampling_schedule(engine.V, mode.v_s, uniforms=schedule_uniforms)
    sbar = engine.sbar
    w_prev = engine.w

    hold = engine.psi if alg is Algorithm.ASC_DNLMS else None
    psi_next, e = adapt(w_prev, x, d, sbar, engine.mu_tilde, engine.delta, hold=hold)

    if alg.adaptive_sampling:
        eps_before = s.eps_sq
        s.eps_sq = np.where(sbar, e * e, s.eps_sq)

    if engine.acw is not None:
        engine.C = acw_update(engine.acw, psi_next, w_prev, sbar)

    if alg.adaptive_sampling:
        fn = s.lut if s.lut is not None else None
        s.alpha = alpha_update(s.alpha, engine.C, s.eps_sq, sbar, s.beta, s.mu_s,
                               s.alpha_plus, phi_prime_fn=fn)

    engine.w = combine_step(engine.C, psi_next)
    engine.psi = psi_next

    v_s = sbar.sum(axis=-1)
    v_t = v_s if alg is Algorithm.ASC_DNLMS else np.full_like(v_s, engine.V)
    ops = metrics.accumulate_ops(alg, engine.M, engine.sizes, sbar)
    record = IterationRecord(
        n=engine.n,
        nmsd=metrics.nmsd(w_prev, w_o),
        nmse=metrics.nmse(e),
        v_s=v_s,
        v_t=v_t,
        mults=ops[0], sums=ops[1], divs=ops[2], comparisons=ops[3],
    )

    if alg.adaptive_sampling:
        s.sbar = s.alpha >= 0
        engine.sbar = s.sbar

    if engine.check:
        _check_invariants(engine, sbar, eps_before if alg.adaptive_sampling else None)
    engine.n += 1
    return record


def _check_invariants(engine, sbar_used, eps_before):
    report = validate_weights(engine.C, engine.topology)
    if not report:
        raise InvariantViolation(f"iteration {engine.n}: {report.reason} at {report.index}")
    if eps_before is None:
        return
    s = engine.sampling
    if np.any(np.abs(s.alpha) > s.alpha_plus):
        raise InvariantViolation(f"iteration {engine.n}: alpha left [-alpha+, alpha+]")
    if not np.array_equal(s.sbar, s.alpha >= 0):
        raise InvariantViolation(f"iteration {engine.n}: sampling bit disagrees with alpha sign")
    frozen = ~np.asarray(sbar_used, dtype=bool)
    if not np.array_equal(s.eps_sq[frozen], eps_before[frozen]):
        raise InvariantViolation(f"iteration {engine.n}: squared error changed while unsampled")
