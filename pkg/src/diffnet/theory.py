"""Closed-form predictions for the adaptive sampling mechanism.

Covers the conditions on the sampling penalty, the steady-state duty-cycle
and sampled-node bounds, the minimum sampling step size and the per-node
operation-count model with its cost-advantage conditions.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "TheoryReport",
    "OpCount",
    "beta_conditions",
    "duty_cycle_bounds",
    "expected_sampled_bounds",
    "min_step_size_mu_s",
    "op_cost",
    "cost_advantage_conditions",
    "expected_mult_saving",
    "theory_report",
]


def beta_conditions(sigma_min_sq, sigma_max_sq):
    """Thresholds ``beta`` must exceed: necessary (min) and sufficient (max).

    Both coincide for a homogeneous noise profile.
    """
    if not 0 < sigma_min_sq <= sigma_max_sq:
        raise ValueError("need 0 < sigma_min_sq <= sigma_max_sq")
    return float(sigma_min_sq), float(sigma_max_sq)


def _ratio_at_least_one(num, den):
    # max{num/den, 1}; a nonpositive denominator means the node never leaves
    # its current phase, so the clamp dominates
    if den <= 0:
        return float("inf") if num > 0 else 1.0
    return max(num / den, 1.0)


def duty_cycle_bounds(beta, sigma_min_sq, sigma_max_sq):
    """Bounds on sampled/unsampled run lengths and the sampling probability.

    Returns ``(theta_max, theta_min, theta_bar_max, theta_bar_min,
    p_hat_min, p_hat_max)``.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    theta_max = _ratio_at_least_one(sigma_max_sq, beta - sigma_max_sq)
    theta_min = _ratio_at_least_one(sigma_min_sq, beta - sigma_min_sq)
    theta_bar_max = max((beta - sigma_min_sq) / sigma_min_sq, 1.0)
    theta_bar_min = max((beta - sigma_max_sq) / sigma_max_sq, 1.0)
    p_hat_min = min(sigma_min_sq / beta, 1.0)
    p_hat_max = min(sigma_max_sq / beta, 1.0)
    return theta_max, theta_min, theta_bar_max, theta_bar_min, p_hat_min, p_hat_max


def expected_sampled_bounds(V, beta, sigma_min_sq, sigma_max_sq):
    if beta <= 0:
        raise ValueError("beta must be positive")
    return V * min(1.0, sigma_min_sq / beta), V * min(1.0, sigma_max_sq / beta)


def min_step_size_mu_s(alpha_plus, beta, sigma_max_sq, delta_n):
    """Smallest ``mu_s`` that stops sampling within ``delta_n`` iterations.

    Uses the straight-line approximation of ``phi_prime`` between 0 and
    ``alpha_plus``. Requires ``beta > sigma_max_sq``.
    """
    if beta <= sigma_max_sq:
        raise ValueError("the step-size rule needs beta > sigma_max_sq")
    if delta_n < 1:
        raise ValueError("delta_n must be at least one iteration")
    from .adaptive import phi_prime

    d0 = float(phi_prime(0.0, alpha_plus))
    dp = float(phi_prime(alpha_plus, alpha_plus))
    growth = np.expm1(np.log(d0 / dp) / delta_n)
    return alpha_plus / ((beta - sigma_max_sq) * (d0 - dp)) * growth


@dataclass(frozen=True)
class OpCount:
    mults: int
    sums: int
    divs: int
    comparisons: int

    def __iter__(self):
        return iter((self.mults, self.sums, self.divs, self.comparisons))


def op_cost(algorithm, M, neighborhood_size, sbar=1):
    """Per-node operations of one iteration with ACW weights.

    ``algorithm`` is one of ``dnlms_full``, ``dnlms_random``, ``as_dnlms`` or
    ``asc_dnlms`` (the censoring variant is charged like ``as_dnlms``). Array
    arguments broadcast and return arrays inside the ``OpCount``.
    """
    alg = getattr(algorithm, "value", algorithm)
    n = neighborhood_size
    s = np.asarray(sbar, dtype=np.int64) if np.ndim(sbar) else int(bool(sbar))
    if alg == "dnlms_full":
        return OpCount(M * (3 + n) + 4, M * (3 + n) + 3, n, 0 * n)
    if alg == "dnlms_random":
        skipped = (1 - s) * (2 * M + 2)
        return OpCount(M * (3 + n) + 4 - skipped, M * (3 + n) + 3 - skipped, n - (1 - s), 0 * n)
    if alg in ("as_dnlms", "asc_dnlms"):
        return OpCount(
            s * (2 * M + 2) + M * (1 + n) + n + 4,
            s * (2 * M + 2) + M * (n + 1) + n + 2,
            n + s - 1,
            2 + 0 * n,
        )
    raise ValueError(f"no cost model for {alg!r}")


def expected_mult_saving(M, sizes, p_sampled):
    """Expected network-wide multiplication saving of AS-dNLMS over dNLMS.

    ``2VM - sum_k [2(M+2) E{sbar_k} + |N_k|]`` with ``p_sampled`` giving
    ``E{sbar_k}`` (scalar or per node).
    """
    sizes = np.asarray(sizes)
    V = len(sizes)
    p = np.broadcast_to(np.asarray(p_sampled, dtype=float), (V,))
    return float(2 * V * M - np.sum(2 * (M + 2) * p + sizes))


def cost_advantage_conditions(V, M, sum_neighborhoods, sigma_max_sq):
    """``(beta_threshold, m_min, feasible)`` for a multiplication saving.

    The threshold is ``None`` when ``M <= m_min``.
    """
    m_min = sum_neighborhoods / (2 * V)
    feasible = M > m_min
    threshold = None
    if feasible:
        threshold = 2 * V * (M + 2) * sigma_max_sq / (2 * V * M - sum_neighborhoods)
    return threshold, m_min, feasible


@dataclass
class TheoryReport:
    V: int
    M: int
    beta: float
    sigma_min_sq: float
    sigma_max_sq: float
    beta_necessary: float
    beta_sufficient: float
    theta_max: float
    theta_min: float
    theta_bar_max: float
    theta_bar_min: float
    p_hat_min: float
    p_hat_max: float
    vs_lower: float
    vs_upper: float
    mu_s_min: float | None
    beta_mult_threshold: float | None
    m_min: float
    expected_mult_saving: float

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                for k, v in asdict(self).items()}


def theory_report(V, M, sum_neighborhoods, sigma_min_sq, sigma_max_sq, beta,
                  alpha_plus=4.0, delta_n=3000, sizes=None) -> TheoryReport:
    nec, suf = beta_conditions(sigma_min_sq, sigma_max_sq)
    bounds = duty_cycle_bounds(beta, sigma_min_sq, sigma_max_sq)
    lo, hi = expected_sampled_bounds(V, beta, sigma_min_sq, sigma_max_sq)
    mu_s_min = None
    if beta > sigma_max_sq:
        mu_s_min = float(min_step_size_mu_s(alpha_plus, beta, sigma_max_sq, delta_n))
    threshold, m_min, _ = cost_advantage_conditions(V, M, sum_neighborhoods, sigma_max_sq)
    if sizes is None:
        sizes = np.full(V, sum_neighborhoods / V)
    saving = expected_mult_saving(M, sizes, bounds[5])
    return TheoryReport(
        V=int(V), M=int(M), beta=float(beta),
        sigma_min_sq=float(sigma_min_sq), sigma_max_sq=float(sigma_max_sq),
        beta_necessary=nec, beta_sufficient=suf,
        theta_max=bounds[0], theta_min=bounds[1],
        theta_bar_max=bounds[2], theta_bar_min=bounds[3],
        p_hat_min=bounds[4], p_hat_max=bounds[5],
        vs_lower=float(lo), vs_upper=float(hi),
        mu_s_min=mu_s_min,
        beta_mult_threshold=None if threshold is None else float(threshold),
        m_min=float(m_min),
        expected_mult_saving=saving,
    )
