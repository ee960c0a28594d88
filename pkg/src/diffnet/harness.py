"""Scenario configuration, seeded Monte-Carlo runs, sweeps and artifacts."""

from __future__ import annotations

import copy
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import theory
from .adaptive import (Algorithm, DiffusionEngine, PhiPrimeTable, RunMode,
                       SamplingController, diffusion_iteration)
from .metrics import SERIES, RunSummary, steady_state_summary, to_db
from .network import (NetworkTopology, build_random_geometric_network,
                      metropolis_weights, normalized_adjacency_shift,
                      uniform_weights)
from .signals import (GRAPH_NOISE_SCALE, NoiseProfile, Purpose, RegressorSource,
                      StreamBlock, desired_signal, generate_optimal_system,
                      substream, uniform_noise_profile)

log = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).parent / "presets"
SWEEP_PARAMS = ("beta_r", "mu_s", "v_s", "trq")


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _get(doc, key, path, default=..., kind=None):
    if key not in doc:
        if default is ...:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    value = doc[key]
    if kind is not None:
        try:
            value = kind(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}.{key}", f"expected {kind.__name__}, got {value!r}") from None
    return value


@dataclass
class TopologySpec:
    V: int = 20
    mean_degree: float = 9.8
    seed: int = 1
    file: str | None = None

    def build(self, base_dir=None) -> NetworkTopology:
        if self.file is not None:
            path = Path(self.file)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return NetworkTopology.load(path)
        return build_random_geometric_network(self.V, self.mean_degree, self.seed)


@dataclass
class NoiseSpec:
    profile: str = "uniform"
    low: float = 0.1
    high: float = 0.4
    value: float = 0.4
    values: list[float] | None = None
    seed: int = 2
    file: str | None = None
    scale: float | None = None

    def build(self, V, filter_mode="classical", base_dir=None) -> NoiseProfile:
        if self.profile == "uniform":
            prof = uniform_noise_profile(V, self.low, self.high, self.seed)
        elif self.profile == "homogeneous":
            prof = NoiseProfile(np.full(V, float(self.value)))
        elif self.profile == "list":
            prof = NoiseProfile(np.asarray(self.values, dtype=float))
        else:
            path = Path(self.file)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            prof = NoiseProfile.load(path)
        if len(prof.sigma_v_sq) != V:
            raise ConfigError("noise", f"profile has {len(prof.sigma_v_sq)} entries, network has {V}")
        scale = self.scale
        if scale is None:
            scale = GRAPH_NOISE_SCALE if filter_mode == "graph" else 1.0
        return prof.scaled(scale) if scale != 1.0 else prof


@dataclass
class TrajectorySpec:
    mode: str = "static"
    at: int | None = None
    trq: float = 0.0


@dataclass
class AlgorithmSpec:
    algorithm: str
    label: str | None = None
    beta: float | None = None
    beta_r: float | None = None
    mu_s: float | None = None
    delta_n: float | None = None
    mu_s_factor: float = 1.0
    v_s: int | None = None

    def __post_init__(self):
        if self.label is None:
            self.label = self.default_label()

    def default_label(self):
        alg = self.algorithm
        if alg == "dnlms_random":
            return f"dnlms_random_vs{self.v_s}"
        if alg in ("as_dnlms", "asc_dnlms"):
            b = f"br{self.beta_r:g}" if self.beta_r is not None else f"b{self.beta:g}"
            return f"{alg}_{b}"
        return alg

    def resolve_beta(self, sigma_max_sq):
        return self.beta if self.beta is not None else self.beta_r * sigma_max_sq

    def resolve_mu_s(self, alpha_plus, beta, sigma_max_sq):
        if self.mu_s is not None:
            return self.mu_s
        if beta <= sigma_max_sq:
            raise ConfigError(f"algorithms[{self.label}].mu_s",
                              "the step-size rule needs beta > sigma_max_sq; give mu_s explicitly")
        mu = theory.min_step_size_mu_s(alpha_plus, beta, sigma_max_sq, self.delta_n)
        return float(mu * self.mu_s_factor)


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    topology: TopologySpec = field(default_factory=TopologySpec)
    M: int = 50
    filter_mode: str = "classical"
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    mu_tilde: list[float] | float = field(default_factory=lambda: [0.1, 1.0])
    mu_tilde_split: bool = True
    delta: float = 1e-5
    combiner: str = "acw"
    nu: float = 0.2
    delta_c: float = 1e-5
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    algorithms: list[AlgorithmSpec] = field(default_factory=list)
    alpha_plus: float = 4.0
    phi_lut: bool = False
    iterations: int = 20000
    realizations: int = 20
    seed: int = 0
    steady_window: int = 600
    smoothing: int = 64
    base_dir: str | None = None

    # -- parsing -----------------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict, base_dir=None) -> "ScenarioConfig":
        p = "config"
        if not isinstance(doc, dict):
            raise ConfigError(p, "expected a JSON object")
        cfg = cls(base_dir=None if base_dir is None else str(base_dir))
        cfg.name = _get(doc, "name", p, cfg.name, str)

        topo = _get(doc, "topology", p, {})
        tp = f"{p}.topology"
        cfg.topology = TopologySpec(
            V=_get(topo, "V", tp, 20, int),
            mean_degree=_get(topo, "mean_degree", tp, 9.8, float),
            seed=_get(topo, "seed", tp, 1, int),
            file=_get(topo, "file", tp, None),
        )
        cfg.M = _get(doc, "M", p, cfg.M, int)
        cfg.filter_mode = _get(doc, "filter_mode", p, cfg.filter_mode, str)

        noise = _get(doc, "noise", p, {})
        np_ = f"{p}.noise"
        cfg.noise = NoiseSpec(
            profile=_get(noise, "profile", np_, "uniform", str),
            low=_get(noise, "low", np_, 0.1, float),
            high=_get(noise, "high", np_, 0.4, float),
            value=_get(noise, "value", np_, 0.4, float),
            values=_get(noise, "values", np_, None),
            seed=_get(noise, "seed", np_, 2, int),
            file=_get(noise, "file", np_, None),
            scale=_get(noise, "scale", np_, None),
        )
        mt = _get(doc, "mu_tilde", p, {"split": [0.1, 1.0]})
        if isinstance(mt, dict):
            cfg.mu_tilde = list(_get(mt, "split", f"{p}.mu_tilde"))
            cfg.mu_tilde_split = True
        else:
            cfg.mu_tilde = mt
            cfg.mu_tilde_split = False
        cfg.delta = _get(doc, "delta", p, cfg.delta, float)

        comb = _get(doc, "combiner", p, {})
        cp = f"{p}.combiner"
        cfg.combiner = _get(comb, "rule", cp, "acw", str)
        cfg.nu = _get(comb, "nu", cp, 0.2, float)
        cfg.delta_c = _get(comb, "delta_c", cp, 1e-5, float)

        traj = _get(doc, "trajectory", p, {})
        trp = f"{p}.trajectory"
        cfg.trajectory = TrajectorySpec(
            mode=_get(traj, "mode", trp, "static", str),
            at=_get(traj, "at", trp, None),
            trq=_get(traj, "trq", trp, 0.0, float),
        )

        algs = _get(doc, "algorithms", p)
        if not isinstance(algs, list) or not algs:
            raise ConfigError(f"{p}.algorithms", "expected a non-empty list")
        cfg.algorithms = []
        for i, a in enumerate(algs):
            ap = f"{p}.algorithms[{i}]"
            mu_s = _get(a, "mu_s", ap, None)
            delta_n = None
            if isinstance(mu_s, dict):
                delta_n = _get(mu_s, "delta_n", f"{ap}.mu_s", kind=float)
                factor = _get(mu_s, "factor", f"{ap}.mu_s", 1.0, float)
                mu_s = None
            else:
                factor = 1.0
                mu_s = None if mu_s is None else _get(a, "mu_s", ap, kind=float)
            cfg.algorithms.append(AlgorithmSpec(
                algorithm=_get(a, "algorithm", ap, kind=str),
                label=_get(a, "label", ap, None),
                beta=_get(a, "beta", ap, None),
                beta_r=_get(a, "beta_r", ap, None),
                mu_s=mu_s,
                delta_n=delta_n,
                mu_s_factor=factor,
                v_s=_get(a, "v_s", ap, None),
            ))
        for key in ("alpha_plus", "steady_window", "smoothing", "iterations", "realizations", "seed"):
            kind = float if key == "alpha_plus" else int
            setattr(cfg, key, _get(doc, key, p, getattr(cfg, key), kind))
        cfg.phi_lut = bool(_get(doc, "phi_lut", p, False))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        if not path.exists() and (PRESET_DIR / f"{path.name}.json").exists():
            path = PRESET_DIR / f"{path.name}.json"
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON ({exc})") from None
        return cls.from_dict(doc, base_dir=path.parent)

    def to_dict(self) -> dict:
        doc = {
            "name": self.name,
            "topology": {k: v for k, v in asdict(self.topology).items() if v is not None},
            "M": self.M,
            "filter_mode": self.filter_mode,
            "noise": {k: v for k, v in asdict(self.noise).items() if v is not None},
            "mu_tilde": {"split": self.mu_tilde} if self.mu_tilde_split else self.mu_tilde,
            "delta": self.delta,
            "combiner": {"rule": self.combiner, "nu": self.nu, "delta_c": self.delta_c},
            "trajectory": {k: v for k, v in asdict(self.trajectory).items() if v is not None},
            "algorithms": [],
            "alpha_plus": self.alpha_plus,
            "phi_lut": self.phi_lut,
            "iterations": self.iterations,
            "realizations": self.realizations,
            "seed": self.seed,
            "steady_window": self.steady_window,
            "smoothing": self.smoothing,
        }
        for a in self.algorithms:
            ad = {"algorithm": a.algorithm, "label": a.label}
            for key in ("beta", "beta_r", "v_s"):
                if getattr(a, key) is not None:
                    ad[key] = getattr(a, key)
            if a.mu_s is not None:
                ad["mu_s"] = a.mu_s
            elif a.delta_n is not None:
                ad["mu_s"] = {"delta_n": a.delta_n, "factor": a.mu_s_factor}
            doc["algorithms"].append(ad)
        return doc

    def validate(self):
        p = "config"
        if self.M < 1:
            raise ConfigError(f"{p}.M", "filter order must be at least 1")
        if self.filter_mode not in ("classical", "graph"):
            raise ConfigError(f"{p}.filter_mode", f"unknown mode {self.filter_mode!r}")
        if self.combiner not in ("uniform", "metropolis", "acw"):
            raise ConfigError(f"{p}.combiner.rule", f"unknown rule {self.combiner!r}")
        if self.nu <= 0 or self.delta_c <= 0 or self.delta <= 0:
            raise ConfigError(p, "nu, delta_c and delta must be positive")
        if self.noise.profile not in ("uniform", "homogeneous", "list", "file"):
            raise ConfigError(f"{p}.noise.profile", f"unknown profile {self.noise.profile!r}")
        mt = np.atleast_1d(np.asarray(self.mu_tilde, dtype=float))
        if np.any(mt <= 0) or np.any(mt >= 2):
            raise ConfigError(f"{p}.mu_tilde", "every mu_tilde must lie in (0, 2)")
        if self.trajectory.mode not in ("static", "flip", "random_walk"):
            raise ConfigError(f"{p}.trajectory.mode", f"unknown mode {self.trajectory.mode!r}")
        if self.trajectory.trq < 0:
            raise ConfigError(f"{p}.trajectory.trq", "Tr[Q] must be nonnegative")
        if self.iterations < 1 or self.realizations < 1:
            raise ConfigError(p, "iterations and realizations must be positive")
        if self.alpha_plus <= 0:
            raise ConfigError(f"{p}.alpha_plus", "must be positive")
        V = self.topology.V
        labels = set()
        for i, a in enumerate(self.algorithms):
            ap = f"{p}.algorithms[{i}]"
            try:
                alg = Algorithm(a.algorithm)
            except ValueError:
                raise ConfigError(f"{ap}.algorithm", f"unknown algorithm {a.algorithm!r}") from None
            if a.label in labels:
                raise ConfigError(f"{ap}.label", f"duplicate label {a.label!r}")
            labels.add(a.label)
            if alg is Algorithm.DNLMS_RANDOM:
                if a.v_s is None or not 0 <= a.v_s <= V:
                    raise ConfigError(f"{ap}.v_s", f"must lie in [0, {V}]")
            if alg.adaptive_sampling:
                if (a.beta is None) == (a.beta_r is None):
                    raise ConfigError(f"{ap}", "give exactly one of beta or beta_r")
                if (a.beta if a.beta is not None else a.beta_r) <= 0:
                    raise ConfigError(f"{ap}.beta", "must be positive")
                if a.mu_s is None and a.delta_n is None:
                    raise ConfigError(f"{ap}.mu_s", "missing (number or {\"delta_n\": ...})")
                if a.mu_s is not None and a.mu_s <= 0:
                    raise ConfigError(f"{ap}.mu_s", "must be positive")

    # -- derived objects ---------------------------------------------------

    def build_topology(self) -> NetworkTopology:
        return self.topology.build(self.base_dir)

    def build_noise(self, V) -> NoiseProfile:
        return self.noise.build(V, self.filter_mode, self.base_dir)

    def mu_tilde_vector(self, V) -> np.ndarray:
        if self.mu_tilde_split:
            vals = list(self.mu_tilde)
            return np.repeat(vals, -(-V // len(vals)))[:V].astype(float)
        return np.broadcast_to(np.asarray(self.mu_tilde, dtype=float), (V,)).copy()

    def flip_at(self):
        if self.trajectory.mode != "flip":
            return None
        return self.trajectory.at if self.trajectory.at is not None else self.iterations // 2


# -- simulation ------------------------------------------------------------

def _static_weights(rule, topology):
    if rule == "uniform":
        return uniform_weights(topology)
    if rule == "metropolis":
        return metropolis_weights(topology)
    return None


def simulate(config: ScenarioConfig, spec: AlgorithmSpec, realizations=None,
             topology=None, noise=None, check=False) -> RunSummary:
    """Run one algorithm over a batch of seeded realizations."""
    topology = topology or config.build_topology()
    V, M, N = topology.V, config.M, config.iterations
    noise = noise or config.build_noise(V)
    if realizations is None:
        realizations = range(config.realizations)
    reals = list(realizations)
    R = len(reals)

    alg = Algorithm(spec.algorithm)
    mode = RunMode(alg, config.filter_mode, config.combiner, spec.v_s)
    sampling = None
    meta = {"algorithm": alg.value}
    if alg.adaptive_sampling:
        beta = spec.resolve_beta(noise.sigma_max_sq)
        mu_s = spec.resolve_mu_s(config.alpha_plus, beta, noise.sigma_max_sq)
        lut = PhiPrimeTable(config.alpha_plus) if config.phi_lut else None
        sampling = SamplingController(beta, mu_s, config.alpha_plus, lut=lut)
        meta.update(beta=beta, mu_s=mu_s)
    engine = DiffusionEngine(topology, M, config.mu_tilde_vector(V), mode, sampling,
                             static_weights=_static_weights(config.combiner, topology),
                             nu=config.nu, delta_c=config.delta_c, delta=config.delta,
                             batch=R, check=check)

    shift = normalized_adjacency_shift(topology) if config.filter_mode == "graph" else None
    source = RegressorSource(V, M, shift, batch=(R,))
    inputs = StreamBlock(config.seed, reals, Purpose.INPUT, V)
    noises = StreamBlock(config.seed, reals, Purpose.NOISE, V)
    schedule = None
    if alg is Algorithm.DNLMS_RANDOM:
        schedule = StreamBlock(config.seed, reals, Purpose.SCHEDULE, V, kind="uniform")
    walk = None
    sigma_q_sq = 0.0
    if config.trajectory.mode == "random_walk" and config.trajectory.trq > 0:
        sigma_q_sq = config.trajectory.trq / M
        walk = StreamBlock(config.seed, reals, Purpose.WALK, M)
    w_o = np.stack([generate_optimal_system(M, rng=substream(config.seed, r, Purpose.SYSTEM)).w_o
                    for r in reals])
    flip_at = config.flip_at()

    raw = {k: np.empty((N, R)) for k in SERIES}
    alive = np.ones(R, dtype=bool)
    diverged = []
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(N):
            if n == flip_at:
                w_o = -w_o
            if walk is not None:
                w_o = w_o + np.sqrt(sigma_q_sq) * walk.next()
            x = source.step(inputs.next())
            d = desired_signal(x, w_o, noise.sigma_v_sq, v=noises.next())
            rec = diffusion_iteration(engine, x, d, w_o,
                                      None if schedule is None else schedule.next())
            for k in SERIES:
                raw[k][n] = getattr(rec, k)
            bad = alive & ~(np.isfinite(rec.nmsd) & np.isfinite(rec.nmse))
            if bad.any():
                for i in np.flatnonzero(bad):
                    diverged.append({"realization": reals[i], "iteration": n,
                                     "reason": "non-finite NMSD/NMSE"})
                    log.warning("%s: realization %d diverged at iteration %d",
                                spec.label, reals[i], n)
                alive &= ~bad
                engine.reset_realizations(bad)

    if alive.any():
        series = {k: v[:, alive].mean(axis=1) for k, v in raw.items()}
    else:
        series = {k: np.full(N, np.nan) for k in raw}
    summary = RunSummary(spec.label, series, int(alive.sum()), diverged, meta=meta)
    if N >= config.steady_window and alive.any():
        summary.steady_state = steady_state_summary({k: v[:, alive].T for k, v in raw.items()},
                                                    config.steady_window)
    return summary


def _simulate_job(args):
    config, spec = args
    return simulate(config, spec)


def _max_workers(n_jobs):
    env = os.environ.get("DIFFNET_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_jobs))


def run_scenario(config: ScenarioConfig, out_dir=None) -> dict[str, RunSummary]:
    """Simulate every algorithm of ``config``; write artifacts when ``out_dir`` is set."""
    jobs = [(config, spec) for spec in config.algorithms]
    workers = _max_workers(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_simulate_job, jobs))
    else:
        results = [_simulate_job(j) for j in jobs]
    summaries = {s.label: s for s in results}
    if out_dir is not None:
        write_outputs(config, summaries, out_dir)
    return summaries


def theory_for(config: ScenarioConfig, topology=None, noise=None) -> dict:
    """Theory reports for every sampling algorithm plus network-level quantities."""
    topology = topology or config.build_topology()
    noise = noise or config.build_noise(topology.V)
    sizes = topology.sizes
    threshold, m_min, feasible = theory.cost_advantage_conditions(
        topology.V, config.M, int(sizes.sum()), noise.sigma_max_sq)
    doc = {
        "network": {
            "V": topology.V,
            "M": config.M,
            "sum_neighborhoods": int(sizes.sum()),
            "sigma_min_sq": noise.sigma_min_sq,
            "sigma_max_sq": noise.sigma_max_sq,
            "m_min": m_min,
            "cost_advantage_feasible": bool(feasible),
            "beta_mult_threshold": threshold,
            "beta_mult_factor": None if threshold is None else threshold / noise.sigma_max_sq,
        },
        "algorithms": {},
    }
    for spec in config.algorithms:
        if not Algorithm(spec.algorithm).adaptive_sampling:
            continue
        beta = spec.resolve_beta(noise.sigma_max_sq)
        delta_n = spec.delta_n if spec.delta_n is not None else 3000
        rep = theory.theory_report(topology.V, config.M, int(sizes.sum()), noise.sigma_min_sq,
                                   noise.sigma_max_sq, beta, config.alpha_plus, delta_n, sizes)
        entry = rep.to_dict()
        entry["mu_s_used"] = spec.resolve_mu_s(config.alpha_plus, beta, noise.sigma_max_sq)
        doc["algorithms"][spec.label] = entry
    return doc


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def summary_document(config: ScenarioConfig, summaries: dict[str, RunSummary]) -> dict:
    th = theory_for(config)
    doc = {"scenario": config.name, "config": config.to_dict(), "theory": th, "algorithms": {}}
    for label, s in summaries.items():
        ss = dict(s.steady_state)
        entry = {
            "csv": f"{label}.csv",
            "realizations_used": s.realizations,
            "diverged": s.diverged,
            "meta": {k: v for k, v in s.meta.items() if v is not None},
            "steady_state": ss,
        }
        if ss:
            entry["steady_state_db"] = {"nmsd_db": float(to_db(ss["nmsd"])),
                                        "nmse_db": float(to_db(ss["nmse"]))}
        if label in th["algorithms"] and ss:
            t = th["algorithms"][label]
            entry["theory_diff"] = {
                "v_s_ss": ss["v_s"],
                "vs_lower": t["vs_lower"],
                "vs_upper": t["vs_upper"],
                "within_bounds": t["vs_lower"] <= ss["v_s"] <= t["vs_upper"],
            }
        doc["algorithms"][label] = entry
    return _clean(doc)


def write_outputs(config: ScenarioConfig, summaries: dict[str, RunSummary], out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for label, s in summaries.items():
        (out / f"{label}.csv").write_text(s.to_csv())
    doc = summary_document(config, summaries)
    (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return out


# -- sweeps ----------------------------------------------------------------

def with_parameter(config: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    """Copy of ``config`` with a sweep parameter applied to every relevant algorithm."""
    if parameter not in SWEEP_PARAMS:
        raise ConfigError("sweep.param", f"must be one of {', '.join(SWEEP_PARAMS)}")
    cfg = copy.deepcopy(config)
    if parameter == "trq":
        cfg.trajectory = replace(cfg.trajectory, mode="random_walk", trq=float(value))
        return cfg
    algs = []
    for a in cfg.algorithms:
        alg = Algorithm(a.algorithm)
        relabel = a.label == a.default_label()
        if parameter == "beta_r" and alg.adaptive_sampling:
            a = replace(a, beta=None, beta_r=float(value), label=None if relabel else a.label)
        elif parameter == "mu_s" and alg.adaptive_sampling:
            a = replace(a, mu_s=float(value), delta_n=None)
        elif parameter == "v_s" and alg is Algorithm.DNLMS_RANDOM:
            a = replace(a, v_s=int(value), label=None if relabel else a.label)
        algs.append(a)
    cfg.algorithms = algs
    cfg.validate()
    return cfg


def sweep(config: ScenarioConfig, parameter: str, values, out_dir=None) -> list[dict]:
    """One scenario run per value; returns the collated steady-state rows."""
    values = list(values)
    if not values:
        raise ConfigError("sweep.values", "empty value list")
    rows = []
    for value in values:
        cfg = with_parameter(config, parameter, value)
        sub = None if out_dir is None else Path(out_dir) / f"{parameter}={value:g}"
        summaries = run_scenario(cfg, sub)
        th = theory_for(cfg)["algorithms"]
        for label, s in summaries.items():
            ss = s.steady_state
            row = {
                "value": float(value),
                "algorithm": label,
                "nmsd_ss": float(to_db(ss["nmsd"])) if ss else None,
                "v_s_ss": ss.get("v_s"),
                "v_t_ss": ss.get("v_t"),
                "vs_lower": th.get(label, {}).get("vs_lower"),
                "vs_upper": th.get(label, {}).get("vs_upper"),
            }
            rows.append(_clean(row))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = ("value", "algorithm", "nmsd_ss", "v_s_ss", "v_t_ss", "vs_lower", "vs_upper")
        lines = [",".join(cols)]
        for r in rows:
            lines.append(",".join("" if r[c] is None else (r[c] if isinstance(r[c], str) else repr(r[c]))
                                  for c in cols))
        (out / f"sweep_{parameter}.csv").write_text("\n".join(lines) + "\n")
        (out / f"sweep_{parameter}.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    return rows
