import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd

from .constants import M0_GRID_SIZE
from .data_types import ModelKind, Status
from .ensembles import (
    EnsembleConfig, McmcParams, MetropolisSampler, conditioned_gue_log_density, make_rng, sample_wishart_block,
    scaled_pair
)
from .entropy import gamma_entropy, rate_i, rate_isym, rate_jplus
from .exceptions import DomainError
from .laws import LawSpec, make_law, two_point
from .measures import Atomic, GridDensity, Measure, d_bl, dilate, moment
from .utils.tqdm_joblib import parallel_map


RADEMACHER = Atomic([-1.0, 1.0], [0.5, 0.5])


@dataclass(frozen=True)
class WeightModel:
    """Unnormalized joint density of a random matrix model.

    ``WISHART_BLOCK`` is the law of the ``p`` singular values ``s_i`` of ``G / sqrt(2n)``:
    ``Π_{i<j} |s_i² - s_j²|² Π s_i^(2(n-p)+1) e^(-n Σ s_i²)``. ``CONDITIONED_GUE`` is the law of the ``M`` non-zero
    eigenvalues: ``Π |λ_i|^(2(N-M)) Π_{i<j} |λ_i - λ_j|² e^(-(N/2) Σ λ_i²)``.
    """
    model: ModelKind
    size: int
    dimension: int

    def __post_init__(self) -> None:
        if not 1 <= self.size <= self.dimension:
            raise DomainError(f"{self.model.value} needs 1 <= size <= dimension, got {self.size}, {self.dimension}")

    @staticmethod
    def wishart_singular(p: int, n: int) -> 'WeightModel':
        return WeightModel(ModelKind.WISHART_BLOCK, p, n)

    @staticmethod
    def conditioned_gue(M: int, N: int) -> 'WeightModel':
        return WeightModel(ModelKind.CONDITIONED_GUE, M, N)

    @staticmethod
    def from_config(cfg: EnsembleConfig) -> 'WeightModel':
        return WeightModel(cfg.model, cfg.size, cfg.dimension)

    @property
    def speed(self) -> float:
        return float(self.size * self.dimension)

    def rate(self, m: Measure) -> float:
        """Normalized rate of the model's large deviation principle at speed :attr:`speed`."""
        if self.model == ModelKind.WISHART_BLOCK:
            return rate_jplus(m).normalized
        return rate_i(m).normalized


def _config(wm: WeightModel, config: Iterable[float]) -> np.ndarray:
    x = np.asarray(list(config), dtype=np.float64)
    if x.size != wm.size:
        raise DomainError(f"Expected a configuration of {wm.size} coordinates, got {x.size}")
    return x


def log_weight(wm: WeightModel, config: Iterable[float]) -> float:
    """Log of the unnormalized density; ``-inf`` on collisions and zero coordinates."""
    x = _config(wm, config)
    if wm.model == ModelKind.CONDITIONED_GUE:
        return conditioned_gue_log_density(x, wm.dimension)
    if np.any(x < 0):
        raise DomainError(f"Singular values must be non-negative, got {x.min()}")
    if np.any(x == 0):
        return -np.inf
    p, n = wm.size, wm.dimension
    sq = x * x
    gaps = np.abs(sq[:, None] - sq[None, :])[np.triu_indices(p, k=1)]
    if np.any(gaps == 0):
        return -np.inf
    return float(2 * np.log(gaps).sum() + (2 * (n - p) + 1) * np.log(x).sum() - n * sq.sum())


def log_weight_decomposed(wm: WeightModel, config: Iterable[float]) -> float:
    """Singular value log-weight rewritten through the empirical measure ``μ = (1/p) Σ δ_{s_i}``.

    ``-p² ∬_{x≠y} f dμ dμ - (n - p) p ∫ g dμ - Σ g(s_i) - Σ log s_i`` with ``f(x, y) = (x² + y²)/2 - log|x² - y²|``
    and ``g(x) = x² - log x²``; equal to :func:`log_weight` up to rounding.
    """
    if wm.model != ModelKind.WISHART_BLOCK:
        raise DomainError("The decomposition is defined for the Wishart singular value model")
    s = _config(wm, config)
    p, n = wm.size, wm.dimension
    sq = s * s
    off = ~np.eye(p, dtype=bool)
    with np.errstate(divide="ignore"):
        f = 0.5 * (sq[:, None] + sq[None, :]) - np.log(np.abs(sq[:, None] - sq[None, :]))
        g = sq - np.log(sq)
    interaction = f[off].sum() / p ** 2
    confinement = g.mean()
    return float(-p ** 2 * interaction - (n - p) * p * confinement - g.sum() - np.log(s).sum())


def quantile_configuration(m: Measure, count: int) -> np.ndarray:
    """Points ``x_i`` with ``F(x_i) = (i - 1/2) / count``, the configuration closest to ``m`` among ``count`` points."""
    if not isinstance(m, GridDensity):
        raise DomainError(f"Quantile configurations need an atomless density, got a {m.kind.value} measure")
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (m.values[:-1] + m.values[1:]) * m.dx)]) / m.mass
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    levels = (np.arange(1, count + 1) - 0.5) / count
    return np.interp(levels, cdf[keep], m.x[keep])


class WeightRatio(NamedTuple):
    measured: float
    predicted: float

    @property
    def relative_error(self) -> float:
        if self.predicted == 0:
            return abs(self.measured)
        return abs(self.measured - self.predicted) / abs(self.predicted)


def ldp_weight_ratio_check(wm: WeightModel, target_a: Measure, target_b: Measure,
                           quantile_count: Optional[int] = None) -> WeightRatio:
    """Compares the log-weight ratio of the quantile configurations of two targets with the rate difference.

    ``measured = (log w(x_a) - log w(x_b)) / speed`` and ``predicted = rate(b) - rate(a)`` agree to leading order
    in the speed.
    """
    count = quantile_count or wm.size
    if count != wm.size:
        raise DomainError(f"quantile_count must equal the particle count {wm.size}, got {count}")
    xa = quantile_configuration(target_a, count)
    xb = quantile_configuration(target_b, count)
    measured = (log_weight(wm, xa) - log_weight(wm, xb)) / wm.speed
    predicted = wm.rate(target_b) - wm.rate(target_a)
    return WeightRatio(float(measured), float(predicted))


def distance_to_m0(m: Measure, grid_size: int = M0_GRID_SIZE) -> Tuple[float, float]:
    """``min_p d_bl(m, p δ_{√2} + (1 - p) δ_{-√2})`` over ``grid_size`` equidistant ``p`` in ``[0, 1]``.

    The distance is convex in ``p``, so a ternary search over the grid finds the minimum. Returns the distance
    and the minimizing ``p``.
    """
    ps = np.linspace(0.0, 1.0, grid_size)
    cache: Dict[int, float] = {}

    def dist(k: int) -> float:
        if k not in cache:
            cache[k] = d_bl(m, two_point(ps[k]))
        return cache[k]

    lo, hi = 0, grid_size - 1
    while hi - lo > 2:
        a = lo + (hi - lo) // 3
        b = hi - (hi - lo) // 3
        if dist(a) <= dist(b):
            hi = b
        else:
            lo = a
    best = min(range(lo, hi + 1), key=dist)
    return dist(best), float(ps[best])


class ConvergenceStudy:
    """Replicas of a sampler with the statistics of their empirical measures.

    Replica ``i`` uses the seed ``base_seed + i``. Failing replicas are recorded with :attr:`Status.ERROR` and do
    not abort the study.
    """

    RESULT_KEYS = ["replica", "seed", "status", "error_message", "d_limit", "p_nearest", "m2", "m4", "rate",
                   "mass_alpha", "acceptance"]

    def __init__(self, cfg: EnsembleConfig, replicas: int, base_seed: int = 0, n_jobs: int = 1,
                 progress: bool = False):
        if replicas < 1:
            raise DomainError(f"replicas must be at least 1, got {replicas}")
        self.cfg = cfg
        self.replicas = replicas
        self.base_seed = base_seed
        self.n_jobs = n_jobs
        self.progress = progress
        self.log = logging.getLogger(self.__class__.__name__)

    def _wishart_stats(self, cfg: EnsembleConfig) -> Dict[str, Any]:
        sample = sample_wishart_block(cfg)
        reflected = sample.reflected
        return {"d_limit": d_bl(reflected, RADEMACHER), "m2": moment(reflected, 2), "m4": moment(reflected, 4),
                "rate": rate_isym(reflected).normalized}

    def _gue_stats(self, cfg: EnsembleConfig) -> Dict[str, Any]:
        chain = MetropolisSampler(cfg.size, cfg.dimension, cfg.mcmc, cfg.seed).run()
        sample = chain.sample
        distance, p = distance_to_m0(sample)
        stats = {"d_limit": distance, "p_nearest": p, "m2": moment(sample, 2), "m4": moment(sample, 4),
                 "rate": rate_i(sample).normalized, "acceptance": chain.acceptance}
        if cfg.size < cfg.dimension:
            _, a, _ = scaled_pair(sample.points, cfg.size, cfg.dimension)
            stats["mass_alpha"] = a.mass
        return stats

    def run_replica(self, replica: int) -> Dict[str, Any]:
        cfg = self.cfg.with_seed(self.base_seed + replica)
        record: Dict[str, Any] = {"replica": replica, "seed": cfg.seed}
        try:
            if cfg.model == ModelKind.WISHART_BLOCK:
                record.update(self._wishart_stats(cfg))
            else:
                record.update(self._gue_stats(cfg))
            record["status"] = Status.OK
        except Exception as e:
            self.log.exception(f"Replica {replica} (seed {cfg.seed}) of {cfg.model.value} failed")
            record["status"] = Status.ERROR
            record["error_message"] = repr(e)
        return record

    def run(self) -> pd.DataFrame:
        self.log.info(f"Running {self.replicas} replicas of {self.cfg.to_dict()}")
        records = parallel_map(self.run_replica, range(self.replicas), n_jobs=self.n_jobs, desc="Replicas",
                               progress=self.progress)
        return pd.DataFrame.from_records(records, columns=self.RESULT_KEYS)

    def summarize(self, results: pd.DataFrame) -> Dict[str, Any]:
        ok = results[results.status == Status.OK]
        if len(ok) < len(results):
            self.log.warning(f"{len(results) - len(ok)} of {len(results)} replicas failed and are left out of "
                             f"the aggregates")
        aggregates = {f"{k}_mean": float(ok[k].mean()) for k in ["d_limit", "m2", "m4", "rate", "mass_alpha"]
                      if ok[k].notna().any()}
        aggregates.update({"replicas": len(results), "failed": len(results) - len(ok)})
        return aggregates


def convergence_stats(cfg: EnsembleConfig, replicas: int, base_seed: int = 0, n_jobs: int = 1,
                      progress: bool = False) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Per-replica statistics and their aggregates (means over the successful replicas)."""
    study = ConvergenceStudy(cfg, replicas, base_seed, n_jobs=n_jobs, progress=progress)
    results = study.run()
    return results, study.summarize(results)


def _alpha_replica(M: int, N: int, mcmc: McmcParams, seed: int, target: Measure) -> Dict[str, Any]:
    sample = MetropolisSampler(M, N, mcmc, seed).run().sample
    return {"seed": seed, "d_p_alpha": d_bl(sample, target), "m2": moment(sample, 2)}


def alpha_regime_stats(M: int, alpha: float, replicas: int, base_seed: int = 0, mcmc: Optional[McmcParams] = None,
                       n_jobs: int = 1, progress: bool = False) -> pd.DataFrame:
    """Conditioned GUE with ``N = round(M / α)``: distance of the eigenvalue measure to ``p_α``.

    At ``M/N = α`` the log-density is ``-(M²/α)`` times the interpolating functional ``I_α``, so the empirical
    measure concentrates at ``p_α``, whose second moment is ``2 - α``.
    """
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    N = max(M, int(round(M / alpha)))
    target = make_law(LawSpec.p_alpha(alpha))
    rows = parallel_map(_alpha_replica, [(M, N, mcmc or McmcParams(), base_seed + i, target)
                                         for i in range(replicas)], n_jobs=n_jobs, desc="Replicas", progress=progress)
    df = pd.DataFrame.from_records(rows)
    df.insert(0, "replica", np.arange(replicas))
    return df


def maximality_stats(count: int, atoms: int, seed: int = 0) -> pd.DataFrame:
    """Boolean entropy of random atomic measures rescaled to unit second moment (never above 0)."""
    if count < 1 or atoms < 1:
        raise DomainError(f"count and atoms must be positive, got {count}, {atoms}")
    rng = make_rng(seed)
    rows: List[Dict[str, Any]] = []
    for i in range(count):
        m = Atomic(rng.standard_normal(atoms), rng.dirichlet(np.ones(atoms)))
        m = dilate(m, 1 / np.sqrt(moment(m, 2)))
        x, _ = m.nodes()
        rows.append({"index": i, "atoms": x.size, "gamma": gamma_entropy(m),
                     "max_abs_dev": float(np.abs(np.abs(x) - 1).max())})
    return pd.DataFrame(rows, columns=["index", "atoms", "gamma", "max_abs_dev"])

