import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np
from numpy.random import PCG64, Generator
from scipy import linalg
from tqdm import trange

from .constants import (
    DEFAULT_BURNIN, DEFAULT_PROPOSAL_SD, DEFAULT_STEPS, MCMC_ADAPTATION_EXPONENT, MCMC_TARGET_ACCEPTANCE, SQRT2,
    THETA_DAMPING, THETA_MAX_ITERATIONS, THETA_RESIDUAL_TOL
)
from .data_types import ModelKind
from .exceptions import DomainError, MixingWarning, NumericalError
from .measures import Atomic, Empirical, symmetrize


def make_rng(seed: int) -> Generator:
    return Generator(PCG64(seed))


@dataclass
class McmcParams:
    burnin: int = DEFAULT_BURNIN
    steps: int = DEFAULT_STEPS
    proposal_sd: float = DEFAULT_PROPOSAL_SD
    adapt: bool = True

    def __post_init__(self) -> None:
        if self.burnin < 0:
            raise DomainError(f"burnin must be non-negative, got {self.burnin}")
        if self.steps < 1:
            raise DomainError(f"steps must be at least 1, got {self.steps}")
        if not self.proposal_sd > 0:
            raise DomainError(f"proposal_sd must be positive, got {self.proposal_sd}")


@dataclass
class EnsembleConfig:
    """Random matrix model and its sampling parameters.

    ``size`` and ``dimension`` are ``(p, n)`` for the Wishart block model and ``(M, N)`` for the conditioned GUE.
    """
    model: ModelKind
    size: int
    dimension: int
    seed: int = 0
    mcmc: McmcParams = field(default_factory=McmcParams)

    def __post_init__(self) -> None:
        if self.size < 1:
            raise DomainError(f"Model size must be at least 1, got {self.size}")
        if self.dimension < self.size:
            raise DomainError(f"{self.model.value} needs size <= dimension, got {self.size} > {self.dimension}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")

    @staticmethod
    def wishart_block(p: int, n: int, seed: int = 0) -> 'EnsembleConfig':
        return EnsembleConfig(ModelKind.WISHART_BLOCK, p, n, seed)

    @staticmethod
    def conditioned_gue(M: int, N: int, seed: int = 0, mcmc: Optional[McmcParams] = None) -> 'EnsembleConfig':
        return EnsembleConfig(ModelKind.CONDITIONED_GUE, M, N, seed, mcmc or McmcParams())

    def with_seed(self, seed: int) -> 'EnsembleConfig':
        return EnsembleConfig(self.model, self.size, self.dimension, seed, self.mcmc)

    def to_dict(self) -> Dict[str, Any]:
        names = ("p", "n") if self.model == ModelKind.WISHART_BLOCK else ("M", "N")
        d: Dict[str, Any] = {"model": self.model.value, names[0]: self.size, names[1]: self.dimension,
                             "seed": self.seed}
        if self.model == ModelKind.CONDITIONED_GUE:
            d["mcmc"] = asdict(self.mcmc)
        return d


@dataclass
class WishartSample:
    singular_values: Empirical
    reflected: Empirical
    eigenvalues: Empirical


def sample_wishart_block(cfg: EnsembleConfig) -> WishartSample:
    """Singular values of ``G / sqrt(2n)`` for a ``p x n`` complex Gaussian ``G``.

    Real and imaginary parts of the entries are independent standard normals, so the eigenvalues ``s_i²`` of
    ``W = GG* / (2n)`` follow the Laguerre weight ``λ^(n-p) e^(-nλ)``. ``reflected`` is the symmetrized measure of
    ``±s_i``, the spectrum of the chiral block matrix.
    """
    if cfg.model != ModelKind.WISHART_BLOCK:
        raise DomainError(f"Expected a {ModelKind.WISHART_BLOCK.value} configuration, got {cfg.model.value}")
    p, n = cfg.size, cfg.dimension
    rng = make_rng(cfg.seed)
    g = rng.standard_normal((p, n)) + 1j * rng.standard_normal((p, n))
    try:
        s = linalg.svdvals(g / math.sqrt(2 * n))
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"SVD of the {p}x{n} Gaussian block (seed={cfg.seed}) did not converge: {e}") from e
    singular = Empirical(s)
    return WishartSample(singular, symmetrize(singular), Empirical(s ** 2))  # type: ignore[arg-type]


def conditioned_gue_log_density(lam: np.ndarray, N: int) -> float:
    """Unnormalized log-density ``2(N-M) Σ log|λ_i| + 2 Σ_{i<j} log|λ_i - λ_j| - (N/2) Σ λ_i²``."""
    lam = np.asarray(lam, dtype=np.float64)
    M = lam.size
    if np.any(lam == 0):
        return -np.inf
    diffs = np.abs(lam[:, None] - lam[None, :])[np.triu_indices(M, k=1)]
    if np.any(diffs == 0):
        return -np.inf
    return float(2 * (N - M) * np.log(np.abs(lam)).sum() + 2 * np.log(diffs).sum() - 0.5 * N * np.dot(lam, lam))


@dataclass
class ChainResult:
    sample: Empirical
    acceptance: float
    flip_acceptance: float
    proposal_sd: float
    mixing_ok: bool
    trajectory: Optional[np.ndarray] = None


class MetropolisSampler:
    """Metropolis-Hastings chain on the ``M`` non-zero eigenvalues of the conditioned GUE.

    A sweep visits every coordinate twice: once with a Gaussian random-walk proposal ``λ_i + σ ξ`` and once with
    the reflection ``λ_i -> -λ_i``. Both proposals are symmetric, so the acceptance ratio is the target ratio. The
    reflection lets eigenvalues change sides; the factor ``|λ_i|^(2(N-M))`` makes crossing 0 by small steps
    practically impossible. The density is even, so for ``M = 1`` every reflection is accepted and the sign is set
    by the random start. During burn-in, ``log σ`` follows a Robbins-Monro recursion towards the target acceptance
    rate of the Gaussian moves; afterwards ``σ`` is frozen.
    """

    def __init__(self, M: int, N: int, mcmc: Optional[McmcParams] = None, seed: int = 0):
        if not 1 <= M <= N:
            raise DomainError(f"Conditioned GUE needs 1 <= M <= N, got M={M}, N={N}")
        self.M = M
        self.N = N
        self.mcmc = mcmc or McmcParams()
        self.seed = seed
        self.rng = make_rng(seed)
        self.log = logging.getLogger(self.__class__.__name__)

    def initial_state(self) -> np.ndarray:
        radius = math.sqrt(2 * (self.N - self.M + 0.5) / self.N)
        signs = np.where(np.arange(self.M) % 2 == 0, 1.0, -1.0) * self.rng.choice([-1.0, 1.0])
        self.rng.shuffle(signs)
        return signs * radius * (1 + 0.05 * self.rng.standard_normal(self.M))

    def _log_ratio(self, lam: np.ndarray, i: int, y: float) -> float:
        x = lam[i]
        if y == 0:
            return -np.inf
        others = np.delete(lam, i)
        new_gaps = np.abs(others - y)
        if np.any(new_gaps == 0):
            return -np.inf
        old_gaps = np.abs(others - x)
        return (2 * (self.N - self.M) * (math.log(abs(y)) - math.log(abs(x)))
                + 2 * float(np.log(new_gaps).sum() - np.log(old_gaps).sum())
                - 0.5 * self.N * (y * y - x * x))

    def _sweep(self, lam: np.ndarray, sd: float) -> Tuple[int, int]:
        moved = flipped = 0
        steps = self.rng.standard_normal(self.M) * sd
        uniforms = np.log(self.rng.random((2, self.M)))
        for i in range(self.M):
            y = lam[i] + steps[i]
            if uniforms[0, i] < self._log_ratio(lam, i, y):
                lam[i] = y
                moved += 1
            if uniforms[1, i] < self._log_ratio(lam, i, -lam[i]):
                lam[i] = -lam[i]
                flipped += 1
        return moved, flipped

    def run(self, record: bool = False, progress: bool = False) -> ChainResult:
        """Runs burn-in and sampling sweeps; ``record`` keeps every post-burn-in state in ``trajectory``."""
        p = self.mcmc
        lam = self.initial_state()
        log_sd = math.log(p.proposal_sd)
        self.log.debug(f"Starting chain M={self.M}, N={self.N}, seed={self.seed} with {p.burnin} burn-in sweeps")
        for k in trange(1, p.burnin + 1, desc="Burn-in", disable=not progress):
            moved, _ = self._sweep(lam, math.exp(log_sd))
            if p.adapt:
                log_sd += k ** -MCMC_ADAPTATION_EXPONENT * (moved / self.M - MCMC_TARGET_ACCEPTANCE)
        sd = math.exp(log_sd)
        self.log.debug(f"Burn-in finished, proposal_sd={sd:.4g}")

        trajectory = np.empty((p.steps, self.M)) if record else None
        moved_total = flipped_total = 0
        for k in trange(p.steps, desc="Sampling", disable=not progress):
            moved, flipped = self._sweep(lam, sd)
            moved_total += moved
            flipped_total += flipped
            if trajectory is not None:
                trajectory[k] = lam
        mixing_ok = moved_total > 0
        if not mixing_ok:
            warnings.warn(MixingWarning.msg(f"Conditioned GUE (M={self.M}, N={self.N}, seed={self.seed})",
                                            p.steps, sd), MixingWarning)
        acceptance = moved_total / (p.steps * self.M)
        flip_acceptance = flipped_total / (p.steps * self.M)
        self.log.info(f"Chain M={self.M}, N={self.N}, seed={self.seed}: acceptance {acceptance:.3f}, "
                      f"reflections {flip_acceptance:.3f}")
        return ChainResult(Empirical(lam.copy()), acceptance, flip_acceptance, sd, mixing_ok, trajectory)


def sample_conditioned_gue(cfg: EnsembleConfig, progress: bool = False) -> Empirical:
    """Empirical measure of the final state of a Metropolis-Hastings chain on the conditioned GUE eigenvalues."""
    if cfg.model != ModelKind.CONDITIONED_GUE:
        raise DomainError(f"Expected a {ModelKind.CONDITIONED_GUE.value} configuration, got {cfg.model.value}")
    return MetropolisSampler(cfg.size, cfg.dimension, cfg.mcmc, cfg.seed).run(progress=progress).sample


def rejection_sample_conditioned_gue(M: int, N: int, count: int, seed: int = 0) -> np.ndarray:
    """Exact samples of the conditioned GUE eigenvalues by rejection, for small ``M``.

    Proposals have independent coordinates with density ``∝ |λ|^(2(N-M)) e^(-(N/2 - c) λ²)``. With
    ``S = Σ λ_i²`` and ``K = M(M-1)/2`` pairs, ``Π (λ_i - λ_j)² e^(-cS) <= (2S)^K e^(-cS) <= (2K/c)^K e^(-K)``,
    which bounds the acceptance ratio. Returns a ``count x M`` array.
    """
    if not 1 <= M < N:
        raise DomainError(f"Rejection sampling needs 1 <= M < N, got M={M}, N={N}")
    rng = make_rng(seed)
    pairs = M * (M - 1) // 2
    if pairs:
        c = min(pairs * N / (2 * M * (N - M)), N / 4)
        log_bound = pairs * math.log(2 * pairs / c) - pairs
    else:
        c = log_bound = 0.0
    shape = (2 * (N - M) + 1) / 2
    rate = N / 2 - c
    iu = np.triu_indices(M, k=1)
    out = np.empty((0, M))
    batch = max(1024, 4 * count)
    while out.shape[0] < count:
        sq = rng.gamma(shape, 1 / rate, size=(batch, M))
        lam = np.sqrt(sq) * rng.choice([-1.0, 1.0], size=(batch, M))
        if pairs:
            gaps = np.abs(lam[:, :, None] - lam[:, None, :])[:, iu[0], iu[1]]
            log_accept = 2 * np.log(gaps).sum(axis=1) - c * sq.sum(axis=1) - log_bound
            lam = lam[np.log(rng.random(batch)) < log_accept]
        out = np.vstack([out, lam])
    return out[:count]


@dataclass
class ThetaSolution:
    theta: float
    residual: float
    iterations: int

    @property
    def theta_sq(self) -> float:
        return self.theta ** 2


def solve_theta(M: int, N: int) -> ThetaSolution:
    """Scaling ``Θ`` of the eigenvalue clusters: the root of ``M² log Θ⁻² = N M Θ²`` in ``(0, 1)``.

    Damped fixed-point iteration ``s <- s/2 + (M/N) log(1/s) / 2`` on ``s = Θ²``, started at ``s = M/N``.
    """
    if M < 1 or M >= N:
        raise DomainError(f"solve_theta needs 1 <= M < N, got M={M}, N={N}")
    ratio = M / N
    s = ratio
    for iteration in range(1, THETA_MAX_ITERATIONS + 1):
        s = (1 - THETA_DAMPING) * s + THETA_DAMPING * ratio * math.log(1 / s)
        residual = abs(M * M * math.log(1 / s) - N * M * s)
        if residual <= THETA_RESIDUAL_TOL * N * M * s:
            return ThetaSolution(math.sqrt(s), residual, iteration)
    raise NumericalError(f"Theta iteration for M={M}, N={N} did not converge in {THETA_MAX_ITERATIONS} steps "
                         f"(last residual {residual:.3g})")


@dataclass
class ScaledPair:
    alpha_points: np.ndarray
    beta_points: np.ndarray
    m0: int

    def to_dict(self) -> Dict[str, Any]:
        return {"alpha_points": self.alpha_points.tolist(), "beta_points": self.beta_points.tolist(),
                "m0": self.m0}


def _sub_measure(points: np.ndarray, M: int) -> Atomic:
    if points.size == 0:
        return Atomic.empty()
    return Atomic(points, np.full(points.size, 1 / M), mass=points.size / M)


def scaled_pair(lam: Iterable[float], M: int, N: int) -> Tuple[ScaledPair, Atomic, Atomic]:
    """Zooms into the clusters at ``±√2``: ``α_i = (λ_i - √2)/Θ`` for ``λ_i >= 0``, ``β_i = (λ_i + √2)/Θ`` else.

    Returns the points and the sub-probability measures ``(1/M) Σ δ_{α_i}`` and ``(1/M) Σ δ_{β_i}``.
    """
    lam = np.asarray(list(lam), dtype=np.float64)
    if lam.size != M:
        raise DomainError(f"Expected {M} eigenvalues, got {lam.size}")
    theta = solve_theta(M, N).theta
    positive = lam >= 0
    alpha = (lam[positive] - SQRT2) / theta
    beta = (lam[~positive] + SQRT2) / theta
    pair = ScaledPair(alpha, beta, int(positive.sum()))
    return pair, _sub_measure(alpha, M), _sub_measure(beta, M)
