import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Tuple

import numpy as np
import pandas as pd

from .booleanclt import SemigroupEvaluator, gamma_curve, gamma_prime_1, standardize
from .constants import (
    EULER_LAGRANGE_TOL, EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, MAXIMALITY_TOL, MONOTONICITY_TOL,
    RATIO_REL_TOL, DEFAULT_BURNIN, DEFAULT_CUMULANT_ORDER, DEFAULT_PROPOSAL_SD, DEFAULT_STEPS
)
from .data_types import LawKind, ModelKind, RateName, Status, Suite
from .ensembles import EnsembleConfig, McmcParams, sample_conditioned_gue, sample_wishart_block, scaled_pair
from .entropy import (
    RateReport, classical_entropy, euler_lagrange_residual, gamma_entropy, rate_i, rate_i1, rate_ialpha,
    rate_igamma_v, rate_isym, rate_jgamma, rate_jplus, rate_jtilde, rate_pair, sigma_entropy
)
from .exceptions import DomainError, InversionFailureError, NumericalError, VerificationFailure
from .laws import LawSpec, density_function, make_law
from .measures import GridDensity, Measure
from .transforms import boolean_convolve
from .utils.encode_params import dumps_params
from .utils.grid import GridSpec
from .utils.io import load_measure, make_header, write_csv, write_json, write_measure
from .verify import (
    WeightModel, alpha_regime_stats, convergence_stats, ldp_weight_ratio_check, maximality_stats
)


SAMPLE_COMMAND = "sample"
DENSITY_COMMAND = "density"
ENTROPY_COMMAND = "entropy"
RATE_COMMAND = "rate"
CONVOLVE_COMMAND = "convolve"
CLT_COMMAND = "clt"
VERIFY_COMMAND = "verify"

POTENTIALS: Dict[str, Tuple[Callable[[np.ndarray], np.ndarray], Tuple[float, float]]] = {
    "quadratic": (lambda x: 0.5 * x ** 2, (-10.0, 10.0)),
    "linear": (lambda x: x, (0.0, 10.0)),
    "quartic": (lambda x: x ** 4, (-10.0, 10.0)),
}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"'{text}' is not a comma-separated list of numbers") from e


def _interval(text: str) -> Tuple[float, float]:
    values = _float_list(text)
    if len(values) != 2 or values[0] >= values[1]:
        raise argparse.ArgumentTypeError(f"'{text}' is not an interval lo,hi")
    return values[0], values[1]


def _add_mcmc_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--burnin", type=int, default=DEFAULT_BURNIN, help="Burn-in sweeps (default: %(default)s).")
    parser.add_argument("--steps", type=int, default=DEFAULT_STEPS, help="Sampling sweeps (default: %(default)s).")
    parser.add_argument("--proposal-sd", type=float, default=DEFAULT_PROPOSAL_SD,
                        help="Initial standard deviation of the random-walk proposal (default: %(default)s).")
    parser.add_argument("--no-adapt", action="store_true", default=False,
                        help="Keep the proposal standard deviation fixed during burn-in.")


def _create_sample_parser(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(SAMPLE_COMMAND, help="Sample the spectrum of a random matrix model.")
    models = parser.add_subparsers(dest="model", required=True)
    wishart = models.add_parser(ModelKind.WISHART_BLOCK.value,
                                help="Singular values of a p x n complex Gaussian block.")
    wishart.add_argument("--p", type=int, required=True, help="Number of rows.")
    wishart.add_argument("--n", type=int, required=True, help="Number of columns (n >= p).")
    wishart.add_argument("--seed", type=int, default=0, help="Random seed (default: %(default)s).")
    wishart.add_argument("--out", type=Path, required=True, help="Output file (.json or .csv).")
    wishart.add_argument("--reflected", action="store_true", default=False,
                         help="Write the symmetrized measure of +-s_i instead of the singular values.")
    gue = models.add_parser(ModelKind.CONDITIONED_GUE.value,
                            help="Non-zero eigenvalues of the conditioned GUE (Metropolis-Hastings).")
    gue.add_argument("--M", type=int, required=True, help="Number of non-zero eigenvalues.")
    gue.add_argument("--N", type=int, required=True, help="Matrix dimension (N >= M).")
    _add_mcmc_args(gue)
    gue.add_argument("--seed", type=int, default=0, help="Random seed (default: %(default)s).")
    gue.add_argument("--out", type=Path, required=True, help="Output file (.json or .csv).")
    gue.add_argument("--scaled-pair", action="store_true", default=False,
                     help="Also write the rescaled eigenvalues around +-sqrt(2) (JSON output only).")
    return parser


def _create_density_parser(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(DENSITY_COMMAND, help="Tabulate a reference law on a grid.")
    parser.add_argument("--law", type=LawKind.from_text, required=True,
                        help=f"One of {', '.join(k.value for k in LawKind)}.")
    parser.add_argument("--gamma", type=float, help="Marchenko-Pastur ratio in (0, 1].")
    parser.add_argument("--alpha", type=float, help="p-alpha parameter in (0, 1].")
    parser.add_argument("--grid", type=GridSpec.from_flag, help="Grid x0:dx:x1 (default: reference grid).")
    parser.add_argument("--out", type=Path, required=True, help="Output file (.csv or .json).")
    return parser


def _create_entropy_parser(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(ENTROPY_COMMAND, help="Evaluate an entropy functional.")
    parser.add_argument("--fn", choices=["gamma", "sigma", "classical"], required=True)
    parser.add_argument("--measure", type=Path, required=True, help="Measure file (.json or .csv).")
    parser.add_argument("--out", type=Path, help="Optional JSON output; the value is always printed.")
    return parser


def _create_rate_parser(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(RATE_COMMAND, help="Evaluate a rate functional.")
    parser.add_argument("--fn", type=RateName.from_text, required=True,
                        help=f"One of {', '.join(r.value for r in RateName)}.")
    parser.add_argument("--gamma", type=float, help="Parameter of jgamma and igammav.")
    parser.add_argument("--alpha", type=float, help="Parameter of ialpha.")
    parser.add_argument("--potential", choices=sorted(POTENTIALS), default="quadratic",
                        help="Potential V of igammav (default: %(default)s).")
    parser.add_argument("--domain", type=_interval, help="Search interval lo,hi of the igammav normalizer.")
    parser.add_argument("--measure", type=Path, required=True, help="Measure file (.json or .csv).")
    parser.add_argument("--measure2", type=Path, help="Second sub-measure for the pair rate.")
    parser.add_argument("--out", type=Path, help="Optional JSON output; the report is always printed.")
    return parser


def _create_convolve_parser(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(CONVOLVE_COMMAND, help="Convolve two measures.")
    kinds = parser.add_subparsers(dest="kind", required=True)
    boolean = kinds.add_parser("boolean", help="Boolean convolution.")
    boolean.add_argument("--a", type=Path, required=True, help="First measure file.")
    boolean.add_argument("--b", type=Path, required=True, help="Second measure file.")
    boolean.add_argument("--order", type=int, default=DEFAULT_CUMULANT_ORDER,
                         help="Number of Boolean cumulants checked (default: %(default)s).")
    boolean.add_argument("--grid", type=GridSpec.from_flag, help="Output grid x0:dx:x1 for density inputs.")
    boolean.add_argument("--out", type=Path, required=True, help="Output file (.json or .csv).")
    return parser


def _create_clt_parser(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(CLT_COMMAND, help="Boolean central limit semigroup.")
    actions = parser.add_subparsers(dest="action", required=True)
    curve = actions.add_parser("curve", help="Boolean entropy along the semigroup.")
    curve.add_argument("--measure", type=Path, required=True, help="Base measure file.")
    curve.add_argument("--ts", type=_float_list, required=True, help="Comma-separated t values (>= 1, ascending).")
    curve.add_argument("--grid", type=GridSpec.from_flag, help="Inversion grid x0:dx:x1 for density bases.")
    curve.add_argument("--out", type=Path, required=True, help="Output CSV (t,gamma).")
    dgamma = actions.add_parser("dgamma", help="Right derivative of the entropy curve at t = 1.")
    dgamma.add_argument("--measure", type=Path, required=True, help="Base measure file.")
    for p in (curve, dgamma):
        p.add_argument("--no-standardize", action="store_true", default=False,
                       help="Use the base measure as given (it must already have mean 0 and variance 1).")
    return parser


def _create_verify_parser(subparsers: Any) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(VERIFY_COMMAND, help="Run a verification suite.")
    parser.add_argument("--suite", type=Suite.from_text, required=True,
                        help=f"One of {', '.join(s.value for s in Suite)}.")
    parser.add_argument("--out", type=Path, required=True, help="Output file (.csv or .json).")
    parser.add_argument("--measure", type=Path, help="Measure file (monotonicity, euler-lagrange, weight-ratio).")
    parser.add_argument("--measure2", type=Path, help="Second measure file (weight-ratio).")
    parser.add_argument("--tmax", type=float, default=16.0,
                        help="Largest t of the monotonicity suite; t runs over powers of 2 (default: %(default)s).")
    parser.add_argument("--grid", type=GridSpec.from_flag, help="Inversion grid x0:dx:x1 (monotonicity).")
    parser.add_argument("--alpha", type=float, help="Parameter alpha (euler-lagrange, alpha-regime).")
    parser.add_argument("--model", type=ModelKind.from_text, help="Model (convergence, weight-ratio).")
    parser.add_argument("--p", type=int, help="Rows of the Wishart block.")
    parser.add_argument("--n", type=int, help="Columns of the Wishart block.")
    parser.add_argument("--M", type=int, help="Non-zero eigenvalues of the conditioned GUE.")
    parser.add_argument("--N", type=int, help="Dimension of the conditioned GUE.")
    parser.add_argument("--replicas", type=int, default=20, help="Replicas (default: %(default)s).")
    parser.add_argument("--count", type=int, default=1000, help="Random measures (maximality).")
    parser.add_argument("--atoms", type=int, default=4, help="Atoms per random measure (maximality).")
    parser.add_argument("--seed", type=int, default=0, help="Base seed (default: %(default)s).")
    _add_mcmc_args(parser)
    return parser


def _create_arg_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="booleanentropy",
                             description="Boolean entropy, rate functionals of random matrix models and the "
                                         "Boolean central limit semigroup. See subcommands for further details.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="Log INFO (-v) or DEBUG (-vv) messages to standard error.")
    parser.add_argument("--progress", action="store_true", default=False, help="Show progress bars.")
    parser.add_argument("--jobs", type=int, default=-1,
                        help="Parallel workers, capped by BEL_THREADS (default: %(default)s = all allowed).")
    subparsers = parser.add_subparsers(dest="command")
    _create_sample_parser(subparsers)
    _create_density_parser(subparsers)
    _create_entropy_parser(subparsers)
    _create_rate_parser(subparsers)
    _create_convolve_parser(subparsers)
    _create_clt_parser(subparsers)
    _create_verify_parser(subparsers)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise DomainError(f"{args.command} needs {', '.join(missing)}")


class CliRunner:
    """Executes one parsed command line and writes its outputs."""

    def __init__(self, args: argparse.Namespace, argv: List[str]):
        self.args = args
        self.header = make_header(argv, getattr(args, "seed", None))
        self.log = logging.getLogger(self.__class__.__name__)

    def run(self) -> int:
        self._check_distinct_paths()
        handler = {
            SAMPLE_COMMAND: self.sample,
            DENSITY_COMMAND: self.density,
            ENTROPY_COMMAND: self.entropy,
            RATE_COMMAND: self.rate,
            CONVOLVE_COMMAND: self.convolve,
            CLT_COMMAND: self.clt,
            VERIFY_COMMAND: self.verify,
        }[self.args.command]
        self.log.debug(f"Running {self.header['cmd']}")
        handler()
        return EXIT_OK

    def _check_distinct_paths(self) -> None:
        paths = [getattr(self.args, k) for k in ("measure", "measure2", "a", "b", "out")
                 if getattr(self.args, k, None) is not None]
        resolved = [p.resolve() for p in paths]
        if len(set(resolved)) < len(resolved):
            raise DomainError(f"Input and output files must be distinct, got {[str(p) for p in paths]}")

    def _mcmc(self) -> McmcParams:
        a = self.args
        return McmcParams(a.burnin, a.steps, a.proposal_sd, not a.no_adapt)

    def _model_config(self) -> EnsembleConfig:
        a = self.args
        _require(a, "model")
        if a.model == ModelKind.WISHART_BLOCK:
            _require(a, "p", "n")
            return EnsembleConfig.wishart_block(a.p, a.n, a.seed)
        _require(a, "M", "N")
        return EnsembleConfig.conditioned_gue(a.M, a.N, a.seed, self._mcmc())

    @staticmethod
    def _emit(obj: Any) -> None:
        if isinstance(obj, float):
            print(f"{obj:.17g}")
        else:
            print(dumps_params(obj))

    # sample
    def sample(self) -> None:
        a = self.args
        if a.model == ModelKind.WISHART_BLOCK.value:
            cfg = EnsembleConfig.wishart_block(a.p, a.n, a.seed)
            result = sample_wishart_block(cfg)
            measure: Measure = result.reflected if a.reflected else result.singular_values
            write_measure(measure, a.out, self.header, {"config": cfg.to_dict()})
        else:
            cfg = EnsembleConfig.conditioned_gue(a.M, a.N, a.seed, self._mcmc())
            sample = sample_conditioned_gue(cfg, progress=a.progress)
            extra: Dict[str, Any] = {"config": cfg.to_dict()}
            if a.scaled_pair:
                pair, alpha_side, beta_side = scaled_pair(sample.points, a.M, a.N)
                extra["scaled_pair"] = {**pair.to_dict(), "mass_alpha": alpha_side.mass,
                                        "mass_beta": beta_side.mass}
            write_measure(sample, a.out, self.header, extra)
        self.log.info(f"Sample written to {a.out}")

    # density
    def density(self) -> None:
        a = self.args
        spec = LawSpec(a.law, gamma=a.gamma, alpha=a.alpha)
        law = make_law(spec, a.grid)
        if isinstance(law, GridDensity) and a.out.suffix.lower() == ".csv":
            # closed-form values, not the renormalized ones
            values = density_function(spec)(law.x)
            write_csv(pd.DataFrame({"x": law.x, "density": values}), a.out, self.header)
        else:
            write_measure(law, a.out, self.header, {"law": spec.to_dict()})

    # entropy
    def entropy(self) -> None:
        a = self.args
        m = load_measure(a.measure)
        fn = {"gamma": gamma_entropy, "sigma": sigma_entropy, "classical": classical_entropy}[a.fn]
        value = fn(m)
        self._emit(value)
        if a.out is not None:
            write_json({"fn": a.fn, "value": value}, a.out, self.header)

    # rate
    def _rate_report(self, m: Measure) -> RateReport:
        a = self.args
        name: RateName = a.fn
        if name == RateName.ISYM:
            return rate_isym(m)
        elif name == RateName.I:
            return rate_i(m)
        elif name == RateName.I1:
            return rate_i1(m)
        elif name == RateName.JPLUS:
            return rate_jplus(m)
        elif name == RateName.JTILDE:
            return rate_jtilde(m)
        elif name == RateName.JGAMMA:
            _require(a, "gamma")
            return rate_jgamma(m, a.gamma)
        elif name == RateName.IALPHA:
            _require(a, "alpha")
            return rate_ialpha(m, a.alpha)
        elif name == RateName.IGAMMAV:
            _require(a, "gamma")
            potential, domain = POTENTIALS[a.potential]
            return rate_igamma_v(m, a.gamma, potential, a.domain or domain)
        _require(a, "measure2")
        return rate_pair(m, load_measure(a.measure2))

    def rate(self) -> None:
        report = self._rate_report(load_measure(self.args.measure))
        self._emit(report.to_dict())
        if self.args.out is not None:
            write_json(report.to_dict(), self.args.out, self.header)

    # convolve
    def convolve(self) -> None:
        a = self.args
        result = boolean_convolve(load_measure(a.a), load_measure(a.b), order=a.order, grid=a.grid, n_jobs=a.jobs)
        write_measure(result, a.out, self.header)

    # clt
    def _semigroup(self) -> SemigroupEvaluator:
        base = load_measure(self.args.measure)
        return SemigroupEvaluator(base if self.args.no_standardize else standardize(base))

    def _curve(self, ts: List[float], out: Path) -> pd.DataFrame:
        try:
            curve = gamma_curve(self._semigroup(), ts, self.args.grid, n_jobs=self.args.jobs,
                                progress=self.args.progress)
        except InversionFailureError as e:
            if e.partial:
                write_csv(pd.DataFrame(e.partial, columns=["t", "gamma"]), out, self.header)
                self.log.warning(f"Wrote {len(e.partial)} curve points computed before the failure to {out}")
            raise
        df = pd.DataFrame(curve, columns=["t", "gamma"])
        write_csv(df, out, self.header)
        return df

    def clt(self) -> None:
        a = self.args
        if a.action == "curve":
            self._curve(a.ts, a.out)
        else:
            self._emit(gamma_prime_1(self._semigroup().base))

    # verify
    def verify(self) -> None:
        suite: Suite = self.args.suite
        self.log.info(f"Running verification suite {suite.value}")
        {
            Suite.MONOTONICITY: self._verify_monotonicity,
            Suite.EULER_LAGRANGE: self._verify_euler_lagrange,
            Suite.CONVERGENCE: self._verify_convergence,
            Suite.WEIGHT_RATIO: self._verify_weight_ratio,
            Suite.MAXIMALITY: self._verify_maximality,
            Suite.ALPHA_REGIME: self._verify_alpha_regime,
        }[suite]()

    def _verify_monotonicity(self) -> None:
        a = self.args
        _require(a, "measure")
        if not a.tmax >= 1:
            raise DomainError(f"--tmax must be at least 1, got {a.tmax}")
        ts = [float(2 ** k) for k in range(int(np.floor(np.log2(a.tmax))) + 1)]
        if ts[-1] < a.tmax:
            ts.append(float(a.tmax))
        df = self._curve(ts, a.out)
        drops = -np.diff(df["gamma"].to_numpy())
        if np.any(drops > MONOTONICITY_TOL):
            raise VerificationFailure(f"Entropy curve decreases by up to {drops.max():.3g} "
                                      f"(tolerance {MONOTONICITY_TOL})")

    def _verify_euler_lagrange(self) -> None:
        a = self.args
        _require(a, "alpha")
        if a.measure is not None:
            d = load_measure(a.measure)
        else:
            d = make_law(LawSpec.p_alpha(a.alpha))
        if not isinstance(d, GridDensity):
            raise DomainError("The Euler-Lagrange suite needs a grid density")
        residual = euler_lagrange_residual(d, a.alpha)
        result = {"alpha": a.alpha, "max_dev_on_support": residual.max_dev_on_support,
                  "min_slack_off_support": residual.min_slack_off_support}
        write_json(result, a.out, self.header)
        self._emit(result)
        if residual.max_dev_on_support > EULER_LAGRANGE_TOL or residual.min_slack_off_support < -EULER_LAGRANGE_TOL:
            raise VerificationFailure(f"Equilibrium condition violated: {result}")

    def _verify_convergence(self) -> None:
        a = self.args
        cfg = self._model_config()
        results, aggregates = convergence_stats(cfg, a.replicas, a.seed, n_jobs=a.jobs, progress=a.progress)
        table = results.assign(status=results.status.map(lambda s: s.name))
        if a.out.suffix.lower() == ".json":
            write_json({"config": cfg.to_dict(), "records": table.to_dict(orient="records"),
                        "aggregates": aggregates}, a.out, self.header)
        else:
            write_csv(table, a.out, self.header)
        self._emit(aggregates)
        if (results.status == Status.ERROR).all():
            raise VerificationFailure("All replicas failed")

    def _verify_weight_ratio(self) -> None:
        a = self.args
        _require(a, "measure", "measure2")
        cfg = self._model_config()
        ratio = ldp_weight_ratio_check(WeightModel.from_config(cfg), load_measure(a.measure),
                                       load_measure(a.measure2))
        df = pd.DataFrame([{"measured": ratio.measured, "predicted": ratio.predicted,
                            "relative_error": ratio.relative_error}])
        write_csv(df, a.out, self.header)
        self._emit(df.iloc[0].to_dict())
        if ratio.relative_error > RATIO_REL_TOL:
            raise VerificationFailure(f"Log-weight ratio {ratio.measured:.6g} deviates from the rate difference "
                                      f"{ratio.predicted:.6g} by {ratio.relative_error:.3g}")

    def _verify_maximality(self) -> None:
        a = self.args
        df = maximality_stats(a.count, a.atoms, a.seed)
        write_csv(df, a.out, self.header)
        worst = float(df["gamma"].max())
        self._emit({"count": len(df), "max_gamma": worst})
        if worst > MAXIMALITY_TOL:
            raise VerificationFailure(f"A measure with unit second moment has Boolean entropy {worst:.3g} > 0")

    def _verify_alpha_regime(self) -> None:
        a = self.args
        _require(a, "M", "alpha")
        df = alpha_regime_stats(a.M, a.alpha, a.replicas, a.seed, self._mcmc(), n_jobs=a.jobs,
                                progress=a.progress)
        write_csv(df, a.out, self.header)
        self._emit({"d_p_alpha_mean": float(df["d_p_alpha"].mean()), "m2_mean": float(df["m2"].mean())})


def _report(e: BaseException) -> None:
    print(f"error={e.__class__.__name__} message={json.dumps(str(e))}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = _create_arg_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_OK
    if getattr(args, "scaled_pair", False) and args.out.suffix.lower() == ".csv":
        parser.error("--scaled-pair needs a .json output file")
    _configure_logging(args.verbose)
    try:
        return CliRunner(args, argv).run()
    except NumericalError as e:
        _report(e)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as e:
        _report(e)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
