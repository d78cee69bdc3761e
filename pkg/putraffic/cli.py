"""Command-line interface: bounds, simulate, estimate, sweep and verify"""
import argparse
import dataclasses
import logging
import sys
from typing import List, Optional

import pandas as pd

from putraffic import create_app
from putraffic.exceptions import ConfigError, TrafficDomainError, TrafficError, VerificationError
from putraffic.models.sampling import (
    apply_sensing_errors,
    generate_samples,
    read_sample_file,
    sample_frame,
    write_sample_file,
)
from putraffic.models.traffic import SamplingPlan, SensingModel, TrafficParams
from putraffic.services.bounds import (
    cr_asymptotes,
    cr_bound_lf_known_u,
    cr_bound_u_known_lf,
    cr_bounds_joint_uf,
    cr_bounds_joint_un,
    mse_avg,
    mse_avg_uniform_limit,
)
from putraffic.services.estimators import EstimatorId, TrafficEstimator, estimate
from putraffic.services.experiments import SweepRunner, load_sweep_config, write_sweep_csv
from putraffic.services.verification import run_verification
from putraffic.utils.preprocess import sanitize_input, validate_param_pair, validate_sensing
from putraffic.utils.rng import PATH_STREAM, SENSING_STREAM, derive_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFICATION = 3


def _add_param_args(parser, required_window: bool = True):
    parser.add_argument('--u', type=float, help='Duty cycle')
    parser.add_argument('--lambda-f', type=float, help='Departure rate (1/s)')
    parser.add_argument('--lambda-n', type=float, help='Arrival rate (1/s)')
    parser.add_argument('--pf', type=float, default=0.0, help='False-alarm probability')
    parser.add_argument('--pm', type=float, default=0.0, help='Mis-detection probability')
    if required_window:
        parser.add_argument('--duration', type=float, required=True, help='Observation window T (s)')
        parser.add_argument('--samples', type=int, required=True, help='Number of samples N')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='putraffic',
        description='Primary-user traffic estimation: bounds, simulation, estimation and sweeps'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    # ========== bounds ==========
    bounds_parser = subparsers.add_parser('bounds', help='Evaluate the closed-form bounds')
    _add_param_args(bounds_parser)

    # ========== simulate ==========
    simulate_parser = subparsers.add_parser('simulate', help='Emit a sampled PU path as time,bit CSV')
    _add_param_args(simulate_parser)
    simulate_parser.add_argument('--seed', type=int, default=0, help='Random seed')
    simulate_parser.add_argument('--out', help='Output CSV (stdout when omitted)')

    # ========== estimate ==========
    estimate_parser = subparsers.add_parser('estimate', help='Run one estimator on a sample file')
    estimate_parser.add_argument('sample_file', help='time,bit CSV')
    estimate_parser.add_argument('--estimator', default=EstimatorId.ML_JOINT_F.value,
                                 choices=[e.value for e in EstimatorId])
    _add_param_args(estimate_parser, required_window=False)

    # ========== sweep ==========
    sweep_parser = subparsers.add_parser('sweep', help='Run a Monte Carlo sweep from a JSON config')
    sweep_parser.add_argument('--config', required=True, help='Sweep configuration (JSON)')
    sweep_parser.add_argument('--out', help='Output CSV (overrides the config)')
    sweep_parser.add_argument('--trials', type=int, help='Trials per point (overrides the config)')
    sweep_parser.add_argument('--seed', type=int, help='Master seed (overrides the config)')

    # ========== verify ==========
    verify_parser = subparsers.add_parser('verify', help='Run the identity and oracle suites')
    verify_parser.add_argument('--max-n', type=int, default=10, help='Largest N for enumeration suites')
    verify_parser.add_argument('--seed', type=int, default=0, help='Seed of the random grids')
    return parser


def _params_from_args(args) -> TrafficParams:
    data = sanitize_input({'u': args.u, 'lambda_f': args.lambda_f, 'lambda_n': args.lambda_n})
    is_valid, message = validate_param_pair(data)
    if not is_valid:
        raise ConfigError(message)
    return TrafficParams.from_any(**data)


def _sensing_from_args(args) -> SensingModel:
    is_valid, message = validate_sensing({'pf': args.pf, 'pm': args.pm})
    if not is_valid:
        raise ConfigError(message)
    return SensingModel(args.pf, args.pm)


def _plan_from_args(args) -> SamplingPlan:
    if args.samples < 2:
        raise ConfigError("--samples must be at least 2")
    if not args.duration > 0:
        raise ConfigError("--duration must be positive")
    return SamplingPlan.uniform(args.duration, args.samples)


# ========== Commands ==========

def cmd_bounds(args) -> int:
    params = _params_from_args(args)
    model = _sensing_from_args(args)
    plan = _plan_from_args(args)
    t_c, n = plan.uniform_gap, plan.n

    reports = list(cr_bounds_joint_uf(params, t_c, n))
    reports.append(cr_bounds_joint_un(params, t_c, n)[1])
    reports.append(cr_bound_u_known_lf(params, t_c, n))
    reports.append(cr_bound_lf_known_u(params, t_c, n))
    reports.extend(cr_asymptotes(params, plan.t_total))
    reports.append(mse_avg(params, plan, model))
    reports.append(mse_avg_uniform_limit(params, plan.t_total))

    table = pd.DataFrame({
        'bound': [r.kind.value for r in reports],
        'mse': [r.value for r in reports],
        'rms': [r.rms for r in reports],
    })
    print(f"u={params.u:g} lambda_f={params.lambda_f:g} lambda_n={params.lambda_n:g} "
          f"T={plan.t_total:g}s N={n} pf={model.p_f:g} pm={model.p_m:g}")
    print(table.to_string(index=False, float_format=lambda v: f"{v:.9g}"))
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = _params_from_args(args)
    model = _sensing_from_args(args)
    plan = _plan_from_args(args)

    truth = generate_samples(params, plan, derive_seed(args.seed, 0, 0, PATH_STREAM))
    observed = apply_sensing_errors(truth, model, derive_seed(args.seed, 0, 0, 0, SENSING_STREAM))
    if args.out:
        write_sample_file(observed, args.out)
        print(f"Wrote {observed.n} samples to {args.out}")
    else:
        sample_frame(observed).to_csv(sys.stdout, index=False, float_format='%.17g')
    return EXIT_OK


def cmd_estimate(args) -> int:
    model = _sensing_from_args(args)
    samples = read_sample_file(args.sample_file)
    estimator_id = EstimatorId(args.estimator)

    estimator = TrafficEstimator()
    if estimator_id is EstimatorId.ML_KNOWN_LF:
        if args.lambda_f is None:
            raise ConfigError("ml-known-lf needs --lambda-f")
        report = estimator.u_known_lf(samples, args.lambda_f, model)
    elif estimator_id is EstimatorId.ML_KNOWN_U:
        if args.u is None:
            raise ConfigError("ml-known-u needs --u")
        report = estimator.lf_known_u(samples, args.u, model)
    else:
        report = estimate(estimator_id, samples, model, estimator=estimator)
    fields = {
        'estimator': report.estimator_id.value,
        'u_hat': report.u_hat,
        'lambda_f_hat': report.lambda_f_hat,
        'lambda_n_hat': report.lambda_n_hat,
        'loglik_at_opt': report.loglik_at_opt,
        'converged': report.converged,
        'boundary_hit': report.boundary_hit,
        'iterations': report.iterations,
    }
    for key, value in fields.items():
        shown = '' if value is None else (f"{value:.9g}" if isinstance(value, float) else value)
        print(f"{key:<14} {shown}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_sweep_config(args.config)
    overrides = {}
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be at least 1")
        overrides['trials'] = args.trials
    if args.seed is not None:
        overrides['master_seed'] = args.seed
    if overrides:
        config = dataclasses.replace(config, **overrides)

    out = args.out or config.output
    if not out:
        raise ConfigError("no output path: pass --out or set 'output' in the config")
    rows = SweepRunner(config).run()
    write_sweep_csv(rows, out)
    print(f"Wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.max_n < 2:
        raise ConfigError("--max-n must be at least 2")
    checks = run_verification(max_n=args.max_n, seed=args.seed)
    for check in checks:
        status = 'ok' if check.passed else 'FAILED'
        print(f"{check.name:<26} {status:<7} max_rel_err={check.max_rel_err:.3g} "
              f"tol={check.tolerance:g} {check.detail}")
    failed = [c.name for c in checks if not c.passed]
    if failed:
        raise VerificationError(f"failed checks: {', '.join(failed)}")
    return EXIT_OK


COMMANDS = {
    'bounds': cmd_bounds,
    'simulate': cmd_simulate,
    'estimate': cmd_estimate,
    'sweep': cmd_sweep,
    'verify': cmd_verify,
}


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return int(e.code or 0)

    create_app()
    try:
        return COMMANDS[args.command](args)
    except VerificationError as e:
        logger.error(f"Verification failed: {e}")
        return EXIT_VERIFICATION
    except (ConfigError, TrafficDomainError) as e:
        logger.error(f"Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except TrafficError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
