"""Command-line entry point: ``python -m kaczmarz {solve,ridge,bench,gen} ...``.

Exit codes: 0 when the solve converged (or every bench run completed), 1 on a
usage, configuration or I/O error, 2 when a solve stopped without converging.
"""
import argparse
import logging
import sys

from kaczmarz import config
from kaczmarz.bench import (ExperimentSpec, GaussianSource, MatrixMarketSource, RidgeMethod,
                            SparseSource, gen_gaussian, gen_sparse, emit_history_csv,
                            make_consistent_system, make_ridge_system, run_experiment,
                            write_history_csv)
from kaczmarz.engine import SolveConfig, StopRule, solve
from kaczmarz.errors import KaczmarzError
from kaczmarz.mmio import read_matrix_market, write_matrix_market
from kaczmarz.ridge import NormMode, RidgeConfig, ridge_solve
from kaczmarz.selection import SelectionStrategy, Variant
from kaczmarz.utils import configure_logging, parse_shape

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2

LINEAR_METHODS = [v.value for v in Variant]
RIDGE_METHODS = ['prk', 'prks']


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; 2 is reserved for non-convergence here."""

    def error(self, message):
        raise UsageError('{}: {}'.format(self.prog, message))


# ----------------------------------------------------------------------------------------
# Parser
def _add_common(parser, tol):
    parser.add_argument('--transpose', action='store_true',
                        help='solve with the transpose of the loaded matrix')
    parser.add_argument('--rhs-from-ones', action='store_true',
                        help='set b from the all-ones solution (required with --matrix)')
    parser.add_argument('--density', type=float, default=None,
                        help='make --synth instances sparse with this density')
    parser.add_argument('--eta', type=float, default=None, help='sampling ratio')
    parser.add_argument('--q', type=float, default=None,
                        help='Z-test critical value; "inf" disables the gate')
    parser.add_argument('--two-sided', action='store_true', help='gate on |Z| < q')
    parser.add_argument('--tol', type=float, default=tol)
    parser.add_argument('--max-iters', type=int, default=config.DEFAULT_MAX_ITERS)
    parser.add_argument('--seed', type=int, default=config.SEED)
    parser.add_argument('--metric', choices=[r.value for r in StopRule],
                        default=StopRule.KNOWN_SOLUTION_ERROR.value)
    parser.add_argument('--time-budget', type=float, default=None,
                        help='wall-clock seconds per solve')
    parser.add_argument('--history', default=None, help='write the convergence history CSV')
    parser.add_argument('--verbose', '-v', action='count', default=0)


def _add_single_source(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--matrix', help='Matrix Market file')
    source.add_argument('--synth', type=parse_shape, help='Gaussian instance MxN')


def build_parser():
    parser = _ArgumentParser(prog='kaczmarz', description='Kaczmarz solvers and benchmarks.',
                             allow_abbrev=False)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('solve', help='solve a consistent linear system A x = b',
                       allow_abbrev=False)
    _add_single_source(p)
    p.add_argument('--method', choices=LINEAR_METHODS, default='prk')
    p.add_argument('--theta', type=float, default=None)
    p.add_argument('--t', type=int, default=None)
    p.add_argument('--recompute-every', type=int, default=config.DEFAULT_RECOMPUTE_EVERY)
    _add_common(p, config.DEFAULT_TOL)

    p = sub.add_parser('ridge', help='solve (A A^T + tau I) x = b matrix-free',
                       allow_abbrev=False)
    _add_single_source(p)
    p.add_argument('--method', choices=RIDGE_METHODS, default='prk')
    p.add_argument('--tau', type=float, required=True)
    p.add_argument('--norms', choices=[mode.value for mode in NormMode],
                   default=NormMode.EXACT.value)
    p.add_argument('--residual-mode', choices=['recompute', 'incremental'], default='recompute')
    _add_common(p, config.DEFAULT_RIDGE_TOL)

    p = sub.add_parser('bench', help='run a method grid over one or more instances',
                       allow_abbrev=False)
    p.add_argument('--matrix', action='append', default=[], help='Matrix Market file')
    p.add_argument('--synth', action='append', default=[], type=parse_shape,
                   help='Gaussian instance MxN')
    p.add_argument('--method', action='append', default=[],
                   choices=LINEAR_METHODS + ['ridge-' + m for m in RIDGE_METHODS])
    p.add_argument('--theta', type=float, default=None)
    p.add_argument('--t', type=int, default=None)
    p.add_argument('--tau', type=float, default=None)
    p.add_argument('--norms', choices=[mode.value for mode in NormMode],
                   default=NormMode.EXACT.value)
    p.add_argument('--trials', type=int, default=config.DEFAULT_TRIALS)
    p.add_argument('--report', default=None, help='write the JSON report here')
    _add_common(p, None)

    p = sub.add_parser('gen', help='write a seeded synthetic instance to Matrix Market',
                       allow_abbrev=False)
    p.add_argument('--synth', type=parse_shape, required=True)
    p.add_argument('--seed', type=int, default=config.SEED)
    p.add_argument('--density', type=float, default=None)
    p.add_argument('--output', required=True)
    p.add_argument('--verbose', '-v', action='count', default=0)
    return parser


# ----------------------------------------------------------------------------------------
# Helpers
def _load_matrix(args, path=None, shape=None):
    if path is not None:
        if not args.rhs_from_ones:
            raise UsageError('--matrix needs --rhs-from-ones to build a right-hand side')
        return read_matrix_market(path, transpose=args.transpose)
    m, n = shape
    if args.density is not None:
        A = gen_sparse(m, n, args.density, args.seed)
    else:
        A = gen_gaussian(m, n, args.seed)
    return A.transpose() if args.transpose else A


def _strategy(args, name):
    eta, q = args.eta, args.q
    if name == Variant.SAMPLED_MAX.value and eta is None:
        raise UsageError('--method prks needs --eta')
    return SelectionStrategy.from_name(name, theta=args.theta, t=args.t, eta=eta, q=q,
                                       two_sided=args.two_sided)


def _print_report(report):
    print('method : {:}'.format(report.method))
    print('IT : {:}'.format(report.iterations))
    print('CPU : {:.4f} s (setup {:.4f} s)'.format(report.wall_time, report.setup_time))
    print('metric : {:.6e}'.format(report.metric))
    print('terminated : {:}'.format(report.terminated.value))


def _exit_code(report):
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


# ----------------------------------------------------------------------------------------
# Commands
def cmd_solve(args):
    strategy = _strategy(args, args.method)
    A = _load_matrix(args, args.matrix, args.synth)
    system = make_consistent_system(A)
    solve_config = SolveConfig(strategy=strategy, tol=args.tol, max_iters=args.max_iters,
                               seed=args.seed, stop_rule=StopRule(args.metric),
                               recompute_every=args.recompute_every,
                               time_budget=args.time_budget)
    report = solve(system, solve_config)
    _print_report(report)
    if args.history:
        write_history_csv({report.method: report.metric_history()}, args.history)
    return _exit_code(report)


def cmd_ridge(args):
    if not args.tau > 0.:
        raise UsageError('--tau must be positive, got {}'.format(args.tau))
    if args.method == 'prks' and args.eta is None:
        raise UsageError('--method prks needs --eta')
    if args.method == 'prk' and (args.eta is not None or args.q is not None or args.two_sided):
        raise UsageError('--eta, --q and --two-sided only apply to --method prks')
    ridge_config = RidgeConfig(method=args.method, norms=NormMode(args.norms), eta=args.eta,
                               q=config.NO_GATE if args.q is None else args.q,
                               two_sided=args.two_sided, tol=args.tol,
                               max_iters=args.max_iters, seed=args.seed,
                               stop_rule=StopRule(args.metric),
                               residual_mode=args.residual_mode, time_budget=args.time_budget)
    A = _load_matrix(args, args.matrix, args.synth)
    system = make_ridge_system(A, args.tau)
    report = ridge_solve(A, system.b, system.tau, ridge_config, x_star=system.x_star)
    _print_report(report)
    if args.history:
        write_history_csv({report.method: report.metric_history()}, args.history)
    return _exit_code(report)


# flags each method of a bench grid takes; the rest of the grid ignores them
_BENCH_PARAMS = {
    Variant.RELAXED_GREEDY.value: ('theta',),
    Variant.POWER_T.value: ('t',),
    Variant.SAMPLED_MAX.value: ('eta', 'q', 'two_sided'),
    'ridge-prks': ('eta', 'q', 'two_sided'),
}


def _bench_methods(args):
    names = args.method or ['rk', 'grk', 'prk']
    given = {key for key in ('theta', 't', 'eta', 'q') if getattr(args, key) is not None}
    if args.two_sided:
        given.add('two_sided')
    used = set()
    methods = []
    for name in names:
        params = _BENCH_PARAMS.get(name, ())
        used.update(params)
        kwargs = {key: getattr(args, key) for key in params}
        if name.startswith('ridge-'):
            if args.tau is None:
                raise UsageError('{} needs --tau'.format(name))
            if name == 'ridge-prks' and kwargs['eta'] is None:
                raise UsageError('--method ridge-prks needs --eta')
            if kwargs.get('q') is None:
                kwargs['q'] = config.NO_GATE
            methods.append(RidgeMethod(tau=args.tau, method=name[len('ridge-'):],
                                       norms=NormMode(args.norms), **kwargs))
        else:
            if name == Variant.SAMPLED_MAX.value and kwargs['eta'] is None:
                raise UsageError('--method prks needs --eta')
            methods.append(SelectionStrategy.from_name(name, **kwargs))
    unused = given - used
    if unused:
        raise UsageError('{} not taken by any --method in the grid'.format(
            ', '.join('--' + key.replace('_', '-') for key in sorted(unused))))
    return methods


def cmd_bench(args):
    if args.metric != StopRule.KNOWN_SOLUTION_ERROR.value:
        raise UsageError('bench always stops on the known-solution error')
    sources = [MatrixMarketSource(path, transpose=args.transpose) for path in args.matrix]
    if sources and not args.rhs_from_ones:
        raise UsageError('--matrix needs --rhs-from-ones to build a right-hand side')
    for m, n in args.synth:
        if args.density is not None:
            sources.append(SparseSource(m, n, args.density, args.seed))
        else:
            sources.append(GaussianSource(m, n, args.seed))
    if not sources:
        raise UsageError('bench needs at least one --matrix or --synth')
    if args.history and len(sources) > 1:
        raise UsageError('--history takes a single instance')
    methods = _bench_methods(args)

    reports = []
    for source in sources:
        spec = ExperimentSpec(source=source, methods=methods, tol=args.tol, trials=args.trials,
                              seed_base=args.seed, max_iters=args.max_iters,
                              time_budget=args.time_budget or config.DEFAULT_TIME_BUDGET,
                              keep_histories=bool(args.history))
        report = run_experiment(spec)
        for r in report.results:
            print('{:} {:} : IT {:.1f} CPU {:.4f} s{:}'.format(
                report.instance, r.method, r.mean_it, r.mean_seconds,
                ' (failed)' if r.failed else ''))
        reports.append(report)

    if args.history:
        emit_history_csv(reports[0], args.history)
    if args.report:
        if len(reports) == 1:
            reports[0].save(args.report)
        else:
            with open(args.report, 'w', encoding='utf-8') as f:
                f.write('[\n' + ',\n'.join(r.to_json() for r in reports) + '\n]\n')
    return EXIT_OK


def cmd_gen(args):
    m, n = args.synth
    if args.density is not None:
        A = gen_sparse(m, n, args.density, args.seed)
    else:
        A = gen_gaussian(m, n, args.seed)
    write_matrix_market(A, args.output)
    print('wrote {:} ({:}x{:}, nnz {:})'.format(args.output, A.m, A.n, A.nnz))
    return EXIT_OK


COMMANDS = {'solve': cmd_solve, 'ridge': cmd_ridge, 'bench': cmd_bench, 'gen': cmd_gen}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        configure_logging(args.verbose)
        logger.debug('command %s: %s', args.command, vars(args))
        return COMMANDS[args.command](args)
    except (UsageError, KaczmarzError, OSError, ValueError) as e:
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_USAGE
