"""Command-line front end.

    python cli.py constants big-omega --n 2 --k 1
    python cli.py check default_suite.json --threads 4 --out report.json
    python cli.py check --id busemann --param n=3 --param k=2
    python cli.py explore --target JkLpLq --family extremizer --n 3 --j 1 --k 2
    python cli.py list-checks
    python cli.py history --db runs/kplane.db --check-id busemann

Exit codes: 0 all passed, 1 a check failed, 2 usage or domain error,
3 inconclusive (and nothing failed), 4 a conjecture explorer found a violation.
"""
import argparse
import asyncio
import csv
import io
import json
import sys
from typing import Any, Dict, List, Optional, Sequence

from check_support import euclidean_field, plane_field, sphere_field
from config import Config
from conjectures import DEFAULT_REFINE, ConjectureTarget, FamilyRegistry, explore_conjecture
from errors import KPlaneError
from experiment import FORMATS, load_experiment
from fields_and_oracles import oracle_jk_extremizer, oracle_kplane
from grassmann_geometry import OrthonormalFrame, haar_frames, sample_affine_planes
from logger import GetLogger
from quadrature import QuadratureSpec
from records import (CONJECTURE_COLUMNS, REPORT_COLUMNS, check_record, conjecture_record, dumps, render_csv,
                     render_json)
from result_store import ResultStore
from special_constants import constant
from streams import RandomStream
from transforms import funk_transform, jk_transform, kplane_transform
from verification_harness import CheckRegistry, Verdict, make_spec, run_checks

logger = GetLogger()(name=__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3
EXIT_VIOLATION = 4

# command-line kind → (tag without j, tag with j)
CONSTANT_KINDS = {
    'omega': ('OmegaKPMu', 'OmegaJKPMu'),
    'big-omega': ('BigOmegaK', 'BigOmegaJK'),
    'gardner': ('GardnerC', None),
    'schneider': ('SchneiderC', None),
    'dpp': ('DppC', None),
    'funk-weighted': (None, 'FunkWeightedC'),
    'funk-weighted-1': ('FunkWeightedC1', None),
    'funk-tilde-1': ('FunkTildeC1', None),
    'asymptotic': (None, 'AsymptoticLimit'),
    'busemann': ('BusemannC', None),
    'section-lplq': ('SectionLpLqC', None),
    'star-sections': (None, 'StarSectionsC'),
}
TRANSFORM_KINDS = ('radon', 'jk', 'funk')


class UsageError(KPlaneError):
    """Inconsistent command-line arguments."""


def _value(text: str) -> Any:
    """JSON when it parses (numbers, lists, objects, null), the raw string otherwise."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _pairs(items: Optional[Sequence[str]]) -> Dict[str, Any]:
    params = {}
    for item in items or ():
        key, sep, text = item.partition('=')
        if not sep or not key:
            raise UsageError(f"expected key=value, got {item!r}")
        params[key] = _value(text)
    return params


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
        logger.info(f"report written to {path}")
    else:
        sys.stdout.write(text)


def _config(args) -> Config:
    overrides = {'threads': args.threads}
    if args.log_level:
        overrides['logging_level'] = args.log_level
    config = Config(**overrides)
    GetLogger()(config)
    return config


async def _store(db_path: str, command: str, seed: int, arguments: Dict[str, Any], records: List[Any]):
    store = await ResultStore(db_path)
    run_id = await store.save_run(command, seed, dumps(arguments))
    if run_id is None or not await store.save_many(records, run_id):
        logger.warning(f"results were not saved to {db_path}")


# Subcommands

def cmd_constants(args, config: Config) -> int:
    if args.kind in CONSTANT_KINDS:
        without_j, with_j = CONSTANT_KINDS[args.kind]
        tag = with_j if args.j is not None or without_j is None else without_j
        if tag is None:
            raise UsageError(f"{args.kind} takes no --j")
    else:
        tag = args.kind
    params = {name: getattr(args, name) for name in ('n', 'k', 'j', 'p', 'mu', 'm') if getattr(args, name) is not None}
    print(f"{constant(tag, **params):#.15g}")
    return EXIT_OK


def cmd_transform(args, config: Config) -> int:
    seed = config.seed if args.seed is None else args.seed
    label = f"transform/{args.kind}"
    if args.tensor:
        q = QuadratureSpec.tensor_tan(args.order or config.order, seed=seed, label=label, threads=config.threads)
    else:
        q = QuadratureSpec.monte_carlo(args.samples or config.samples, seed=seed, label=label,
                                       order=args.order or config.order, threads=config.threads)
    rng = RandomStream(seed, f"{label}/planes").generator()
    field_descriptor = _value(args.field) if args.field else None
    rows = []
    if args.kind == 'funk':
        phi = sphere_field(field_descriptor, args.n)
        for index, columns in enumerate(haar_frames(rng, args.planes, args.n, args.k)):
            estimate = funk_transform(phi, OrthonormalFrame(columns), q.derive(str(index)))
            rows.append({'index': index, 'value': estimate.value, 'stderr': estimate.stderr})
    else:
        j = 0 if args.kind == 'radon' else args.j
        if j is None:
            raise UsageError("the jk transform needs --j")
        f = euclidean_field(field_descriptor, args.n, args.k) if j == 0 else plane_field(field_descriptor, args.n,
                                                                                         j, args.k)
        planes = sample_affine_planes(rng, args.planes, args.n, args.k, support_radius=args.radius).planes
        for index in range(len(planes)):
            plane = planes.plane(index)
            budget = q.derive(str(index))
            estimate = kplane_transform(f, plane, budget) if j == 0 else jk_transform(f, plane, budget)
            row = {'index': index, 'distance': float(planes.distances()[index]), 'value': estimate.value,
                   'stderr': estimate.stderr}
            if j == 0 and 'kplane' in f.metadata.closed_form_transforms:
                row['oracle'] = oracle_kplane(f, plane)
            elif 'jk' in f.metadata.closed_form_transforms:
                row['oracle'] = oracle_jk_extremizer(args.n, j, args.k, plane)
            rows.append(row)
    _emit(json.dumps(rows, indent=2) + "\n", args.out)
    return EXIT_OK


def _check_specs(args, config: Config):
    if args.experiment and args.id:
        raise UsageError("give an experiment file or --id, not both")
    if args.experiment:
        experiment = load_experiment(args.experiment, config=config, seed=args.seed, samples=args.samples,
                                     order=args.order, threads=1)
        return experiment.specs, experiment.seed, experiment.output_format, experiment.output_path
    if not args.id:
        raise UsageError("check needs an experiment file or --id")
    seed = config.seed if args.seed is None else args.seed
    spec = make_spec(args.id, _pairs(args.param), seed=seed, samples=args.samples, order=args.order,
                     threads=config.threads, config=config)
    return [spec], seed, 'json', None


def cmd_check(args, config: Config) -> int:
    specs, seed, file_format, file_path = _check_specs(args, config)
    results = run_checks(specs, config, threads=config.threads, timing=args.timing)
    records = [check_record(result) for result in results]
    output_format = args.format or file_format
    text = render_json(records) if output_format == 'json' else render_csv(records, REPORT_COLUMNS)
    _emit(text, args.out or file_path)
    if args.db:
        asyncio.run(_store(args.db, 'check', seed, {'checks': [spec.check_id for spec in specs]}, records))

    verdicts = {result.verdict for result in results}
    for result in results:
        if not result.verdict.passed:
            logger.warning(f"{result.check_id}: {result.verdict.value} (ratio {result.normalized_ratio:.6g})")
    if Verdict.FAIL in verdicts:
        return EXIT_FAIL
    if Verdict.INCONCLUSIVE in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_explore(args, config: Config) -> int:
    options = _pairs(args.option)
    if args.seeds is not None:
        options['seeds'] = [int(seed) for seed in args.seeds.split(',') if seed.strip()]
    if args.moves is not None:
        options['moves'] = [move.strip() for move in args.moves.split(',') if move.strip()]
    report = explore_conjecture(args.target, args.family, args.n, args.j, args.k, members=args.members,
                                refine=args.refine, m=args.m, options=options, seed=args.seed,
                                samples=args.samples, order=args.order, threads=config.threads, config=config,
                                timing=args.timing)
    record = conjecture_record(report)
    text = render_csv([record], CONJECTURE_COLUMNS) if args.format == 'csv' else render_json([record])
    _emit(text, args.out)
    if args.db:
        asyncio.run(_store(args.db, 'explore', report.seed, {'target': report.target.value,
                                                              'family': report.family}, [record]))
    return EXIT_VIOLATION if report.violation_found else EXIT_OK


def cmd_list_checks(args, config: Config) -> int:
    definitions = CheckRegistry.definitions()
    if args.format == 'csv':
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(['check_id', 'relation', 'anchor', 'description'])
        writer.writerows([d.check_id, d.relation.value, d.anchor, d.description] for d in definitions)
        _emit(buffer.getvalue(), args.out)
    else:
        _emit(json.dumps([d.schema() for d in definitions], indent=2, ensure_ascii=False) + "\n", args.out)
    return EXIT_OK


def cmd_history(args, config: Config) -> int:
    async def load():
        store = await ResultStore(args.db)
        if args.conjectures:
            return await store.load_many('conjecture_reports', **({'target': args.target} if args.target else {}))
        return await store.load_many('check_results', **({'check_id': args.check_id} if args.check_id else {}))

    records = asyncio.run(load())
    header = CONJECTURE_COLUMNS if args.conjectures else REPORT_COLUMNS
    text = render_csv(records, header) if args.format == 'csv' else render_json(records)
    _emit(text, args.out)
    return EXIT_OK


# Parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help="root seed (default from config)")
    common.add_argument('--samples', type=int, help="Monte-Carlo samples per integral")
    common.add_argument('--order', type=int, help="deterministic quadrature order per axis")
    common.add_argument('--threads', type=int, default=1, help="worker threads; never changes results")
    common.add_argument('--format', choices=FORMATS, help="report format (default json)")
    common.add_argument('--out', help="write the report here instead of stdout")
    common.add_argument('--log-level', help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(prog='kplane', description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest='command', required=True)

    constants = commands.add_parser('constants', parents=[common], help="evaluate a sharp constant")
    constants.add_argument('kind', help=f"one of {', '.join(CONSTANT_KINDS)} or a constant tag")
    for name in ('n', 'k', 'j', 'm'):
        constants.add_argument(f'--{name}', type=int)
    for name in ('p', 'mu'):
        constants.add_argument(f'--{name}', type=float)
    constants.set_defaults(handler=cmd_constants)

    transform = commands.add_parser('transform', parents=[common], help="evaluate a transform at random planes")
    transform.add_argument('kind', choices=TRANSFORM_KINDS)
    transform.add_argument('--n', type=int, required=True)
    transform.add_argument('--k', type=int, required=True)
    transform.add_argument('--j', type=int)
    transform.add_argument('--field', help="field name or JSON descriptor")
    transform.add_argument('--planes', type=int, default=5)
    transform.add_argument('--radius', type=float, help="keep plane offsets inside this radius")
    transform.add_argument('--tensor', action='store_true', help="deterministic tensor rule instead of Monte-Carlo")
    transform.set_defaults(handler=cmd_transform)

    check = commands.add_parser('check', parents=[common], help="run checks from a file or a single check")
    check.add_argument('experiment', nargs='?', help="experiment file (schema version 1)")
    check.add_argument('--id', help="run a single registered check")
    check.add_argument('--param', action='append', help="check parameter key=value (repeatable)")
    check.add_argument('--db', help="also record results in this SQLite file")
    check.add_argument('--timing', action='store_true', help="report wall times")
    check.set_defaults(handler=cmd_check)

    explore = commands.add_parser('explore', parents=[common], help="search a family for a conjecture violation")
    explore.add_argument('--target', required=True, choices=[target.value for target in ConjectureTarget])
    explore.add_argument('--family', required=True,
                         help=f"JkLpLq: {', '.join(FamilyRegistry.names(ConjectureTarget.JK_LP_LQ))}; StarSections: "
                              f"{', '.join(FamilyRegistry.names(ConjectureTarget.STAR_SECTIONS))}")
    explore.add_argument('--n', type=int, required=True)
    explore.add_argument('--j', type=int, required=True)
    explore.add_argument('--k', type=int, required=True)
    explore.add_argument('--m', type=float, help="section dual volume order (StarSections, default k)")
    explore.add_argument('--members', type=int, help="random members before refinement")
    explore.add_argument('--refine', type=int, default=DEFAULT_REFINE, help="local refinement steps")
    explore.add_argument('--seeds', help="comma-separated star-set seeds (random_smooth)")
    explore.add_argument('--moves', help="comma-separated maps searched (scale, translation, diag)")
    explore.add_argument('--option', action='append', help="family option key=value (repeatable)")
    explore.add_argument('--db', help="also record the report in this SQLite file")
    explore.add_argument('--timing', action='store_true', help="report wall time")
    explore.set_defaults(handler=cmd_explore)

    list_checks = commands.add_parser('list-checks', parents=[common], help="registered checks and their defaults")
    list_checks.set_defaults(handler=cmd_list_checks)

    history = commands.add_parser('history', parents=[common], help="stored results")
    history.add_argument('--db', required=True)
    history.add_argument('--check-id')
    history.add_argument('--conjectures', action='store_true', help="list explorer reports instead of checks")
    history.add_argument('--target', help="filter explorer reports by target")
    history.set_defaults(handler=cmd_history)
    return parser


def main(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config(args)
        return args.handler(args, config)
    except KPlaneError as exc:
        logger.error(f"{args.command}: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # Config and the result store signal bad input with plain ValueError
        logger.error(f"{args.command}: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
