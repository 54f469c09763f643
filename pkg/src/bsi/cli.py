from typing import List, NamedTuple, Optional, Sequence
import argparse
import csv
import datetime
import hashlib
import json
import logging
import pathlib
import sys
import time
import numpy as np
from . import config
from .belief import INFINITY
from .data import PRESETS, DataView, DatasetSpec, generate as generate_data, preset, write_csv
from .elbo import ReconConfig, bpd, lm_infinity_identity
from .errors import BsiException, UsageError
from .parallel import resolve_threads
from .predictor import BackboneKind, FeatureConfig, Predictor, PredictorSpec
from .rng import Role, stream
from .sampler import SampleFormat, SamplerConfig, SamplerMode, generate, write_samples
from .schedule import PrecisionSchedule, ProposalDistribution, ScheduleKind
from . import studies
from .trainer import LrDecay, MetricsRow, TrainConfig, load_checkpoint, save_checkpoint, train

LOGGER = logging.getLogger(__name__)


class RunManifest(NamedTuple):
    subcommand: str
    config: dict
    artifacts: List[str]
    started: str
    wall_clock_seconds: float
    input_hash: str
    # resolved configuration objects of the run, by name
    details: dict

    def to_json(self) -> dict:
        return self._asdict()


def manifest_path(out: pathlib.Path) -> pathlib.Path:
    return out.with_name(out.name + '.manifest.json')


def _resolved(args: argparse.Namespace) -> dict:
    resolved = {}
    for k, v in sorted(vars(args).items()):
        if k == 'func':
            continue
        resolved[k] = str(v) if isinstance(v, pathlib.Path) else v
    return resolved


def input_hash(resolved: dict, inputs: Sequence[pathlib.Path]) -> str:
    '''
    sha256 over the resolved flags and the bytes of every input file
    '''
    h = hashlib.sha256()
    h.update(json.dumps(resolved, sort_keys=True).encode('utf-8'))
    for path in inputs:
        h.update(path.read_bytes())
    return h.hexdigest()


def write_manifest(args: argparse.Namespace, artifacts: Sequence[pathlib.Path],
                   inputs: Sequence[pathlib.Path], started: float, details: Optional[dict] = None):
    resolved = _resolved(args)
    manifest = RunManifest(
        args.command,
        resolved,
        [str(p) for p in artifacts],
        datetime.datetime.fromtimestamp(started, datetime.timezone.utc).isoformat(),
        time.time() - started,
        input_hash(resolved, inputs),
        details or {},
    )
    path = manifest_path(args.out)
    path.write_text(json.dumps(manifest.to_json(), indent=2, sort_keys=True), encoding='utf-8')
    LOGGER.info(f'write {path}')


def _csv_values(row: dict) -> dict:
    return {k: repr(v) if isinstance(v, float) else v for k, v in row.items()}


def write_rows(path: pathlib.Path, rows: List[dict], columns: Optional[Sequence[str]] = None):
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with path.open('w', newline='', encoding='utf-8') as w:
        writer = csv.DictWriter(w, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(_csv_values(row))


def _dataset(args: argparse.Namespace) -> DatasetSpec:
    return preset(args.dataset, args.dim, args.r, args.data_seed)


class Resolved(NamedTuple):
    predictor: Predictor
    lambda0: float
    lambda_m: float
    alpha_r: float
    inputs: List[pathlib.Path]

    @property
    def proposal(self) -> ProposalDistribution:
        return ProposalDistribution(self.lambda0, self.lambda_m).validate()


def resolve_predictor(args: argparse.Namespace, gamma0=None) -> Resolved:
    '''
    build the predictor of --predictor and materialize lambda0 / alpha_r on args
    '''
    match args.predictor:
        case 'ckpt':
            if args.ckpt is None:
                raise UsageError('--predictor ckpt needs --ckpt')
            checkpoint = load_checkpoint(args.ckpt)
            if args.lambda0 is None:
                args.lambda0 = checkpoint.lambda0
            if args.alpha_r is None:
                args.alpha_r = checkpoint.alpha_r
            args.dim = checkpoint.spec.dim
            return Resolved(checkpoint.predictor(use_ema=not args.raw), args.lambda0, checkpoint.lambda_m,
                            args.alpha_r, [args.ckpt])
        case 'identity' | 'bayes':
            _default_limits(args)
            lambda_m = args.lambda0 + args.alpha_m
            if args.predictor == 'identity':
                predictor = Predictor.identity(args.dim, args.lambda0, lambda_m)
            else:
                predictor = Predictor.bayes(_dataset(args).to_prior(), args.lambda0, lambda_m, gamma0)
            return Resolved(predictor, args.lambda0, lambda_m, args.alpha_r, [])
        case _:
            raise UsageError(f'unknown predictor {args.predictor}')


def _default_limits(args: argparse.Namespace):
    if args.lambda0 is None:
        args.lambda0 = config.LAMBDA0
    if args.alpha_r is None:
        args.alpha_r = config.ALPHA_R


def cmd_train(args: argparse.Namespace) -> int:
    started = time.time()
    _default_limits(args)
    dataset = _dataset(args)
    continuous, _ = generate_data(dataset, args.num_data)
    features = FeatureConfig(args.n_min, args.n_max, args.embed_dim)
    spec = PredictorSpec(BackboneKind.MLP, args.dim, args.lambda0, args.lambda0 + args.alpha_m, features,
                         args.mlp_width, args.mlp_depth)
    cfg = TrainConfig(args.batch, args.steps, args.lr, args.weight_decay, args.ema_beta,
                      args.ema_start, args.seed, args.warmup, args.log_interval, LrDecay(args.lr_decay),
                      args.ema_warmup)
    metrics_path = args.out.with_name(args.out.name + '.metrics.csv')
    with metrics_path.open('w', newline='', encoding='utf-8') as w:
        writer = csv.DictWriter(w, fieldnames=list(MetricsRow.COLUMNS))
        writer.writeheader()

        def on_metrics(row: MetricsRow):
            writer.writerow(_csv_values(row.row()))
            w.flush()

        checkpoint = train(continuous, spec, cfg, args.alpha_r, on_metrics)
    save_checkpoint(args.out, checkpoint)
    write_manifest(args, [args.out, metrics_path], [], started,
                   {'train': cfg.to_json(), 'predictor': spec.to_json()})
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    started = time.time()
    mode = SamplerMode(args.mode)
    gamma0 = None
    if mode is SamplerMode.BFN:
        if args.lambda0 is not None and args.lambda0 != 1.0:
            raise UsageError(f'--mode bfn needs --lambda0 1, got {args.lambda0}')
        args.lambda0 = 1.0
        gamma0 = INFINITY
    resolved = resolve_predictor(args, gamma0)
    schedule = PrecisionSchedule(resolved.lambda0, resolved.lambda_m - resolved.lambda0, args.k,
                                 ScheduleKind(args.schedule))
    cfg = SamplerConfig(schedule, mode, args.seed)
    if args.num < 0:
        raise UsageError(f'--num must be >= 0: {args.num}')
    samples = generate(resolved.predictor, cfg, args.num, threads=resolve_threads(args.threads))
    write_samples(args.out, samples, SampleFormat(args.format), resolved.predictor.dim)
    LOGGER.info(f'write {args.num} samples to {args.out}')
    write_manifest(args, [args.out], resolved.inputs, started, {'sampler': cfg.to_json()})
    return 0


def report_path(out: pathlib.Path) -> pathlib.Path:
    return out.with_name(out.name + '.json')


def cmd_eval(args: argparse.Namespace) -> int:
    started = time.time()
    resolved = resolve_predictor(args)
    _, levels = generate_data(_dataset(args), args.num_data)
    report = bpd(resolved.predictor, levels, resolved.proposal, ReconConfig(resolved.alpha_r, args.r),
                 args.mc_measure, args.mc_recon, args.seed, threads=resolve_threads(args.threads))
    write_rows(args.out, [report.row()], report.COLUMNS)
    json_path = report_path(args.out)
    json_path.write_text(json.dumps(report.to_json(), indent=2), encoding='utf-8')
    write_manifest(args, [args.out, json_path], resolved.inputs, started, {'report': report.to_json()})
    return 0


def _study_data(args: argparse.Namespace) -> np.ndarray:
    '''
    raw unit-variance draws for standard-normal, the continuous view otherwise
    '''
    if args.dataset == 'standard-normal':
        return stream(args.data_seed, Role.DATA).standard_normal((args.num_data, args.dim))
    continuous, _ = generate_data(_dataset(args), args.num_data)
    return continuous


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise UsageError(f'expected comma separated numbers: {text}')


def cmd_study(args: argparse.Namespace) -> int:
    started = time.time()
    inputs: List[pathlib.Path] = []
    match args.study:
        case 'convergence':
            resolved = resolve_predictor(args)
            inputs = resolved.inputs
            ks = [int(k) for k in _floats(args.ks)]
            rows = studies.convergence(resolved.predictor, _study_data(args), ks, resolved.proposal,
                                       args.mc, args.mc_infinity, args.seed)
            if args.predictor == 'identity':
                reference = lm_infinity_identity(resolved.proposal, args.dim)
                for row in rows:
                    row['lm_identity'] = reference
        case 'variance':
            _default_limits(args)
            proposal = ProposalDistribution(args.lambda0, args.lambda0 + args.alpha_m).validate()
            rows = studies.variance(proposal, args.dim, args.mc, args.seed, args.points)
        case 'h-curve':
            resolved = resolve_predictor(args)
            inputs = resolved.inputs
            rows = studies.h_curve(resolved.predictor, _study_data(args), resolved.proposal, args.points,
                                   args.seed, identity_reference=args.predictor == 'identity')
        case 'lambda0-sweep':
            _default_limits(args)
            rows = studies.lambda0_sweep(_dataset(args), _floats(args.lambda0s), args.alpha_m, args.k,
                                         args.num, args.num_data, ReconConfig(args.alpha_r, args.r),
                                         args.seed, resolve_threads(args.threads))
        case 'noise-levels':
            rows = studies.noise_levels(np.linspace(0.0, 1.0, args.points), args.alpha_m)
        case _:
            raise UsageError(f'unknown study {args.study}')
    write_rows(args.out, rows)
    write_manifest(args, [args.out], inputs, started)
    return 0


def cmd_data(args: argparse.Namespace) -> int:
    started = time.time()
    continuous, levels = generate_data(_dataset(args), args.num_data)
    view = DataView(args.view)
    write_csv(args.out, levels if view is DataView.LEVELS else continuous, view, args.dim)
    write_manifest(args, [args.out], [], started)
    return 0


def _add_dataset(parser: argparse.ArgumentParser, num_data: int):
    parser.add_argument('--dataset', choices=PRESETS, default='two-atom')
    parser.add_argument('--dim', type=int, default=1)
    parser.add_argument('--r', type=int, default=config.LEVELS, help='quantization levels')
    parser.add_argument('--num-data', '--count', type=int, default=num_data)
    parser.add_argument('--data-seed', type=int, default=0)


def _add_limits(parser: argparse.ArgumentParser):
    parser.add_argument('--lambda0', type=float)
    parser.add_argument('--alpha-m', type=float, default=config.ALPHA_M)
    parser.add_argument('--alpha-r', type=float)


def _add_predictor(parser: argparse.ArgumentParser, default: str):
    parser.add_argument('--predictor', choices=('identity', 'bayes', 'ckpt'), default=default)
    parser.add_argument('--ckpt', type=pathlib.Path)
    parser.add_argument('--raw', action='store_true', help='use raw parameters instead of the EMA')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action='store_true')
    common.add_argument('-q', '--quiet', action='store_true')
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--threads', type=int)
    common.add_argument('--out', type=pathlib.Path, required=True)

    parser = argparse.ArgumentParser(prog='bsi', description='Bayesian sample inference')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('train', parents=[common])
    _add_dataset(p, 1024)
    _add_limits(p)
    p.add_argument('--steps', type=int, default=1000)
    p.add_argument('--batch', type=int, default=config.BATCH_SIZE)
    p.add_argument('--lr', type=float, default=config.LEARNING_RATE)
    p.add_argument('--weight-decay', type=float, default=config.WEIGHT_DECAY)
    p.add_argument('--ema-beta', type=float, default=config.EMA_BETA)
    p.add_argument('--ema-start', type=int, default=config.EMA_START_STEP)
    p.add_argument('--warmup', type=int, default=0)
    p.add_argument('--lr-decay', choices=[d.value for d in LrDecay], default='constant')
    p.add_argument('--no-ema-warmup', dest='ema_warmup', action='store_false')
    p.add_argument('--log-interval', type=int, default=100)
    p.add_argument('--mlp-width', type=int, default=64)
    p.add_argument('--mlp-depth', type=int, default=2)
    p.add_argument('--n-min', type=int, default=config.N_MIN)
    p.add_argument('--n-max', type=int, default=config.N_MAX)
    p.add_argument('--embed-dim', type=int, default=config.EMBED_DIM)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('sample', parents=[common])
    _add_dataset(p, 1024)
    _add_limits(p)
    _add_predictor(p, 'ckpt')
    p.add_argument('--k', type=int, default=config.SAMPLE_STEPS)
    p.add_argument('--num', type=int, default=1000)
    p.add_argument('--mode', choices=[m.value for m in SamplerMode], default='bsi')
    p.add_argument('--schedule', choices=[k.value for k in ScheduleKind], default='log')
    p.add_argument('--format', choices=[f.value for f in SampleFormat], default='csv')
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser('eval', parents=[common])
    _add_dataset(p, 1000)
    _add_limits(p)
    _add_predictor(p, 'ckpt')
    p.add_argument('--mc-measure', type=int, default=config.MC_MEASURE)
    p.add_argument('--mc-recon', type=int, default=config.MC_RECON)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser('study', parents=[common])
    p.add_argument('study', choices=('convergence', 'variance', 'h-curve', 'lambda0-sweep', 'noise-levels'))
    _add_dataset(p, 1000)
    _add_limits(p)
    _add_predictor(p, 'identity')
    p.add_argument('--ks', default='10,100,1000,10000')
    p.add_argument('--mc', type=int, default=1000)
    p.add_argument('--mc-infinity', type=int, default=100000)
    p.add_argument('--points', type=int, default=20)
    p.add_argument('--lambda0s', default='0.0001,0.001,0.01,0.1,1')
    p.add_argument('--k', type=int, default=256)
    p.add_argument('--num', type=int, default=1000)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser('data', parents=[common])
    _add_dataset(p, 1000)
    p.add_argument('--view', choices=[v.value for v in DataView], default='levels')
    p.set_defaults(func=cmd_data)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return int(ex.code or 0)

    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')

    try:
        return args.func(args)
    except UsageError as ex:
        parser.print_usage(sys.stderr)
        print(f'bsi: error: {ex}', file=sys.stderr)
        return 2
    except (BsiException, OSError) as ex:
        LOGGER.error(ex)
        print(f'bsi: {ex}', file=sys.stderr)
        return 1
