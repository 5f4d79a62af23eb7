"""Command-line entry point: ``relaynet <command> ...``

Results go to stdout (or the file named by --csv/--out); logs go to stderr.
Exit status is 0 on success, 1 when a verification finds a violation and 2 on
bad input.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from experiments.ensemble import (
    MIMO_BOUNDS,
    EnsembleSpec,
    layer_pairs,
    run_mimo_verify,
    run_prop1,
    run_prop2,
    run_verify,
    summary_dict,
    to_csv,
    to_json,
    trial_record,
)
from relaynet.constructions import (
    construct_general_tight,
    construct_layered_tight,
    load_tight_example,
    save_tight_example,
    verify_tight_example,
)
from relaynet.cutset import approx_capacity
from relaynet.mimo_select import load_channel, select_subchannel
from relaynet.network_model import read_network
from relaynet.routing import best_route
from utils.error_handler import RelayNetError, ValidationError, exit_code_for, logger
from utils.validation_constants import MAX_EXHAUSTIVE_RELAYS


def _emit(text: str, path: Optional[str] = None) -> None:
    if path:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info(f"Wrote {path}")
    else:
        sys.stdout.write(text if text.endswith('\n') else text + '\n')


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise ValidationError(f"{args.command} {getattr(args, 'target', '')}: missing {', '.join(missing)}".strip())


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_capacity(args) -> int:
    net = read_network(args.net)
    capacity, cut = approx_capacity(net, max_relays=args.max_relays, workers=args.workers)
    if args.json:
        _emit(json.dumps({'approx_capacity_bits': capacity, 'min_cut': cut.nodes()}))
    else:
        _emit(f"C-bar: {capacity:.12g} bits\nmin cut: {cut.nodes()}")
    return 0


def cmd_route(args) -> int:
    net = read_network(args.net)
    path, bits = best_route(net)
    _emit(f"route: {path}\nbottleneck: {bits:.12g} bits")
    return 0


def cmd_ratio(args) -> int:
    record = trial_record(read_network(args.net), max_relays=args.max_relays)
    _emit(f"best route: {record.best_route_bits:.12g} bits\n"
          f"C-bar: {record.approx_capacity_bits:.12g} bits\n"
          f"ratio: {record.fraction_achieved:.12g}\n"
          f"guaranteed: {record.theorem_bound_bits:.12g} bits\n"
          f"satisfied: {record.satisfied}")
    return 0 if record.satisfied else 1


def cmd_construct(args) -> int:
    if args.family == 'general':
        _require(args, 'n', 'a')
        example = construct_general_tight(args.n, args.a)
    else:
        _require(args, 'l', 'nl', 'w')
        example = construct_layered_tight(args.l, args.nl, args.w)
    _emit(save_tight_example(example).decode('utf-8'), args.out)
    return 0


def cmd_verify_example(args) -> int:
    with open(args.net, 'rb') as f:
        example = load_tight_example(f.read())
    report = verify_tight_example(example, max_relays=args.max_relays, workers=args.workers)
    _emit(f"{example.family}: C-bar {report.approx_capacity_bits:.12g} bits, "
          f"best route {report.best_route_bits:.12g} bits ({report.route}); all claims hold")
    return 0


def _verify_summary(args):
    target = args.target
    if target == 'thm1':
        _require(args, 'n')
        spec = EnsembleSpec(num_relays=args.n, trials=args.trials, seed=args.seed, fading=args.fading,
                            scale=args.scale, snr_db=args.snr_db)
        return run_verify(spec, max_relays=args.max_relays, workers=args.workers)
    if target == 'thm2':
        _require(args, 'l', 'nl')
        spec = EnsembleSpec.layered(args.l, args.nl, trials=args.trials, seed=args.seed, fading=args.fading,
                                    scale=args.scale, snr_db=args.snr_db)
        return run_verify(spec, max_relays=args.max_relays, workers=args.workers)
    if target in MIMO_BOUNDS:
        _require(args, 'nt', 'nr')
        return run_mimo_verify(args.nt, args.nr, args.trials, args.seed, bound=target, workers=args.workers)
    if target == 'prop1':
        if (args.l is None) != (args.nl is None):
            raise ValidationError("verify prop1: give both --l and --nl, or neither")
        pairs = [(args.l, args.nl)] if args.l is not None else layer_pairs(args.max_product)
        return run_prop1(pairs, max_relays=args.max_relays)
    _require(args, 'n')
    return run_prop2(args.n, args.trials, args.seed, workers=args.workers)


def cmd_verify(args) -> int:
    summary = _verify_summary(args)
    _emit(to_json(summary) if args.json else to_csv(summary), args.csv)
    logger.info(f"verify {args.target}: {json.dumps(summary_dict(summary))}")
    return 1 if summary.violations else 0


def cmd_mimo_select(args) -> int:
    with open(args.channel, 'rb') as f:
        channel = load_channel(f.read())
    if (channel.cols, channel.rows) != (args.nt, args.nr):
        raise ValidationError(f"channel file is {channel.cols}x{channel.rows} (n_t x n_r), "
                              f"expected {args.nt}x{args.nr}")
    selection = select_subchannel(channel, args.kt, args.kr, method=args.method)
    _emit(f"tx: {list(selection.tx_indices)}\nrx: {list(selection.rx_indices)}\n"
          f"capacity: {selection.capacity_bits:.12g} bits")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_search_options(parser):
    parser.add_argument('--max-relays', type=int, default=MAX_EXHAUSTIVE_RELAYS,
                        help='cap on exhaustive cut enumeration (default %(default)s)')
    parser.add_argument('--workers', type=int, default=1, help='worker threads (default 1)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='relaynet', description='Relay network capacity and route tools')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('capacity', help='approximate capacity and the minimum cut')
    p.add_argument('--net', required=True)
    p.add_argument('--json', action='store_true')
    _add_search_options(p)
    p.set_defaults(func=cmd_capacity)

    p = commands.add_parser('route', help='best single route and its bottleneck')
    p.add_argument('--net', required=True)
    p.set_defaults(func=cmd_route)

    p = commands.add_parser('ratio', help='best route against C-bar and the guarantee')
    p.add_argument('--net', required=True)
    _add_search_options(p)
    p.set_defaults(func=cmd_ratio)

    p = commands.add_parser('construct', help='write a tight example network')
    p.add_argument('family', choices=['general', 'layered'])
    p.add_argument('--n', type=int)
    p.add_argument('--a', type=float)
    p.add_argument('--l', type=int)
    p.add_argument('--nl', type=int)
    p.add_argument('--w', type=float)
    p.add_argument('--out')
    p.set_defaults(func=cmd_construct)

    p = commands.add_parser('verify-example', help='re-verify a constructed example file')
    p.add_argument('--net', required=True)
    _add_search_options(p)
    p.set_defaults(func=cmd_verify_example)

    p = commands.add_parser('verify', help='run a verification ensemble')
    p.add_argument('target', choices=['thm1', 'thm2', *MIMO_BOUNDS, 'prop1', 'prop2'])
    p.add_argument('--n', type=int)
    p.add_argument('--l', type=int)
    p.add_argument('--nl', type=int)
    p.add_argument('--nt', type=int)
    p.add_argument('--nr', type=int)
    p.add_argument('--trials', type=int, default=100)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--fading', choices=['rayleigh', 'fixed_snr'], default='rayleigh')
    p.add_argument('--scale', type=float, default=1.0, help='Rayleigh scale')
    p.add_argument('--snr-db', type=float, default=0.0, help='fixed_snr link SNR in dB')
    p.add_argument('--max-product', type=int, default=10, help='prop1: largest L*N_L')
    p.add_argument('--csv', help='write records to this file instead of stdout')
    p.add_argument('--json', action='store_true', help='emit JSON records instead of CSV')
    _add_search_options(p)
    p.set_defaults(func=cmd_verify)

    p = commands.add_parser('mimo-select', help='best or greedy k_t x k_r subchannel')
    p.add_argument('--nt', type=int, required=True)
    p.add_argument('--nr', type=int, required=True)
    p.add_argument('--kt', type=int, required=True)
    p.add_argument('--kr', type=int, required=True)
    method = p.add_mutually_exclusive_group()
    method.add_argument('--bruteforce', dest='method', action='store_const', const='bruteforce')
    method.add_argument('--greedy', dest='method', action='store_const', const='greedy')
    p.add_argument('--channel', required=True)
    p.set_defaults(func=cmd_mimo_select, method='bruteforce')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logger.setLevel(logging.DEBUG)
    elif args.quiet:
        logger.setLevel(logging.WARNING)
    else:
        logger.setLevel(logging.INFO)
    try:
        return args.func(args)
    except (RelayNetError, ValueError, OSError) as e:
        logger.error(f"Error in {args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)


def run() -> None:
    sys.exit(main())


if __name__ == '__main__':
    run()
