"""Command-line entry point: ``scamap synth|attack|tvla|mi|gridsearch|report``.

Exit codes: 0 success, 1 usage, 2 validation/config, 3 equivalence failure,
4 infeasible mapping.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import flow
from .assignment import MODES, InfeasibleAssignmentError
from .equivalence import EquivalenceError
from .library import LibraryError
from .mapper import NoFeasibleCandidateError
from .netlist import NetlistError
from .powersim import PowerSimError
from .sca import StatisticError
from .vulnerability import AnnotationError

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_EQUIVALENCE, EXIT_INFEASIBLE = 0, 1, 2, 3, 4

log = logging.getLogger("scamap")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="scamap", description="Side-channel-aware technology mapping.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, need_config=True):
        sp.add_argument("--config", required=need_config, help="run config JSON (path or bundled name)")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--seed", type=int, help="override the config seed")

    sp = sub.add_parser("synth", help="map the design (PoSyn and conventional) and verify equivalence")
    common(sp)
    sp.add_argument("--mode", choices=MODES)
    for name, helptext in (("attack", "CPA/DPA success rates over repeated attempts"),
                           ("tvla", "fixed-vs-random Welch t-test")):
        sp = sub.add_parser(name, help=helptext)
        common(sp, need_config=False)
        sp.add_argument("--design", choices=flow.DESIGNS, help="default: both")
        sp.add_argument("--traces", type=int, help="traces per attempt / per TVLA population")
        if name == "attack":
            sp.add_argument("--attempts", type=int)
    sp = sub.add_parser("mi", help="conditional mutual information of key and trace energy")
    common(sp, need_config=False)
    sp.add_argument("--bins", type=int)
    sp = sub.add_parser("gridsearch", help="sweep cost weights by CPA success rate")
    common(sp)
    sp.add_argument("--mode", choices=MODES)
    sp.add_argument("--attempts", type=int)
    sp = sub.add_parser("report", help="collect the run's results into report.json / report.txt")
    common(sp, need_config=False)
    return p


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    if args.config:
        return flow.load_config(args.config).output_dir
    raise flow.ConfigError("give --out or --config")


def _load_run(args) -> flow.Run:
    return flow.load_run(_out_dir(args), seed=args.seed)


def _designs(args):
    return (args.design,) if getattr(args, "design", None) else flow.DESIGNS


def _write(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s", path)


def cmd_synth(args) -> int:
    cfg = flow.load_config(args.config).with_overrides(seed=args.seed, mode=args.mode, out=args.out)
    res = flow.run_synth(cfg)
    s = res.summary()
    print(f"synth {cfg.name}: {s['vulnerable_blocks']}/{s['blocks']} vulnerable blocks, mode {s['mode']}, "
          f"cost {s['total_cost']:.4g}")
    for d in flow.DESIGNS:
        print(f"  {d}: {s['instances'][d]} instances, area {s['area'][d]:.4g}, "
              f"equivalent {s['equivalent'][d]}")
    print(f"  netlist change {s['netlist_change_percent']:.1f}%  -> {cfg.output_dir}")
    return EXIT_OK


def cmd_attack(args) -> int:
    run = _load_run(args)
    for d in _designs(args):
        res = flow.attack_protocol(run.mapped[d], run.lib, run.cfg, attempts=args.attempts,
                                   num_traces=args.traces, trace_path=run.out / f"traces_{d}.psyn")
        _write(run.out / f"attack_{d}.json", res)
        print(f"attack {d}: CPA {res['cpa_success_rate']:.2f}, DPA {res['dpa_success_rate']:.2f} "
              f"({res['attempts']} attempts x {res['num_traces']} traces)")
    return EXIT_OK


def cmd_tvla(args) -> int:
    run = _load_run(args)
    for d in _designs(args):
        res = flow.tvla_protocol(run.mapped[d], run.lib, run.cfg, num_traces=args.traces)
        _write(run.out / f"tvla_{d}.json", res.to_dict())
        lines = ["sample,t"] + [f"{i},{'' if t is None else repr(t)}" for i, t in enumerate(res.t_values)]
        (run.out / f"tvla_{d}_t.csv").write_text("\n".join(lines) + "\n")
        print(f"tvla {d}: max |t| {res.max_abs_t:.3f}, {res.exceed_count} samples above {res.threshold}")
    return EXIT_OK


def cmd_mi(args) -> int:
    run = _load_run(args)
    res = flow.compare_mi(run, bins=args.bins)
    _write(run.out / "mi.json", res)
    for d in flow.DESIGNS:
        print(f"mi {d}: {res[d]['mi_bits']:.4f} bits")
    return EXIT_OK


def cmd_gridsearch(args) -> int:
    cfg = flow.load_config(args.config).with_overrides(seed=args.seed, mode=args.mode, out=args.out)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = flow.gridsearch(cfg, attempts=args.attempts)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "gridsearch.json", res)
    b = res["best"]
    print(f"gridsearch: best alpha={b['alpha']} beta={b['beta']} gamma={b['gamma']} "
          f"({res['distinct_netlists']} distinct netlists)")
    return EXIT_OK


def cmd_report(args) -> int:
    out = _out_dir(args)
    rep = flow.collect_report(out)
    _write(out / "report.json", rep)
    text = flow.format_report(rep)
    (out / "report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "attack": cmd_attack, "tvla": cmd_tvla, "mi": cmd_mi,
            "gridsearch": cmd_gridsearch, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except flow.EquivalenceFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EQUIVALENCE
    except flow.StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (NoFeasibleCandidateError, InfeasibleAssignmentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (flow.ConfigError, LibraryError, NetlistError, AnnotationError, EquivalenceError, PowerSimError,
            StatisticError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
