import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .compression import compress_dataset
from .config import FINAL_STRATEGIES, load_config
from .logging import logger
from .manifest import load_dataset, load_packets, save_dataset, save_packets
from .preprocess import denoise_dataset, preprocess_dataset, require_unit_grid
from .report import eq_curve_table, load_report, render_report, write_report, write_tables
from .selection import run_pipeline, select
from .synth import PlantSpec, generate
from .utils import ConfigError, DataError, PipelineError, UsageError, WavecartError, atomic_write_text, load_common_options

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class ArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting, so main() owns the exit code"""
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _require_out(args):
    if args.out is None:
        raise UsageError(f"{args.command}: --out is required")
    return Path(args.out)


def _write_json(path, data):
    return atomic_write_text(path, json.dumps(data, indent=2) + "\n")


def cmd_synth(args, cfg):
    out = _require_out(args)
    spec = PlantSpec(n=args.n, effect_size=args.effect_size, noise_sigma=args.noise_sigma)
    dataset, truth = generate(spec, cfg.seed, cfg.threads)
    manifest = save_dataset(dataset, out)
    _write_json(out / "ground_truth.json", truth.to_dict())
    logger.print(f"Wrote {dataset.n} trials to {manifest}", force=True)


def cmd_preprocess(args, cfg):
    out = _require_out(args)
    dataset, audit = preprocess_dataset(load_dataset(args.manifest), cfg)
    manifest = save_dataset(dataset, out)
    _write_json(out / "preprocess_audit.json", audit.to_dict())
    logger.print(f"Wrote preprocessed dataset to {manifest}", force=True)


def cmd_denoise(args, cfg):
    out = _require_out(args)
    manifest = save_dataset(denoise_dataset(load_dataset(args.manifest), cfg), out)
    logger.print(f"Wrote denoised dataset to {manifest}", force=True)


def cmd_compress(args, cfg):
    out = _require_out(args)
    dataset = load_dataset(args.manifest)
    require_unit_grid(dataset, cfg.m)
    packets, compression = compress_dataset(dataset, cfg)
    manifest = save_packets(packets, dataset.labels, dataset.class_count, dataset.variable_names, out / "packets")
    _write_json(out / "compression.json", compression.to_dict())
    write_tables({"eq_curves": eq_curve_table(compression.to_dict())}, out, args.format)
    logger.print(f"Wrote {compression.total_coefficients} coefficients in {len(packets)} packets to {manifest}",
                 force=True)


def cmd_select(args, cfg):
    out = _require_out(args)
    packets, labels, class_count, _ = load_packets(args.packets)
    report = select(packets, labels, class_count, cfg)
    write_report(report, out, args.format)
    logger.print(f"Final criteria: {' '.join(report.final_criteria) or '(none)'}", force=True)


def cmd_run(args, cfg):
    out = _require_out(args)
    report = run_pipeline(load_dataset(args.manifest), cfg)
    write_report(report, out, args.format)
    logger.print(f"Final criteria: {' '.join(report.final_criteria) or '(none)'}", force=True)


def cmd_report(args, cfg):
    print(render_report(load_report(args.report), args.tablefmt), end="")


def _add_selection_options(parser):
    parser.add_argument("--strategy", default=None, choices=FINAL_STRATEGIES, help="Final criteria strategy (overrides config)")
    parser.add_argument("--top-k", dest="top_k", default=None, type=int, help="Criteria kept by the top_k strategy (overrides config)")


def build_parser():
    parser = ArgumentParser(prog="wavecart", description="Wavelet compression and cost-sensitive CART selection of functional criteria")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("synth", help="Generate the synthetic benchmark with planted variables")
    load_common_options(p)
    p.add_argument("--n", default=114, type=int, help="Number of trials")
    p.add_argument("--effect-size", default=1.0, type=float, help="Size of the planted class effects")
    p.add_argument("--noise-sigma", default=0.3, type=float, help="White noise level")
    p.set_defaults(func=cmd_synth)

    for name, func, help_ in (("preprocess", cmd_preprocess, "Truncate, denoise, resample and normalise a raw dataset"),
                              ("denoise", cmd_denoise, "Apply only the wavelet denoising stage"),
                              ("compress", cmd_compress, "Choose levels and build coefficient packets from a preprocessed dataset"),
                              ("run", cmd_run, "Run preprocessing, compression and selection end to end")):
        p = sub.add_parser(name, help=help_)
        load_common_options(p)
        p.add_argument("--manifest", required=True, help="Dataset manifest.json")
        if name == "run":
            _add_selection_options(p)
        p.set_defaults(func=func)

    p = sub.add_parser("select", help="Run the five selection phases on coefficient packets")
    load_common_options(p)
    p.add_argument("--packets", required=True, help="Packet manifest.json (or its directory) written by compress")
    _add_selection_options(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("report", help="Print the tables of a report.json")
    load_common_options(p)
    p.add_argument("--report", required=True, help="report.json or the directory holding it")
    p.add_argument("--tablefmt", default="simple", help="tabulate table format")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        logger.error_message(e.message)
        return EXIT_USAGE
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else EXIT_OK

    logger.set(quiet=args.quiet, debug=args.debug)
    logger.warnings = 0
    start = time.time()
    try:
        cfg = load_config(args.config, args)
        args.func(args, cfg)
    except UsageError as e:
        logger.error_message(e.message)
        return EXIT_USAGE
    except (DataError, ConfigError) as e:
        logger.error_message(e.message)
        return EXIT_DATA
    except PipelineError as e:
        logger.error_message(e.message)
        return EXIT_DATA if e.is_data_error else EXIT_INTERNAL
    except WavecartError as e:
        logger.error_message(e.message)
        return EXIT_DATA
    except Exception as e:
        logger.error_message(f"internal error: {type(e).__name__}: {e}")
        return EXIT_INTERNAL
    finally:
        logger.stop_progress()
    if logger.warnings:
        logger.print(f"{logger.warnings} warning(s) in {args.command}, see above")
    logger.debug_message(f"{args.command} finished in {time.time() - start:.1f}s")
    return EXIT_OK
