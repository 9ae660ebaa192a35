import argparse
import sys
from typing import Any, Dict, List, Optional

from modules.experiments.commands import (cmd_add_noise, cmd_denoise, cmd_sweep, cmd_ablation, cmd_power,
                                          cmd_trace, cmd_quantize)
from modules.experiments.config import load_run_params
from modules.seconv.data_classes import ModelImpl, WeightMode, ReportFormat, PgmFormat, MeanBasis, RunParams
from modules.utils.cli_manager import str2bool, str2floats, str2ints
from modules.utils.errors import MemSeConvError
from modules.utils.logger import get_logger, set_verbosity

logger = get_logger()


class App:
    def __init__(self, args):
        self.args = args
        self.params = load_run_params(self.args.config, self.create_overrides())

    def create_overrides(self) -> Dict[str, Any]:
        """Command-line flags in the layout of the YAML config; unset flags are None and leave it alone."""
        args = self.args
        stages = None
        if args.stages:
            stages = [{"size": s, "kernel": f"ones{s}"} for s in args.stages]
        return {
            "noise": {"density": args.density, "seed": args.seed, "salt_fraction": args.salt_fraction},
            "device": {"r_on": args.r_on, "r_off": args.r_off, "v_th": args.v_th, "beta": args.beta, "dt": args.dt},
            "circuit": {
                "weight_mode": args.weight_mode,
                "workers": args.workers,
                "conductance_sigma": args.conductance_sigma,
            },
            "stages": stages,
            "run": {
                "input": args.input,
                "weights": args.kernel,
                "output_dir": args.out,
                "model": args.model,
                "quantize": args.quantize,
                "report_format": args.format,
                "pgm_format": args.pgm_format,
                "crop_size": args.crop,
                "crop_policy": "random" if args.random_crop else None,
            },
            "power": {"mean_basis": args.mean_basis},
            "experiments": {
                "densities": getattr(args, "densities", None),
                "models": getattr(args, "models", None),
                "image_count": getattr(args, "images", None),
                "image_size": getattr(args, "image_size", None),
            },
        }

    def launch(self) -> Dict[str, Any]:
        command = self.args.command
        params: RunParams = self.params
        logger.info("Running %s (model %s, plan %s)", command, ModelImpl(params.model).value,
                    params.stages.describe())
        if command == "add-noise":
            return cmd_add_noise(params)
        if command == "denoise":
            return cmd_denoise(params, self.args.provenance, self.args.reference)
        if command == "sweep":
            return cmd_sweep(params)
        if command in ("ablation-fig7", "ablation"):
            return cmd_ablation(params)
        if command == "power":
            return cmd_power(params)
        if command == "trace":
            return cmd_trace(params, self.args.tensor)
        return cmd_quantize(params, self.args.weights)


def _choices(enum_cls) -> List[str]:
    return [member.value for member in enum_cls]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default=None,
                        help='YAML config path (default: $MEMSECONV_CONFIG, else configs/default_parameters.yaml)')
    common.add_argument('--input', type=str, default=None, help='Input PGM image or tensor file')
    common.add_argument('--out', type=str, default=None, help='Directory path of the outputs')
    common.add_argument('--model', type=str, default=None, choices=_choices(ModelImpl), help='Restoration model')
    common.add_argument('--density', type=float, default=None, help='Salt-and-pepper noise density D')
    common.add_argument('--salt_fraction', '--salt-fraction', type=float, default=None,
                        help='Share of corrupted pixels that become salt')
    common.add_argument('--seed', type=int, default=None, help='Noise seed')
    common.add_argument('--kernel', type=str, default=None,
                        help='Fixture name (ones3, fixture5, cross3, ...) or weight file used by every stage')
    common.add_argument('--stages', type=str2ints, default=None, help='Comma separated stage sizes, e.g. 3,5,7')
    common.add_argument('--weight-mode', '--weight_mode', dest='weight_mode', type=str, default=None,
                        choices=_choices(WeightMode), help='Conductance pairs or single memristors')
    common.add_argument('--quantize', type=str2bool, default=None, nargs='?', const=True,
                        help='Ternarize full-precision weights for the ternary models')
    common.add_argument('--format', type=str, default=None, choices=_choices(ReportFormat), help='Report format')
    common.add_argument('--pgm-format', '--pgm_format', dest='pgm_format', type=str, default=None,
                        choices=_choices(PgmFormat), help='PGM variant of written images')
    common.add_argument('--crop', type=int, default=None, help='Square crop size applied to input images')
    common.add_argument('--random-crop', '--random_crop', dest='random_crop', type=str2bool, default=False,
                        nargs='?', const=True, help='Seeded random crop instead of a center crop')
    common.add_argument('--workers', type=int, default=None, help='Row bands evaluated concurrently')
    common.add_argument('--conductance-sigma', '--conductance_sigma', dest='conductance_sigma', type=float,
                        default=None, help='Relative std-dev of programmed conductances')
    common.add_argument('--mean-basis', '--mean_basis', dest='mean_basis', type=str, default=None,
                        choices=_choices(MeanBasis), help='Power means from the printed column or the model cells')
    common.add_argument('--r-on', '--r_on', dest='r_on', type=float, default=None, help='LRS resistance, ohms')
    common.add_argument('--r-off', '--r_off', dest='r_off', type=float, default=None, help='HRS resistance, ohms')
    common.add_argument('--v-th', '--v_th', dest='v_th', type=float, default=None, help='Threshold voltage')
    common.add_argument('--beta', type=float, default=None, help='Above-threshold change rate')
    common.add_argument('--dt', type=float, default=None, help='Euler time step, seconds')
    common.add_argument('--verbose', type=str2bool, default=False, nargs='?', const=True, help='Debug logging')

    parser = argparse.ArgumentParser(description="Memristive selective-convolution denoising simulator")
    subparsers = parser.add_subparsers(dest="command", required=True)

    subparsers.add_parser("add-noise", parents=[common], help="Corrupt an image with salt-and-pepper noise")

    denoise = subparsers.add_parser("denoise", parents=[common], help="Restore one image")
    denoise.add_argument('--provenance', type=str, default=None, help='Provenance JSON written by add-noise')
    denoise.add_argument('--reference', type=str, default=None,
                         help='Clean reference; the input is then taken as already noisy')

    sweep = subparsers.add_parser("sweep", parents=[common], help="Models against noise densities")
    sweep.add_argument('--densities', type=str2floats, default=None, help='Comma separated densities')
    sweep.add_argument('--models', type=lambda v: [m.strip() for m in v.split(",") if m.strip()], default=None,
                       help='Comma separated models')
    sweep.add_argument('--images', type=int, default=None, help='Corpus images per cell')
    sweep.add_argument('--image-size', '--image_size', dest='image_size', type=int, default=None,
                       help='Side of corpus images')

    ablation = subparsers.add_parser("ablation-fig7", aliases=["ablation"], parents=[common],
                                     help="Differential pairs against single memristors")
    ablation.add_argument('--images', type=int, default=None, help='Corpus images')
    ablation.add_argument('--image-size', '--image_size', dest='image_size', type=int, default=None,
                          help='Side of corpus images')

    subparsers.add_parser("power", parents=[common], help="Per-input and per-image power tables")

    trace = subparsers.add_parser("trace", parents=[common], help="Walk one small tensor through theory and circuit")
    trace.add_argument('--tensor', type=str, default=None, help='JSON or PGM tensor (defaults to --input)')

    quantize = subparsers.add_parser("quantize", parents=[common], help="Ternarize a weight file")
    quantize.add_argument('--weights', type=str, default=None, help='Full-precision weight file')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    set_verbosity(args.verbose)
    try:
        App(args).launch()
    except MemSeConvError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
