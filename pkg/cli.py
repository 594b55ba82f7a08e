# Import required modules
import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from artifacts.report_writer import write_defect, write_estimates, write_study, write_tensor
from artifacts.vtk_io import read_cell_field, write_scalar_field, write_unfolded
from cell.cell_problem_manager import CellProblemManager, richardson_extrapolate
from errors import ConfigError, HomogenizationError, NumericError
from fem.cg_solver import SolverConfig
from homog.sources import source_function
from homog.study_manager import error_study
from mesh.cell_grid import build_cell_grid
from mesh.coefficients import ellipticity_range
from mesh.domain_grid import build_domain_grid, named_mask
from mesh.fields import ScalarField, interpolate
from periodize.periodization import defect_summary
from settings.config_loader import RunConfig, env_log_level, env_out_dir, env_workers, load_config
from unfold.estimates_manager import EstimatesManager
from unfold.unfolding import unfold

logger = logging.getLogger("homogenization")

EXIT_OK = 0
EXIT_ACCEPTANCE_FAILED = 1
EXIT_NUMERIC = 2
EXIT_CONFIG = 3

SUBCOMMANDS = ("correctors", "study", "defect", "twoscale")


class CommandParser(argparse.ArgumentParser):
    """
    Argument parser whose usage errors surface as ConfigError instead of exiting with 2.
    """

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise ConfigError("argv", message)


def build_parser() -> CommandParser:
    parser = CommandParser(prog="cli.py", description="Periodic unfolding homogenization toolkit")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", dest="config", type=str, help="Path to the JSON run configuration")
    parser.add_argument("--out", dest="out", type=str, default="out", help="Output directory")
    parser.add_argument("--workers", dest="workers", type=int, help="Worker pool size")
    parser.add_argument("--seed", dest="seed", type=int, help="Seed overriding the config")
    parser.add_argument("--serial", action="store_true", help="Run everything in one process")
    parser.add_argument("--field", dest="field", type=str, help="VTK cell field dump (defect)")
    return parser


def _workers(args: argparse.Namespace) -> int:
    if args.serial:
        return 1
    workers = args.workers if args.workers is not None else env_workers()
    if workers is not None and workers < 1:
        raise ConfigError("--workers", f"must be at least 1, got {workers}")
    return workers or 1


def _require_config(args: argparse.Namespace) -> RunConfig:
    if not args.config:
        raise ConfigError("--config", f"the {args.subcommand} subcommand needs a config file")
    return load_config(args.config).with_seed(args.seed)


def run_correctors(config: RunConfig, out_dir: str, workers: int) -> int:
    spec = config.problem_spec()
    coefficient = spec.coefficient_field()
    grid = build_cell_grid(spec.dimension, spec.cell_resolution)
    manager = CellProblemManager(coefficient, grid, spec.solver)
    correctors = manager.solve_all(workers)
    tensor = manager.homogenized_tensor(correctors)
    for direction, corrector in enumerate(correctors.correctors):
        write_scalar_field(os.path.join(out_dir, f"chi_{direction + 1}.vtk"), corrector, f"chi_{direction + 1}")

    harmonic, arithmetic = manager.voigt_reuss_bounds()
    lower, upper = ellipticity_range(coefficient)
    extras = {
        "coefficient": config.data["coefficient"],
        "m": spec.cell_resolution,
        "iterations": list(correctors.iterations),
        "residuals": list(correctors.residuals),
        "flux_residuals": [manager.flux_residual(correctors, i) for i in range(len(correctors))],
        "asymmetry": tensor.asymmetry(),
        "eigenvalues": tensor.eigenvalues(),
        "reuss_bound": harmonic,
        "voigt_bound": arithmetic,
        "ellipticity": [lower, upper],
        "seed": config.seed,
    }
    ladder = config.data["cell"].get("richardson")
    if ladder:
        tensors = []
        for divisions in ladder:
            level = CellProblemManager(coefficient, build_cell_grid(spec.dimension, divisions), spec.solver)
            tensors.append(level.homogenized_tensor(level.solve_all(workers)).matrix)
        extrapolated, order = richardson_extrapolate(tensors)
        extras["richardson"] = {"m": list(ladder), "tensors": tensors, "extrapolated": extrapolated, "order": order}
    write_tensor(out_dir, tensor, extras)
    logger.info("Homogenized tensor %s", np.array2string(tensor.matrix, precision=6))
    return EXIT_OK


def run_study(config: RunConfig, out_dir: str, workers: int) -> int:
    spec = config.problem_spec()
    report = error_study(spec, workers, config.thresholds(spec.shape))
    write_study(out_dir, report, config.data)
    return EXIT_OK if report.all_passed else EXIT_ACCEPTANCE_FAILED


def run_defect(field_path: Optional[str], config: Optional[RunConfig], out_dir: str) -> int:
    if not field_path:
        raise ConfigError("--field", "the defect subcommand needs a field dump")
    phi = read_cell_field(field_path)
    solver = config.solver_config() if config else SolverConfig()
    row = defect_summary(phi, cfg=solver)
    frame = write_defect(out_dir, row, os.path.basename(field_path))
    sys.stdout.write(frame.to_csv(index=False, float_format="%.12e"))
    return EXIT_OK


def random_cell_field(divisions: int, seed: int) -> ScalarField:
    grid = build_cell_grid(2, divisions)
    rng = np.random.default_rng(seed)
    return ScalarField(grid, rng.standard_normal(grid.num_nodes))


def run_twoscale(config: RunConfig, out_dir: str) -> int:
    section = config.data["twoscale"]
    shape = config.data["domain"]["shape"]
    function = source_function(section["function"])
    psi = random_cell_field(int(section["m_y"]), config.seed)
    manager = EstimatesManager(function, section["inverse_eps"], int(section["s"]), int(section["m_y"]),
                               psi=psi, shape=shape, solver_config=config.solver_config())
    report = manager.run()
    if section["dump_cells"]:
        finest = max(section["inverse_eps"])
        grid = build_domain_grid(2, finest, int(section["s"]), named_mask(shape, 2, finest))
        unfolded = unfold(interpolate(grid, function), int(section["m_y"]))
        write_unfolded(out_dir, unfolded, section["dump_cells"])
    summary = write_estimates(out_dir, report, config.data)
    return EXIT_OK if summary["all_passed"] else EXIT_ACCEPTANCE_FAILED


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parses the command line, runs one subcommand and maps failures to exit codes.
    """
    try:
        args = build_parser().parse_args(argv)
        out_dir = env_out_dir() or args.out
        workers = _workers(args)
        if args.subcommand == "defect":
            config = load_config(args.config).with_seed(args.seed) if args.config else None
            return run_defect(args.field, config, out_dir)
        config = _require_config(args)
        if args.subcommand == "correctors":
            return run_correctors(config, out_dir, workers)
        if args.subcommand == "study":
            return run_study(config, out_dir, workers)
        return run_twoscale(config, out_dir)
    except ConfigError as e:
        logger.error("Config error in %s: %s", e.field, e.reason)
        return EXIT_CONFIG
    except NumericError as e:
        logger.error("Numeric failure in stage %s: %s", e.stage, e.message)
        return EXIT_NUMERIC
    except HomogenizationError as e:
        logger.error("Run failed: %s", e)
        return EXIT_NUMERIC


def main() -> None:
    logging.basicConfig(level=env_log_level(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
