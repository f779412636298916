import argparse
import json
import logging
import shlex
import sys
from dataclasses import dataclass, field
from difflib import get_close_matches
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from prompt_toolkit import PromptSession
from prompt_toolkit.completion import WordCompleter
from prompt_toolkit.formatted_text import HTML
from prompt_toolkit.history import FileHistory
from prompt_toolkit.styles import Style

from eikograph.core.config import Settings, get_settings
from eikograph.core.graph import MetricGraph, QuadratureSettings
from eikograph.core.monge import verify_monge
from eikograph.core.regularity import holder_pairs, regularity_report
from eikograph.core.reports import pairs_frame, write_frame, write_report
from eikograph.core.transversal import NullSetMarking, solve_lax_transversal, verify_transversal_monge
from eikograph.core.utils import EikographError, geometric_radii, parse_float_list
from eikograph.scenarios import (
    Scenario, ScenarioRun, convergence, get_scenario, list_scenarios, load_scenario_file, prepare_run, run_scenario
)
from eikograph.scenarios.loader import parse_null_sets
from eikograph.scenarios.tolerances import MONGE_PASS_FRACTION

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

SUBCOMMANDS = ("solve", "verify", "regularity", "transversal", "scenario", "convergence", "list", "shell")


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format='%(message)s',
        handlers=[logging.StreamHandler(sys.stdout)]
    )
    logging.getLogger().setLevel(level)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eikograph",
        description="Solve and verify the eikonal equation |grad u| = f on metric graphs",
    )
    parser.add_argument("command", choices=SUBCOMMANDS, help="What to run")
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--scenario", help="Built-in scenario name (see 'list')")
    source.add_argument("--file", help="JSON scenario file")
    parser.add_argument("--h", help="Grid spacing; a comma list for 'convergence'")
    parser.add_argument("--refine", type=int, help="Split every edge into this many pieces")
    parser.add_argument("--quad", type=float, help="Quadrature nodes per unit length")
    parser.add_argument("--radii", help="Comma list of radii for slope or Q estimates")
    parser.add_argument("--tol", type=float, help="Slope tolerance")
    parser.add_argument("--out", help="Output directory for CSV and JSON artifacts")
    parser.add_argument("--workers", type=int, help="Worker threads for per-vertex checks")
    parser.add_argument("--seed", type=int, help="Sampling seed")
    parser.add_argument("--truncate-M", dest="truncate_M", type=float, help="Cap the running cost at M")
    parser.add_argument("--null-sets", dest="null_sets", help="JSON file with a 'null_sets' array")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def _load(args: argparse.Namespace) -> Scenario:
    if args.file:
        return load_scenario_file(args.file)
    if not args.scenario:
        raise ValueError("Give --scenario NAME or --file PATH")
    return get_scenario(args.scenario)


def _resolution(args: argparse.Namespace) -> Optional[float]:
    if args.h is None:
        return None
    values = parse_float_list(args.h)
    if len(values) != 1:
        raise ValueError(f"--h takes one value for this command, got {args.h}")
    return values[0]


def _null_sets(args: argparse.Namespace) -> Optional[Callable[[MetricGraph], List[NullSetMarking]]]:
    """Read --null-sets; ids and segments resolve against the graph prepare_run solves on"""
    if not args.null_sets:
        return None
    with open(args.null_sets, "r", encoding="utf-8") as f:
        items = json.load(f).get("null_sets", [])
    return lambda graph: parse_null_sets(items, graph, args.null_sets)


def _prepare(args: argparse.Namespace, settings: Settings, scenario: Scenario) -> ScenarioRun:
    return prepare_run(
        scenario,
        _resolution(args),
        QuadratureSettings.from_settings(settings),
        refine_factor=args.refine,
        truncate_M=args.truncate_M,
        null_sets=_null_sets(args),
        radii=parse_float_list(args.radii) if args.radii else None,
        tol=args.tol,
        workers=settings.workers,
        seed=settings.seed,
    )


def _cmd_solve(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    scenario = _load(args)
    run = _prepare(args, settings, scenario)
    write_frame(run.solution.to_frame(run.graph), out / f"{scenario.name}_solution.csv")
    write_report({'name': scenario.name, 'vertices': run.graph.vertex_count,
                  'sigma_g': run.solution.sigma_g, 'diagnostics': run.solution.diagnostics},
                 out / f"{scenario.name}_solve.json")
    center = scenario.center(run.graph)
    logger.info(f"✅ Solved {scenario.name}: {run.graph.vertex_count} vertices, "
                f"u at vertex {center} = {run.u[center]:.9g}, Sigma_g has {len(run.solution.sigma_g)} vertex(es)")
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    scenario = _load(args)
    run = _prepare(args, settings, scenario)
    report = verify_monge(run.solution, run.problem, sample=settings.pair_budget, radii=run.radii,
                          tol=args.tol, seed=run.seed, workers=run.workers, weights=run.weights)
    write_frame(report.to_frame(), out / f"{scenario.name}_monge.csv")
    passed = report.pass_fraction >= MONGE_PASS_FRACTION and report.semicontinuity_ok
    mark = "✅" if passed else "❌"
    logger.info(f"{mark} Monge check on {scenario.name}: {report.pass_fraction:.1%} of {report.checked} vertices, "
                f"semicontinuity {'ok' if report.semicontinuity_ok else 'violated'}")
    return EXIT_OK if passed else EXIT_FAILED


def _cmd_regularity(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    scenario = _load(args)
    run = _prepare(args, settings, scenario)
    center = scenario.center(run.graph)
    if run.radii:
        q_radii = run.radii
    else:
        reach = run.graph.graph_distances([center])[0]
        q_radii = geometric_radii(0.2 * float(reach[reach < float("inf")].max()), 5)
    report = regularity_report(run.graph, run.f, run.u, center, q_radii)
    write_frame(pairs_frame(holder_pairs(run.graph, run.u, center), "u"), out / f"{scenario.name}_pairs.csv")
    write_report(report.to_dict(), out / f"{scenario.name}_regularity.json")
    mark = "❌" if report.violation else "✅"
    logger.info(f"{mark} {scenario.name}: Q = {report.Q_estimate:.4f}, exponent {report.holder_exponent:.4f} "
                f"(predicted {report.predicted_exponent:.4f} under {report.assumption_tag})")
    return EXIT_FAILED if report.violation else EXIT_OK


def _cmd_transversal(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    scenario = _load(args)
    run = _prepare(args, settings, scenario)
    if not run.family:
        logger.warning(f"{scenario.name} declares no null-set markings; the maximal solution equals u")
    solution = solve_lax_transversal(run.problem, run.family, run.quad, weights=run.weights)
    report = verify_transversal_monge(solution, run.problem, run.family, sample=settings.pair_budget,
                                      radii=run.radii, tol=args.tol, quad=run.quad, seed=run.seed,
                                      workers=run.workers, weights=run.weights)
    write_frame(solution.to_frame(run.graph), out / f"{scenario.name}_transversal.csv")
    write_report({'name': scenario.name, 'diagnostics': solution.diagnostics,
                  'monge_pass_fraction': report.pass_fraction}, out / f"{scenario.name}_transversal.json")
    passed = report.pass_fraction >= MONGE_PASS_FRACTION
    mark = "✅" if passed else "❌"
    logger.info(f"{mark} {scenario.name}: gap to plain solution {solution.diagnostics['transversal_gap']:.6g}, "
                f"Monge pass fraction {report.pass_fraction:.1%}")
    return EXIT_OK if passed else EXIT_FAILED


def _cmd_scenario(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    scenario = _load(args)
    report = run_scenario(
        scenario, _resolution(args), QuadratureSettings.from_settings(settings), out,
        refine_factor=args.refine, truncate_M=args.truncate_M, null_sets=_null_sets(args),
        radii=parse_float_list(args.radii) if args.radii else None, tol=args.tol,
        workers=settings.workers, seed=settings.seed,
    )
    return EXIT_OK if report.passed else EXIT_FAILED


def _cmd_convergence(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    scenario = _load(args)
    if not args.h:
        raise ValueError("convergence needs --h with a comma list of spacings")
    table = convergence(scenario, parse_float_list(args.h), QuadratureSettings.from_settings(settings))
    write_frame(table, out / f"{scenario.name}_convergence.csv")
    logger.info(table.to_string(index=False))
    errors = table['sup_error'].tolist()
    decreasing = all(a > b for a, b in zip(errors[:-1], errors[1:]))
    logger.info(f"{'✅' if decreasing else '❌'} sup error {'decreases' if decreasing else 'does not decrease'} with h")
    return EXIT_OK if decreasing else EXIT_FAILED


def _cmd_list(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    logger.info("\nAvailable Scenarios:")
    for name in list_scenarios():
        logger.info(f"  {name:<18} - {get_scenario(name).description}")
    return EXIT_OK


def _cmd_shell(args: argparse.Namespace, settings: Settings, out: Path) -> int:
    EikographCLI().run()
    return EXIT_OK


HANDLERS: Dict[str, Callable[[argparse.Namespace, Settings, Path], int]] = {
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "regularity": _cmd_regularity,
    "transversal": _cmd_transversal,
    "scenario": _cmd_scenario,
    "convergence": _cmd_convergence,
    "list": _cmd_list,
    "shell": _cmd_shell,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns 0 when every check passes, 1 on a failed check and 2 on usage or IO errors"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    settings = get_settings().override(workers=args.workers, seed=args.seed, output_dir=args.out,
                                       quad_points_per_unit=args.quad)
    _configure_logging("DEBUG" if args.verbose else settings.log_level)
    try:
        return HANDLERS[args.command](args, settings, Path(settings.output_dir))
    except EikographError as e:
        logger.error(f"Error: {e}")
    except (OSError, ValueError) as e:
        logger.error(f"Error: {e}")
    return EXIT_USAGE


@dataclass
class Command:
    """A shell command and the words that invoke it"""
    name: str
    description: str
    tips: List[str]
    handler: Callable[[List[str]], None]
    aliases: List[str] = field(default_factory=list)


# name, description, usage, extra tips, aliases
SHELL_SUBCOMMANDS = [
    ("scenario", "Run a scenario and compare every oracle",
     "scenario --scenario {name} [--h spacing] [--out dir]", ["Use 'list' to see the built-in scenarios"], ["run"]),
    ("solve", "Solve the Dirichlet problem and write u",
     "solve --scenario {name} | --file {path} [--h spacing]", [], []),
    ("verify", "Check the Monge property of the Lax solution",
     "verify --scenario {name} [--radii r1,r2,...] [--tol 0.05]", [], []),
    ("regularity", "Fit Q and the Hoelder exponent of u",
     "regularity --scenario {name} [--radii r1,r2,...]", ["Radii must span at least a decade"], []),
    ("transversal", "Solve with null-set markings and verify the maximal solution",
     "transversal --scenario {name} [--null-sets file.json]", [], []),
    ("convergence", "Sup error against the closed form across resolutions",
     "convergence --scenario {name} --h 1e-1,1e-2,1e-3", [], []),
    ("list", "List built-in scenarios",
     "list", ["Scenario files can be passed to any command with --file"], ["ls"]),
]


class EikographCLI:
    """Interactive shell running the same subcommands as the command line"""

    def __init__(self):
        self.config_dir = Path.home() / '.eikograph'
        self.config_dir.mkdir(exist_ok=True)
        self.last_exit: Optional[int] = None
        self.running = False

        self._initialize_commands()
        self._setup_prompt_toolkit()

    def _initialize_commands(self) -> None:
        self.commands: Dict[str, Command] = {}
        for name, description, usage, tips, aliases in SHELL_SUBCOMMANDS:
            self._register_command(Command(name, description, [f"Format: {usage}"] + tips, self.dispatch, aliases))
        self._register_command(Command("help", "Show command help", ["'help {command}' adds the shared options"],
                                       self.help, ['?']))
        self._register_command(Command("exit", "Leave the shell", ["Ctrl+D works too"], self.exit, ['quit']))

    def _register_command(self, command: Command) -> None:
        for word in [command.name] + command.aliases:
            self.commands[word] = command

    def _setup_prompt_toolkit(self) -> None:
        """Prompt with completion over commands and scenario names, history under ~/.eikograph"""
        self.style = Style.from_dict({
            'prompt': 'ansicyan bold',
            'ok': 'ansigreen',
            'failed': 'ansired bold',
        })
        self.completer = WordCompleter(sorted(self.commands) + list_scenarios(), ignore_case=True, sentence=True)
        self.session = PromptSession(
            completer=self.completer,
            style=self.style,
            history=FileHistory(str(self.config_dir / 'history.txt'))
        )

    def _get_prompt_message(self) -> HTML:
        if self.last_exit is None:
            return HTML('<prompt>eikograph</prompt> > ')
        status = 'ok' if self.last_exit == EXIT_OK else 'failed'
        return HTML(f'<prompt>eikograph</prompt> <{status}>[{self.last_exit}]</{status}> > ')

    def dispatch(self, input_list: List[str]) -> None:
        """Run a subcommand through main and remember its exit code"""
        command = self.commands[input_list[0].lower()]
        self.last_exit = main([command.name] + input_list[1:])

    def exit(self, input_list: List[str]) -> None:
        self.running = False

    def _handle_command(self, input_string: str) -> None:
        try:
            input_list = shlex.split(input_string)
        except ValueError as e:
            logger.error(f"Could not parse '{input_string}': {e}")
            return
        if not input_list:
            return

        command = self.commands.get(input_list[0].lower())
        if command is None:
            self._handle_unknown_command(input_list[0])
            return
        try:
            command.handler(input_list)
        except Exception as e:
            logger.error(f"Error in '{command.name}': {e}")

    def _handle_unknown_command(self, command: str) -> None:
        logger.warning(f"Unknown command: '{command}'")
        suggestions = self._get_command_suggestions(command)
        if suggestions:
            logger.info(f"Did you mean: {', '.join(suggestions)}?")
        else:
            logger.info("Use 'help' for available commands")

    def _get_command_suggestions(self, command: str, max_suggestions: int = 3) -> List[str]:
        return get_close_matches(command.lower(), self.commands.keys(), n=max_suggestions, cutoff=0.6)

    def help(self, input_list: List[str]) -> None:
        """List commands, or show one command with its tips and the shared options"""
        if len(input_list) == 1:
            logger.info("\nCommands:")
            for name, command in sorted(self.commands.items()):
                if name == command.name:
                    aliases = f" ({', '.join(command.aliases)})" if command.aliases else ""
                    logger.info(f"  {name + aliases:<18} {command.description}")
            return

        command = self.commands.get(input_list[1].lower())
        if command is None:
            self._handle_unknown_command(input_list[1])
            return
        logger.info(f"\n{command.name}: {command.description}")
        for tip in command.tips:
            logger.info(f"  - {tip}")
        if command.handler == self.dispatch:
            logger.info(build_parser().format_help())

    def run(self) -> None:
        """Read commands until 'exit' or Ctrl+D"""
        logger.info("─" * 50)
        logger.info("eikograph shell; 'help' lists the commands")
        logger.info("─" * 50)
        self.running = True
        while self.running:
            try:
                input_string = self.session.prompt(self._get_prompt_message(), style=self.style).strip()
            except KeyboardInterrupt:
                continue
            except EOFError:
                break
            if input_string:
                self._handle_command(input_string)
        logger.info("Goodbye! 👋")


if __name__ == "__main__":
    sys.exit(main())
