import functools
import logging
from contextlib import nullcontext
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from safe_evolver import __version__
from safe_evolver.config import Config, load_evolution_config
from safe_evolver.core.benchmarks import builtin_task
from safe_evolver.core.ctl import parse_property
from safe_evolver.core.errors import SafeEvolverError
from safe_evolver.core.fsm_format import serialize_fsm
from safe_evolver.core.machines import ControllerFsm, validate_controller, validate_plant
from safe_evolver.core.product import compose
from safe_evolver.core.reader import MachineReader
from safe_evolver.core.safety import check_controller_alone, check_safe
from safe_evolver.core.simulator import run_episode
from safe_evolver.service.context import Context

console = Console(stderr=True)

EXIT_OK = 0
EXIT_UNSAFE = 1
EXIT_ERROR = 2
EXIT_NO_SAFE_STRATEGY = 3


def reports_errors(command):
    """Maps expected failures to a red diagnostic and exit code 2."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return command(*args, **kwargs)
        except (SafeEvolverError, ValidationError, OSError) as e:
            console.print(f"[bold red]Error:[/bold red] {escape(str(e))}", highlight=False)
        ctx.exit(EXIT_ERROR)
    return wrapper


def _load_plant(plant_path, task):
    if plant_path:
        plant = MachineReader.read_plant(plant_path)
        report = validate_plant(plant)
        if not report.ok:
            raise click.UsageError(f"plant {plant.name} is invalid: {'; '.join(report.violations)}")
        return plant
    if task:
        return builtin_task(task).plant
    raise click.UsageError("give a plant file or --task")


def _require_valid(fsm: ControllerFsm) -> None:
    report = validate_controller(fsm)
    if not report.ok:
        raise click.UsageError(f"controller {fsm.name} is invalid: {'; '.join(report.violations)}")


@click.group()
@click.version_option(__version__, prog_name="safe-evolver")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Root seed (overrides config).")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None, help="Run log path (overrides config).")
@click.option("--quiet", is_flag=True, help="Only errors on the diagnostic stream.")
@click.pass_context
def cli(ctx, seed, log_path, quiet):
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, log_path=log_path, quiet=quiet)
    logging.basicConfig(
        level=logging.ERROR if quiet else Config.LOG_LEVEL,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@cli.command()
@click.argument('path')
@reports_errors
def validate(path):
    """Parses and validates a controller or plant file"""
    machine = MachineReader.read_machine(path)
    if isinstance(machine, ControllerFsm):
        report = validate_controller(machine)
    else:
        report = validate_plant(machine)
    for violation in report.violations:
        click.echo(violation)
    if not report.ok:
        click.get_current_context().exit(EXIT_ERROR)


@cli.command()
@click.argument('controller_path')
@click.argument('plant_path', required=False)
@click.option('--task', help="Use a builtin task's plant (and default property).")
@click.option('--alone', is_flag=True, help="Check the controller on its own; atoms name output symbols.")
@click.option('--property', 'property_text', help="Inline property, e.g. 'AG !overflow'.")
@click.option('--property-file', type=click.Path(dir_okay=False), help="File holding the property.")
@click.pass_context
@reports_errors
def check(ctx, controller_path, plant_path, task, alone, property_text, property_file):
    """Decides whether a controller is safe: prints SAFE or UNSAFE"""
    controller = MachineReader.read_controller(controller_path)
    _require_valid(controller)

    # inline wins over file, file over the task default
    if property_text:
        prop = parse_property(property_text)
    elif property_file:
        prop = MachineReader.read_property(property_file)
    elif task:
        prop = builtin_task(task).default_property
    else:
        raise click.UsageError("no property: use --property, --property-file or --task")

    if alone:
        verdict = check_controller_alone(controller, prop)
    else:
        verdict = check_safe(compose(controller, _load_plant(plant_path, task)), prop)

    click.echo("SAFE" if verdict.safe else "UNSAFE")
    if not ctx.obj["quiet"]:
        click.echo(f"iterations={verdict.iterations} states_flagged={verdict.states_flagged}", err=True)
    ctx.exit(EXIT_OK if verdict.safe else EXIT_UNSAFE)


@cli.command()
@click.argument('config_path')
@click.pass_context
@reports_errors
def evolve(ctx, config_path):
    """Evolves a safe controller as described by a JSON config"""
    cfg = load_evolution_config(Path(config_path), seed=ctx.obj["seed"], log_path=ctx.obj["log_path"])
    service = Context.get_service(cfg)
    with console.status("[bold blue]Evolving...") if not ctx.obj["quiet"] else nullcontext():
        result = service.run()

    if result.no_safe_strategy:
        console.print("[bold red]No safe strategy found.[/bold red] "
                      f"Run log: [yellow]{cfg.log_path}[/yellow]", highlight=False)
        ctx.exit(EXIT_NO_SAFE_STRATEGY)

    best_path = Path(cfg.best_genome_path)
    best_path.parent.mkdir(parents=True, exist_ok=True)
    best_path.write_bytes(serialize_fsm(result.best.genome))

    if not ctx.obj["quiet"]:
        table = Table(title="Evolution Result", show_header=True, header_style="bold magenta")
        table.add_column("Best fitness", style="green")
        table.add_column("Found in generation", style="cyan")
        table.add_column("Generations run", style="white")
        table.add_column("Evaluations", style="white")
        table.add_column("Unsafe offspring", style="red")
        table.add_row(
            f"{result.best.fitness:.4f}",
            str(result.best.lineage.generation),
            str(result.history[-1].generation),
            str(result.evaluations),
            str(sum(s.offspring_unsafe_discarded for s in result.history)),
        )
        console.print(table)
        console.print(f"Best genome written to [yellow]{best_path}[/yellow]", highlight=False)
    ctx.exit(EXIT_OK)


@cli.command()
@click.argument('controller_path')
@click.argument('plant_path', required=False)
@click.option('--task', help="Use a builtin task's plant.")
@click.option('--steps', type=click.IntRange(min=0), default=20, show_default=True)
@click.option('--seed', 'local_seed', type=click.IntRange(0, 2**64 - 1), default=None,
              help="Disturbance seed (defaults to the global --seed, then 0).")
@click.pass_context
@reports_errors
def simulate(ctx, controller_path, plant_path, task, steps, local_seed):
    """Prints one closed-loop episode step by step"""
    controller = MachineReader.read_controller(controller_path)
    _require_valid(controller)
    plant = _load_plant(plant_path, task)
    seed = local_seed if local_seed is not None else (ctx.obj["seed"] or 0)

    records = run_episode(controller, plant, steps, np.random.default_rng(seed))
    for r in records:
        click.echo(f"{r.step} {r.plant_state} {r.sensor} {r.controller_state} {r.actuator} {r.reward:.4f}")
    mean = sum(r.reward for r in records) / len(records) if records else 0.0
    click.echo(f"mean_reward {mean:.4f}")


def main():
    cli(obj={})

if __name__ == '__main__':
    main()
