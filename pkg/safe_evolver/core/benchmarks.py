"""
Desk-scale benchmark environments. The plant files under
`safe_evolver/tasks/` are the normative definitions; this module only loads
and validates them.
"""
from functools import lru_cache
from importlib import resources
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from safe_evolver.core.ctl import SafetyProperty, parse_property
from safe_evolver.core.errors import UsageError
from safe_evolver.core.fsm_format import parse_fsm
from safe_evolver.core.machines import ControllerFsm, Plant, StateRef, validate_controller, validate_plant

# name -> (plant file, default property, reference controller file)
TASKS: Dict[str, Tuple[str, str, Optional[str]]] = {
    "tank": ("tank.plant", "AG !(overflow | underflow)", "tank_reference.fsm"),
    "rover": ("rover.plant", "AG !crater", None),
}

CONTROLLERS = ("tank_reference", "tank_always_fill")


class BenchmarkTask(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    plant: Plant
    default_property: SafetyProperty
    reference_controller: Optional[ControllerFsm] = None

    @property
    def reward(self) -> Tuple[float, ...]:
        return self.plant.rewards


def read_resource(filename: str) -> bytes:
    return resources.files("safe_evolver.tasks").joinpath(filename).read_bytes()


@lru_cache(maxsize=None)
def builtin_controller(name: str) -> ControllerFsm:
    if name not in CONTROLLERS:
        raise UsageError(f"unknown builtin controller '{name}' (known: {', '.join(CONTROLLERS)})")
    fsm = parse_fsm(read_resource(f"{name}.fsm"))
    report = validate_controller(fsm)
    if not report.ok:
        raise UsageError(f"builtin controller {name} is invalid: {report.violations}")
    return fsm


@lru_cache(maxsize=None)
def builtin_task(name: str) -> BenchmarkTask:
    if name not in TASKS:
        raise UsageError(f"unknown task '{name}' (known: {', '.join(sorted(TASKS))})")
    plant_file, prop_text, reference = TASKS[name]

    plant = parse_fsm(read_resource(plant_file))
    if not isinstance(plant, Plant):
        raise UsageError(f"{plant_file} does not describe a plant")
    report = validate_plant(plant)
    if not report.ok:
        raise UsageError(f"builtin plant {plant_file} is invalid: {report.violations}")
    prop = parse_property(prop_text)
    missing = prop.atoms - plant.hazards.keys()
    if missing:
        raise UsageError(f"default property of {name} names unknown hazards {sorted(missing)}")

    return BenchmarkTask(
        name=name,
        plant=plant,
        default_property=prop,
        reference_controller=builtin_controller(reference.removesuffix(".fsm")) if reference else None,
    )


def reward_of(task: BenchmarkTask, plant_state: StateRef) -> float:
    return task.plant.reward(task.plant.resolve_state(plant_state))
