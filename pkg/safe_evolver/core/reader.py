from pathlib import Path
from typing import Union

from safe_evolver.core.ctl import SafetyProperty, parse_property
from safe_evolver.core.errors import UsageError
from safe_evolver.core.fsm_format import parse_fsm
from safe_evolver.core.machines import ControllerFsm, Machine, Plant

PathLike = Union[str, Path]


class MachineReader:
    """Reads controller, plant and property files from disk."""

    @staticmethod
    def read_bytes(path: PathLike) -> bytes:
        try:
            return Path(path).read_bytes()
        except OSError as e:
            raise UsageError(f"cannot read {path}: {e.strerror or e}") from e

    @staticmethod
    def read_machine(path: PathLike) -> Machine:
        return parse_fsm(MachineReader.read_bytes(path))

    @staticmethod
    def read_controller(path: PathLike) -> ControllerFsm:
        machine = MachineReader.read_machine(path)
        if not isinstance(machine, ControllerFsm):
            raise UsageError(f"{path} describes a plant, expected a controller ('fsm' header)")
        return machine

    @staticmethod
    def read_plant(path: PathLike) -> Plant:
        machine = MachineReader.read_machine(path)
        if not isinstance(machine, Plant):
            raise UsageError(f"{path} describes a controller, expected a plant ('plant' header)")
        return machine

    @staticmethod
    def read_property(path: PathLike) -> SafetyProperty:
        return parse_property(MachineReader.read_bytes(path))
