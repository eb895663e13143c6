from typing import Optional

from safe_evolver.config import EvolutionConfig
from safe_evolver.core.benchmarks import builtin_task
from safe_evolver.core.ctl import SafetyProperty, format_property, parse_property
from safe_evolver.core.fsm_format import serialize_fsm
from safe_evolver.core.errors import ConfigError
from safe_evolver.core.interfaces import IRunLog
from safe_evolver.core.machines import Plant, validate_plant
from safe_evolver.core.reader import MachineReader
from safe_evolver.core.runlog import JsonlRunLog, sha256_hex
from safe_evolver.core.safety import ModelCheckingGate
from safe_evolver.core.simulator import PlantSimulator
from safe_evolver.service.evolution import EvolutionService


class Context:
    """Resolves a config's inputs and wires the evolution service."""

    @staticmethod
    def load_plant(cfg: EvolutionConfig) -> Plant:
        if cfg.plant_path:
            plant = MachineReader.read_plant(cfg.plant_path)
            report = validate_plant(plant)
            if not report.ok:
                raise ConfigError(f"plant {cfg.plant_path} is invalid: {'; '.join(report.violations)}")
            return plant
        return builtin_task(cfg.task).plant

    @staticmethod
    def load_property(cfg: EvolutionConfig) -> SafetyProperty:
        # inline text wins over a property file
        if cfg.property_text:
            return parse_property(cfg.property_text)
        if cfg.property_path:
            return MachineReader.read_property(cfg.property_path)
        return builtin_task(cfg.task).default_property

    @classmethod
    def get_service(cls, cfg: EvolutionConfig, run_log: Optional[IRunLog] = None) -> EvolutionService:
        plant = cls.load_plant(cfg)
        prop = cls.load_property(cfg)
        seed_genome = MachineReader.read_controller(cfg.seed_genome) if cfg.seed_genome else None

        hashes = {
            "plant": sha256_hex(serialize_fsm(plant)),
            "property": sha256_hex(format_property(prop)),
        }
        if seed_genome is not None:
            hashes["seed_genome"] = sha256_hex(serialize_fsm(seed_genome))

        # Inject
        return EvolutionService(
            cfg=cfg,
            plant=plant,
            gate=ModelCheckingGate(plant, prop),
            evaluator=PlantSimulator(plant, cfg),
            run_log=run_log if run_log is not None else JsonlRunLog(cfg.log_path),
            seed_genome=seed_genome,
            input_hashes=hashes,
        )
