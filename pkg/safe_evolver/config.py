import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveInt, ValidationError, model_validator

from safe_evolver.core.errors import ConfigError

load_dotenv()

class Config:
    # Ambient settings only: nothing here may change a verdict, a fitness or a run log body.
    LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING").upper()

    # Observability
    LANGFUSE_PUBLIC_KEY = os.getenv("LANGFUSE_PUBLIC_KEY")
    LANGFUSE_SECRET_KEY = os.getenv("LANGFUSE_SECRET_KEY")
    LANGFUSE_HOST = os.getenv("LANGFUSE_HOST", "https://cloud.langfuse.com")

    # Set default service name for OTel/Langfuse
    os.environ.setdefault("OTEL_SERVICE_NAME", "safe-evolver")


class MutationWeights(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    add_state: NonNegativeFloat = 1.0
    delete_state: NonNegativeFloat = 1.0
    change_transition: NonNegativeFloat = 1.0
    change_output: NonNegativeFloat = 1.0
    change_initial: NonNegativeFloat = 1.0

    @model_validator(mode="after")
    def _one_positive(self):
        if not any(w > 0 for w in self.model_dump().values()):
            raise ValueError("at least one mutation weight must be positive")
        return self


class EvolutionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    population_size: PositiveInt = 20
    offspring_per_parent: PositiveInt = 1
    max_generations: PositiveInt = 200
    fitness_threshold: float = 1.0
    max_states: PositiveInt = 8
    mutation_weights: MutationWeights = MutationWeights()
    episodes_per_evaluation: PositiveInt = 5
    episode_length: PositiveInt = 50
    seed: int = Field(default=0, ge=0, lt=2**64)

    seed_genome: Optional[str] = None
    task: str = "tank"
    plant_path: Optional[str] = None
    property_text: Optional[str] = None
    property_path: Optional[str] = None
    log_path: str = "run.jsonl"
    best_genome_path: str = "best.fsm"
    workers: PositiveInt = 1


def load_evolution_config(path: Path, **overrides) -> EvolutionConfig:
    """Reads a JSON config file; non-None overrides replace file values."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise ConfigError(f"config {path} is not valid UTF-8 at byte {e.start}") from None
    try:
        cfg = EvolutionConfig.model_validate_json(raw)
        updates = {k: v for k, v in overrides.items() if v is not None}
        if updates:
            cfg = EvolutionConfig.model_validate({**cfg.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigError(_describe(e)) from e
    return cfg


def _describe(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        where = ".".join(str(p) for p in item["loc"]) or "config"
        lines.append(f"{where}: {item['msg']}")
    return "invalid configuration: " + "; ".join(lines)
