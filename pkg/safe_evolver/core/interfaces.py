from abc import ABC, abstractmethod
from datetime import datetime
from enum import Enum
from typing import Optional, List, Dict, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from safe_evolver.core.machines import ControllerFsm

# Domain Models (DTOs)
class Verdict(str, Enum):
    SAFE = "Safe"
    UNSAFE = "Unsafe"


class SafetyVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: Verdict
    iterations: int = Field(ge=0)
    states_flagged: int = Field(ge=0)

    @property
    def safe(self) -> bool:
        return self.value is Verdict.SAFE


class Lineage(BaseModel):
    generation: int
    parent: Optional[int] = None  # None for the initial population
    child: int = 0
    mutation: str = "random"


class Candidate(BaseModel):
    model_config = ConfigDict(frozen=True)

    genome: ControllerFsm
    verdict: Optional[SafetyVerdict] = None  # None while unchecked
    fitness: Optional[float] = None  # None while unevaluated
    lineage: Lineage

    @property
    def rank_key(self) -> float:
        # unevaluated candidates sort below every real fitness
        return self.fitness if self.fitness is not None else float("-inf")


class GenerationStats(BaseModel):
    generation: int
    offspring_created: int
    offspring_unsafe_discarded: int
    best_fitness: Optional[float] = None
    mean_fitness: Optional[float] = None
    wall_time_s: float = Field(default=0.0, exclude=True)


class RunManifest(BaseModel):
    tool_version: str
    config: Dict[str, Any]
    seed: int
    input_hashes: Dict[str, str]
    started_at: datetime
    ended_at: Optional[datetime] = None


class EvolutionResult(BaseModel):
    best: Optional[Candidate] = None
    history: List[GenerationStats]
    evaluations: int = 0

    @property
    def no_safe_strategy(self) -> bool:
        return self.best is None


# Interfaces
class ISafetyGate(ABC):
    @abstractmethod
    def check(self, genome: ControllerFsm) -> SafetyVerdict:
        """Decides whether a genome may be evaluated at all."""
        pass


class IEvaluator(ABC):
    @abstractmethod
    def evaluate(self, genome: ControllerFsm, rng: np.random.Generator) -> float:
        """Scores a genome that already passed the safety gate."""
        pass


class IRunLog(ABC):
    @abstractmethod
    def record_candidate(self, candidate: Candidate) -> None:
        """Appends a `candidate` record."""
        pass

    @abstractmethod
    def record_generation(self, stats: GenerationStats) -> None:
        """Appends a `generation` record."""
        pass

    @abstractmethod
    def record_result(self, result: EvolutionResult) -> None:
        """Appends the final `result` record."""
        pass

    @abstractmethod
    def close(self, manifest: RunManifest) -> None:
        """Writes the log with the manifest as its first line."""
        pass
