"""
Optional Langfuse reporting for evolution runs. Nothing reported here feeds
back into a run: without credentials every call is a no-op.
"""
import logging
from contextlib import nullcontext

from langfuse import Langfuse

from safe_evolver.config import Config, EvolutionConfig
from safe_evolver.core.interfaces import EvolutionResult, GenerationStats

logger = logging.getLogger(__name__)


class Observability:
    _langfuse = None
    _failed = False

    @classmethod
    def get_client(cls):
        # one attempt per process; a broken endpoint must not slow every generation
        if cls._langfuse is None and not cls._failed and Config.LANGFUSE_PUBLIC_KEY:
            try:
                cls._langfuse = Langfuse(
                    public_key=Config.LANGFUSE_PUBLIC_KEY,
                    secret_key=Config.LANGFUSE_SECRET_KEY,
                    host=Config.LANGFUSE_HOST
                )
            except Exception as e:
                cls._failed = True
                logger.warning(f"Failed to initialize Langfuse: {e}")
        return cls._langfuse

    @classmethod
    def run_span(cls, cfg: EvolutionConfig):
        """Span around one evolution run (nullcontext without Langfuse)."""
        client = cls.get_client()
        if client is None:
            return nullcontext()
        metadata = {
            "seed": cfg.seed,
            "task": cfg.task,
            "population_size": cfg.population_size,
            "max_generations": cfg.max_generations,
        }
        return client.start_as_current_span(name="evolve", metadata=metadata)

    @classmethod
    def generation(cls, stats: GenerationStats):
        # wall time is excluded from run logs, so this is its only outlet
        logger.debug("generation %d took %.3fs", stats.generation, stats.wall_time_s)
        cls._event(f"generation {stats.generation}", {**stats.model_dump(), "wall_time_s": stats.wall_time_s})

    @classmethod
    def result(cls, result: EvolutionResult):
        cls._event("result", {
            "evaluations": result.evaluations,
            "generations": len(result.history),
            "best_fitness": result.best.fitness if result.best else None,
            "no_safe_strategy": result.no_safe_strategy,
        })

    @classmethod
    def _event(cls, name: str, metadata: dict):
        client = cls.get_client()
        if client:
            try:
                client.create_event(name=name, metadata=metadata)
            except Exception as e:
                logger.warning(f"Langfuse error: {e}")

    @classmethod
    def flush(cls):
        client = cls.get_client()
        if client:
            try:
                client.flush()
            except Exception as e:
                logger.warning(f"Langfuse flush error: {e}")
