import logging
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from time import perf_counter
from typing import Dict, List, Optional, Tuple

import numpy as np

from safe_evolver import __version__
from safe_evolver.config import EvolutionConfig
from safe_evolver.core import rng as streams
from safe_evolver.core.ctl import SafetyProperty
from safe_evolver.core.errors import CompositionError, ConfigError
from safe_evolver.core.genome import mutate, random_controller
from safe_evolver.core.interfaces import (
    IEvaluator, IRunLog, ISafetyGate,
    Candidate, EvolutionResult, GenerationStats, Lineage, RunManifest
)
from safe_evolver.core.machines import ControllerFsm, Plant, validate_controller
from safe_evolver.core.product import check_alphabets
from safe_evolver.core.runlog import JsonlRunLog
from safe_evolver.core.safety import ModelCheckingGate
from safe_evolver.core.simulator import PlantSimulator
from safe_evolver.utils.observability import Observability

logger = logging.getLogger(__name__)

Offspring = Tuple[ControllerFsm, Lineage]


class EvolutionService:
    """
    Mutation-only evolutionary loop with the safety gate in front of every
    evaluation: a candidate is scored only after the gate returns Safe.
    """

    def __init__(
        self,
        cfg: EvolutionConfig,
        plant: Plant,
        gate: ISafetyGate,
        evaluator: IEvaluator,
        run_log: IRunLog,
        seed_genome: Optional[ControllerFsm] = None,
        input_hashes: Optional[Dict[str, str]] = None,
    ):
        self.cfg = cfg
        self.plant = plant
        self.gate = gate
        self.evaluator = evaluator
        self.run_log = run_log
        self.seed_genome = seed_genome
        self.input_hashes = input_hashes or {}
        self.evaluations = 0

        if seed_genome is not None:
            report = validate_controller(seed_genome)
            if not report.ok:
                raise ConfigError(f"seed genome is invalid: {'; '.join(report.violations)}")
            if seed_genome.n_states > cfg.max_states:
                raise ConfigError(f"seed genome has {seed_genome.n_states} states, max_states is {cfg.max_states}")
            try:
                check_alphabets(seed_genome, plant)
            except CompositionError as e:
                raise ConfigError(f"seed genome does not fit the plant: {e}") from e

    def _initial_population(self) -> List[Offspring]:
        cfg = self.cfg
        sensors, actuators = self.plant.outputs, self.plant.inputs
        members: List[Offspring] = []
        for i in range(cfg.population_size):
            rng = streams.stream(cfg.seed, 0, i, 0, streams.MUTATION)
            if self.seed_genome is None:
                genome = random_controller(rng, sensors, actuators, int(rng.integers(1, cfg.max_states + 1)))
                tag = "random"
            elif i == 0:
                genome, tag = self.seed_genome, "seed"
            else:
                genome, tag = mutate(self.seed_genome, rng, cfg)
            members.append((genome, Lineage(generation=0, parent=None, child=i, mutation=tag)))
        return members

    def _assess_one(self, genome: ControllerFsm, lineage: Lineage) -> Candidate:
        verdict = self.gate.check(genome)
        fitness = None
        if verdict.safe:
            slot = lineage.parent if lineage.parent is not None else lineage.child
            rng = streams.stream(self.cfg.seed, lineage.generation, slot, lineage.child, streams.EVALUATION)
            fitness = self.evaluator.evaluate(genome, rng)
        return Candidate(genome=genome, verdict=verdict, fitness=fitness, lineage=lineage)

    def _assess(self, offspring: List[Offspring]) -> List[Candidate]:
        # results come back in offspring order whatever the pool does
        if self.cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                assessed = list(pool.map(lambda o: self._assess_one(*o), offspring))
        else:
            assessed = [self._assess_one(*o) for o in offspring]
        for candidate in assessed:
            if candidate.fitness is not None:
                self.evaluations += 1
            self.run_log.record_candidate(candidate)
        return assessed

    def _select(self, pool: List[Candidate]) -> List[Candidate]:
        """(mu + offspring) truncation; stable, so earlier entries win ties."""
        return sorted(pool, key=lambda c: -c.rank_key)[: self.cfg.population_size]

    def _breed(self, generation: int, population: List[Candidate]) -> List[Offspring]:
        cfg = self.cfg
        offspring: List[Offspring] = []
        for p, parent in enumerate(population):
            for c in range(cfg.offspring_per_parent):
                rng = streams.stream(cfg.seed, generation, p, c, streams.MUTATION)
                child, tag = mutate(parent.genome, rng, cfg)
                offspring.append((child, Lineage(generation=generation, parent=p, child=c, mutation=tag)))
        return offspring

    @staticmethod
    def _best(current: Optional[Candidate], assessed: List[Candidate]) -> Optional[Candidate]:
        for candidate in assessed:
            if candidate.fitness is None:
                continue
            if current is None or candidate.fitness > current.fitness:
                current = candidate
        return current

    def _stats(self, generation: int, assessed: List[Candidate], population: List[Candidate],
               best: Optional[Candidate], started: float) -> GenerationStats:
        scored = [c.fitness for c in population if c.fitness is not None]
        stats = GenerationStats(
            generation=generation,
            offspring_created=len(assessed),
            offspring_unsafe_discarded=sum(1 for c in assessed if not c.verdict.safe),
            best_fitness=best.fitness if best else None,
            mean_fitness=float(np.mean(scored)) if scored else None,
            wall_time_s=perf_counter() - started,
        )
        self.run_log.record_generation(stats)
        Observability.generation(stats)
        return stats

    def _reached(self, best: Optional[Candidate]) -> bool:
        return best is not None and best.fitness >= self.cfg.fitness_threshold

    def run(self) -> EvolutionResult:
        cfg = self.cfg
        started_at = datetime.now(timezone.utc)
        history: List[GenerationStats] = []

        with Observability.run_span(cfg):
            t0 = perf_counter()
            initial = self._assess(self._initial_population())
            best = self._best(None, initial)
            population = self._select(initial)
            history.append(self._stats(0, initial, population, best, t0))

            generation = 0
            while not self._reached(best) and generation < cfg.max_generations:
                generation += 1
                t0 = perf_counter()
                assessed = self._assess(self._breed(generation, population))
                survivors = [c for c in assessed if c.verdict.safe]
                best = self._best(best, survivors)
                population = self._select(population + survivors)
                history.append(self._stats(generation, assessed, population, best, t0))
                logger.info("generation %d: best=%s discarded=%d", generation,
                            history[-1].best_fitness, history[-1].offspring_unsafe_discarded)

        result = EvolutionResult(best=best, history=history, evaluations=self.evaluations)
        self.run_log.record_result(result)
        Observability.result(result)
        self.run_log.close(RunManifest(
            tool_version=__version__,
            config=cfg.model_dump(mode="json"),
            seed=cfg.seed,
            input_hashes=self.input_hashes,
            started_at=started_at,
            ended_at=datetime.now(timezone.utc),
        ))
        Observability.flush()
        return result


def run_evolution(
    cfg: EvolutionConfig,
    plant: Plant,
    prop: SafetyProperty,
    run_log: Optional[IRunLog] = None,
    seed_genome: Optional[ControllerFsm] = None,
) -> EvolutionResult:
    service = EvolutionService(
        cfg=cfg,
        plant=plant,
        gate=ModelCheckingGate(plant, prop),
        evaluator=PlantSimulator(plant, cfg),
        run_log=run_log if run_log is not None else JsonlRunLog(),
        seed_genome=seed_genome,
    )
    return service.run()
