import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from safe_evolver.core.fsm_format import serialize_fsm
from safe_evolver.core.interfaces import (
    IRunLog, Candidate, GenerationStats, EvolutionResult, RunManifest
)
from safe_evolver.core.machines import Machine


def sha256_hex(data: Union[bytes, str]) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def genome_hash(machine: Machine) -> str:
    return sha256_hex(serialize_fsm(machine))


def _dumps(record: Dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class JsonlRunLog(IRunLog):
    """
    Buffers records in memory and writes them on close(), so the manifest
    (which carries the end timestamp) can head the file.
    With path=None the log stays in memory; `lines` holds the records.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self.lines: List[str] = []

    def _append(self, kind: str, body: Dict[str, Any]) -> None:
        self.lines.append(_dumps({"kind": kind, **body}))

    def record_candidate(self, candidate: Candidate) -> None:
        self._append("candidate", {
            **candidate.lineage.model_dump(),
            "verdict": candidate.verdict.value.value if candidate.verdict else None,
            "fitness": candidate.fitness,
            "genome_hash": genome_hash(candidate.genome),
        })

    def record_generation(self, stats: GenerationStats) -> None:
        self._append("generation", stats.model_dump())

    def record_result(self, result: EvolutionResult) -> None:
        body: Dict[str, Any] = {"evaluations": result.evaluations}
        if result.no_safe_strategy:
            body["no_safe_strategy"] = True
        else:
            best = result.best
            body.update(
                no_safe_strategy=False,
                fitness=best.fitness,
                generation=best.lineage.generation,
                genome_hash=genome_hash(best.genome),
                best_genome=serialize_fsm(best.genome).decode("utf-8"),
            )
        self._append("result", body)

    def close(self, manifest: RunManifest) -> None:
        self.lines.insert(0, _dumps({"kind": "manifest", **manifest.model_dump(mode="json")}))
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("\n".join(self.lines) + "\n", encoding="utf-8")

    def records(self) -> List[Dict[str, Any]]:
        return [json.loads(line) for line in self.lines]
