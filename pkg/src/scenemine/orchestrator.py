"""Query-to-scenario mining: generate code, repair on failure, execute.

One mining run covers a single (query, log) pair. Each round composes a
prompt (the first round plain, later rounds carrying the previous program
and its diagnostic), asks the provider for code, and tries to parse, check
and run it. The first round that executes cleanly wins; if every round up
to the iteration cap fails, the run reports Failed with an empty prediction
rather than raising -- a batch must survive any single bad query.
"""

from __future__ import annotations

import json
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .categories import DEFAULT_REGISTRY, CategoryRegistry
from .dsl import DslError, describe_functions, interpret, parse
from .errors import EmptyResponse, ProviderError
from .predicates import REGISTRY, FunctionSpec
from .promptgen import Prompt, compose_initial, compose_iteration
from .providers import LlmProvider, query_key
from .scenario_set import ScenarioSet
from .tracklog import TrackLog

STATUS_SUCCEEDED = "Succeeded"
STATUS_FAILED = "Failed"

TRANSPORT_ERROR = "TransportError"
EMPTY_RESPONSE = "EmptyResponse"

MISSING_CODE_PLACEHOLDER = "<no code returned>"

_FENCE = re.compile(r"^\s*```")


def extract_code(response: str) -> str:
    """Pull program text out of a completion.

    The first fenced block wins (any language tag on the fence is ignored);
    an unterminated fence runs to the end of the response. Without a fence
    the whole trimmed response is treated as code.
    """
    if not response.strip():
        raise EmptyResponse("provider returned an empty response")
    lines = response.splitlines()
    for i, line in enumerate(lines):
        if _FENCE.match(line):
            body = []
            for j in range(i + 1, len(lines)):
                if _FENCE.match(lines[j]):
                    break
                body.append(lines[j])
            return "\n".join(body).strip()
    return response.strip()


@dataclass
class MiningConfig:
    """Knobs for a mining run.

    provider may be an instance or a zero-argument factory; a factory gets
    called once per (query, log) run so scripted replay counters start fresh
    for every run regardless of batch shape or worker count.
    """

    provider: LlmProvider | Callable[[], LlmProvider]
    max_iterations: int = 5
    epsrf: bool = True
    registry: Mapping[str, FunctionSpec] = field(default_factory=lambda: REGISTRY)
    categories: CategoryRegistry = DEFAULT_REGISTRY
    transport_backoff: float = 2.0
    sleeper: Callable[[float], None] = time.sleep
    workers: int = 1

    def make_provider(self) -> LlmProvider:
        if callable(self.provider) and not hasattr(self.provider, "generate"):
            return self.provider()
        return self.provider


@dataclass(frozen=True)
class IterationRecord:
    """What one round saw and how it failed (all error fields None on success)."""

    index: int
    prompt_text: str
    response_text: str | None
    code: str | None
    error_kind: str | None
    error_message: str | None
    error_span: tuple[int, int] | None

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "prompt": self.prompt_text,
            "response": self.response_text,
            "code": self.code,
            "error_kind": self.error_kind,
            "error_message": self.error_message,
            "error_span": list(self.error_span) if self.error_span else None,
        }


@dataclass(frozen=True)
class MiningOutcome:
    query_text: str
    log_id: str
    status: str
    iterations: tuple[IterationRecord, ...]
    prediction: ScenarioSet
    code: str | None

    @property
    def succeeded(self) -> bool:
        return self.status == STATUS_SUCCEEDED

    def to_json_dict(self) -> dict:
        return {
            "query": self.query_text,
            "log_id": self.log_id,
            "status": self.status,
            "code": self.code,
            "prediction": self.prediction.to_json_dict(),
            "iterations": [rec.to_json_dict() for rec in self.iterations],
        }


def _generate_once(provider: LlmProvider, prompt: Prompt, config: MiningConfig) -> str:
    """One provider call with a single retry after a transport failure."""
    try:
        return provider.generate(prompt.text)
    except ProviderError:
        config.sleeper(config.transport_backoff)
        return provider.generate(prompt.text)


def mine_scenario(query_text: str, log: TrackLog, config: MiningConfig) -> MiningOutcome:
    """Run the generate/execute/repair loop for one query against one log."""
    provider = config.make_provider()
    catalog = describe_functions(config.registry)
    records: list[IterationRecord] = []
    prior_code: str | None = None
    prior_error: str | None = None

    for index in range(1, config.max_iterations + 1):
        if prior_error is None:
            prompt = compose_initial(query_text, catalog, config.epsrf)
        else:
            prompt = compose_iteration(
                query_text, catalog, config.epsrf, prior_code or MISSING_CODE_PLACEHOLDER, prior_error
            )

        try:
            response = _generate_once(provider, prompt, config)
        except ProviderError as exc:
            records.append(
                IterationRecord(index, prompt.text, None, None, TRANSPORT_ERROR, str(exc), None)
            )
            prior_code, prior_error = None, str(exc)
            continue

        try:
            code = extract_code(response)
            if not code:
                raise EmptyResponse("completion contained no program text")
        except EmptyResponse as exc:
            records.append(
                IterationRecord(index, prompt.text, response, None, EMPTY_RESPONSE, str(exc), None)
            )
            prior_code, prior_error = None, str(exc)
            continue

        try:
            program = parse(code)
            prediction = interpret(program, log, config.registry, config.categories)
        except DslError as exc:
            span = (exc.span.line, exc.span.col) if exc.span else None
            records.append(
                IterationRecord(index, prompt.text, response, code, exc.kind, str(exc), span)
            )
            prior_code, prior_error = code, str(exc)
            continue

        records.append(IterationRecord(index, prompt.text, response, code, None, None, None))
        return MiningOutcome(
            query_text, log.log_id, STATUS_SUCCEEDED, tuple(records), prediction, code
        )

    return MiningOutcome(
        query_text, log.log_id, STATUS_FAILED, tuple(records), ScenarioSet.empty(), None
    )


# ---------------------------------------------------------------------------
# Batch running and result files


@dataclass(frozen=True)
class BatchResult:
    """Outcomes for the full query x log grid, keyed query text -> log id."""

    outcomes: Mapping[str, Mapping[str, MiningOutcome]]

    def predictions(self) -> dict:
        return {
            query: {log_id: outcome.prediction.to_json_dict() for log_id, outcome in per_log.items()}
            for query, per_log in self.outcomes.items()
        }

    def predictions_json(self) -> str:
        return json.dumps(self.predictions(), indent=2, sort_keys=True) + "\n"

    def failed_runs(self) -> list[tuple[str, str]]:
        return [
            (query, log_id)
            for query, per_log in self.outcomes.items()
            for log_id, outcome in per_log.items()
            if not outcome.succeeded
        ]


def _write_text_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _transcript_name(query_text: str, log_id: str) -> str:
    safe_log = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in log_id)
    return f"{query_key(query_text)[:12]}__{safe_log}.json"


def run_batch(
    queries: Sequence[str],
    logs: Sequence[TrackLog],
    config: MiningConfig,
    out_dir: str | None = None,
) -> BatchResult:
    """Mine every query against every log; optionally write prediction/transcript files.

    Worker threads only affect wall time: results are keyed by (query, log)
    and files are written after the grid completes, so output bytes do not
    depend on scheduling order.
    """
    pairs = [(query, log) for query in queries for log in logs]
    results: dict[tuple[str, str], MiningOutcome] = {}
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {
                (query, log.log_id): pool.submit(mine_scenario, query, log, config)
                for query, log in pairs
            }
            for key, future in futures.items():
                results[key] = future.result()
    else:
        for query, log in pairs:
            results[(query, log.log_id)] = mine_scenario(query, log, config)

    outcomes: dict[str, dict[str, MiningOutcome]] = {}
    for query in queries:
        outcomes[query] = {log.log_id: results[(query, log.log_id)] for log in logs}
    batch = BatchResult(outcomes)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        transcripts = os.path.join(out_dir, "transcripts")
        os.makedirs(transcripts, exist_ok=True)
        _write_text_atomic(os.path.join(out_dir, "predictions.json"), batch.predictions_json())
        for query, per_log in batch.outcomes.items():
            for log_id, outcome in per_log.items():
                text = json.dumps(outcome.to_json_dict(), indent=2, sort_keys=True) + "\n"
                _write_text_atomic(os.path.join(transcripts, _transcript_name(query, log_id)), text)
    return batch
