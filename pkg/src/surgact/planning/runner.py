"""Planning run orchestration: samples -> prompts -> endpoint -> log.

Queries may run concurrently up to the configured parallelism; the log is
assembled in (context_id, t) order regardless of completion order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .client import ClientConfig, query_agent
from .log import LogEntry, PredictionLog
from .prompts import ProcedureKnowledge, assemble_prompts
from .samples import ContextSequence, make_samples


def run_planning(contexts: list[ContextSequence], client_config: ClientConfig,
                 knowledge_base: dict[str, ProcedureKnowledge] | None = None,
                 k_frames: int = 4) -> PredictionLog:
    samples = [s for ctx in contexts for s in make_samples(ctx)]
    config = client_config.resolved()
    log = PredictionLog(metadata={
        "endpoint": config.endpoint,
        "model": config.model,
        "n_contexts": len(contexts),
        "n_samples": len(samples),
        "parallelism": config.parallelism,
    })

    def one(sample):
        bundle = assemble_prompts(sample, knowledge_base, k_frames=k_frames)
        response, transcript = query_agent(bundle, config, sample_ref=sample.ref)
        return LogEntry(sample=sample, response=response, transcript=transcript)

    if config.parallelism <= 1:
        entries = [one(s) for s in samples]
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            entries = list(pool.map(one, samples))

    for entry in sorted(entries, key=lambda e: e.key):
        log.add(entry)
    return log
