"""Next-action planning harness: samples, prompts, client, mocks, metrics."""

from .client import (
    AgentResponse,
    ClientConfig,
    ParseError,
    Prediction,
    RateLimited,
    TransportError,
    parse_response,
    query_agent,
)
from .log import EmptyLog, LogEntry, PredictionLog, load_log, save_log
from .metrics import (
    AlignmentError,
    metrics_table,
    r_global_acc,
    r_local_acc,
    s_global_acc,
    s_local_acc,
    surgeon_match_metrics,
    write_metrics_csv,
)
from .mock import MockAgentServer, ground_truth_answer_key, structured_reply
from .prompts import (
    DEFAULT_KNOWLEDGE_BASE,
    ProcedureKnowledge,
    PromptBundle,
    UnknownProcedure,
    assemble_prompts,
)
from .runner import run_planning
from .samples import (
    ClipEntry,
    ContextSequence,
    PlanningSample,
    load_contexts,
    make_samples,
    save_contexts,
)

__all__ = [
    "AgentResponse",
    "AlignmentError",
    "ClientConfig",
    "ClipEntry",
    "ContextSequence",
    "DEFAULT_KNOWLEDGE_BASE",
    "EmptyLog",
    "LogEntry",
    "MockAgentServer",
    "ParseError",
    "PlanningSample",
    "Prediction",
    "PredictionLog",
    "ProcedureKnowledge",
    "PromptBundle",
    "RateLimited",
    "TransportError",
    "UnknownProcedure",
    "assemble_prompts",
    "ground_truth_answer_key",
    "load_contexts",
    "load_log",
    "make_samples",
    "metrics_table",
    "parse_response",
    "query_agent",
    "r_global_acc",
    "r_local_acc",
    "run_planning",
    "s_global_acc",
    "s_local_acc",
    "save_contexts",
    "save_log",
    "structured_reply",
    "surgeon_match_metrics",
    "write_metrics_csv",
]
