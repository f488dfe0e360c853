"""countloop: critic-in-the-loop orchestration for count-controlled scenes.

Pipeline: parse a prompt into count targets, build a planning graph,
realize a pixel layout, drive a (pluggable) image generator, score the
result for count accuracy and aesthetics, and refine the graph via
structured critic feedback until the targets are met. A deterministic
simulated backend makes the whole loop verifiable without any ML model.
"""

from .errors import (
    BackendError, CapacityError, ConfigError, CountLoopError, DimError,
    EditError, EmptyReplyError, JsonError, ParseError, ProtocolError,
    RateLimitError, SchemaError, TransportError,
)
from .prompting import PromptSpec, parse_llm_json, parse_prompt
from .graph import (
    AddNodes, GraphEdit, JitterSpacing, MoveNode, ObjectNode, PlanningGraph,
    RelationEdge, RemoveNodes, Separate, SetContext, apply_edits, build_graph,
    decode_graph, encode_graph, graph_to_prompt, validate_graph,
)
from .layout import (
    InstanceBox, Layout, grid_score, jitter, realize_layout, relax_overlaps,
)
from .compose import (
    attention, box_mask, cumulative_compose, expanded_attention, mask_attention,
)
from .scoring import (
    DetectionReport, ScoreBreakdown, composite_score, count_f1, termination_check,
)
from .critic import CriticReport, Issue, imgrad, parse_critic_json, programmatic_critic
from .orchestrator import IterationRecord, RunConfig, RunReport, run
from .backends import SimBackend, SimConfig

__version__ = "0.1.0"

__all__ = [
    "BackendError", "CapacityError", "ConfigError", "CountLoopError",
    "DimError", "EditError", "EmptyReplyError", "JsonError", "ParseError",
    "ProtocolError", "RateLimitError", "SchemaError", "TransportError",
    "PromptSpec", "parse_llm_json", "parse_prompt",
    "AddNodes", "GraphEdit", "JitterSpacing", "MoveNode", "ObjectNode",
    "PlanningGraph", "RelationEdge", "RemoveNodes", "Separate", "SetContext",
    "apply_edits", "build_graph", "decode_graph", "encode_graph",
    "graph_to_prompt", "validate_graph",
    "InstanceBox", "Layout", "grid_score", "jitter", "realize_layout",
    "relax_overlaps",
    "attention", "box_mask", "cumulative_compose", "expanded_attention",
    "mask_attention",
    "DetectionReport", "ScoreBreakdown", "composite_score", "count_f1",
    "termination_check",
    "CriticReport", "Issue", "imgrad", "parse_critic_json", "programmatic_critic",
    "IterationRecord", "RunConfig", "RunReport", "run",
    "SimBackend", "SimConfig",
]
