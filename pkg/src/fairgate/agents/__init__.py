from .ops import (
    AgentSuite,
    Alignment,
    LlmAgents,
    UqeAssessment,
    Variant,
    VariantOrigin,
    VariantSet,
    cue_pairs_json,
)
from .parsing import extract_json
from .prompts import (
    AgentKind,
    REQUIRED_FIELDS,
    SYSTEM_PROMPTS,
    USER_TEMPLATES,
    coerce_agent_kind,
    render_prompt,
)
from .transport import (
    AgentResponse,
    CannedTransport,
    ChatClient,
    ChatRequest,
    HttpTransport,
    ResponseCache,
    Transport,
    request_key,
    wrap_completion,
)
from .usage import CostReport, Pricing, UsageLedger, UsageRecord, cost_report

__all__ = [
    "AgentKind",
    "AgentResponse",
    "AgentSuite",
    "Alignment",
    "CannedTransport",
    "ChatClient",
    "ChatRequest",
    "CostReport",
    "HttpTransport",
    "LlmAgents",
    "Pricing",
    "REQUIRED_FIELDS",
    "ResponseCache",
    "SYSTEM_PROMPTS",
    "Transport",
    "USER_TEMPLATES",
    "UqeAssessment",
    "UsageLedger",
    "UsageRecord",
    "Variant",
    "VariantOrigin",
    "VariantSet",
    "coerce_agent_kind",
    "cost_report",
    "cue_pairs_json",
    "extract_json",
    "render_prompt",
    "request_key",
    "wrap_completion",
]
