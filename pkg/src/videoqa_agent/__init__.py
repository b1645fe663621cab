"""Uncertainty-guided tool-calling agent for multiple-choice QA over long videos."""

from .assess import (
    AnswerCandidate,
    AnswerParseError,
    AssessmentDecision,
    assess,
    decide,
    parse_answer_reply,
)
from .bank import (
    MemoryBank,
    MergeOrderError,
    SegmentCaption,
    ToolRecord,
    VideoSummary,
    merge,
    read_snapshot,
    render_for_prompt,
    write_snapshot,
)
from .bench import (
    AblationReport,
    BenchEnvironment,
    DatasetError,
    EvalReport,
    ablation_run,
    evaluate,
    load_dataset,
    tool_call_stats,
)
from .captioning import (
    CAPTION_PLACEHOLDER,
    ClipCaptioner,
    ContextError,
    ScriptedCaptioner,
    WireCaptioner,
    caption_all,
    summarize,
)
from .fusion import (
    Detector,
    EmptyMaskError,
    FusionParams,
    RawDetection,
    TableDetector,
    TableTracker,
    TrackObservation,
    Tracker,
    bbox_from_mask,
    detect_multiround,
    track_by_name,
)
from .gateway import (
    ChatBackend,
    Conversation,
    GatewayConfig,
    GatewayError,
    LlmGateway,
    RemoteBackend,
    ScriptedBackend,
    ScriptExhaustedError,
    TransportError,
    build_gateway,
    script_from_fixture,
)
from .plan import (
    NoActionError,
    Plan,
    PlanningError,
    adjust_plan,
    create_plan,
    parse_action,
)
from .prompts import load_prompt, render_prompt
from .protocol import (
    BBox,
    CaptionClause,
    CaptionFrame,
    DetectFrame,
    DetInfo,
    FrameRange,
    InvalidParameterError,
    MalformedRangeError,
    MissingParameterError,
    ProtocolError,
    RangeBoundsError,
    RangeOrderError,
    ToolCommand,
    ToolKind,
    ToolReturn,
    TrackPoint,
    UnknownToolError,
    format_caption_clauses,
    parse_caption_confidences,
    parse_command,
    parse_frame_range,
    parse_wire_request,
    parse_wire_response,
    serialize_command,
    serialize_return,
    validate_wire_request,
    validate_wire_response,
    wire_request,
    wire_response,
)
from .questions import MCQItem, QuestionType
from .registry import RegistryError, ToolBackend, ToolRegistry, dispatch
from .segments import (
    SegmentPlan,
    VideoManifest,
    frame_to_time,
    plan_segments,
    read_manifest,
    time_to_frame,
    write_manifest,
)
from .session import (
    AblationFlags,
    SessionConfig,
    SessionError,
    SessionResult,
    SessionState,
    Termination,
    run_session,
)
from .simulated import FaultingBackend, SimulatedToolSuite, load_suite
from .traces import (
    RunTrace,
    event_log_text,
    read_traces,
    scripted_backend_from_trace,
    trace_from_result,
    write_traces,
)

__version__ = "0.1.0"
