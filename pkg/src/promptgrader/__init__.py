"""Author, deliver, and autograde natural-language programming tasks.

Students describe code in plain English (or prompt for it from worked
examples); a language model turns the description into code; the code
runs against the task's test suite in a subprocess sandbox; attempts
are logged and rolled up into cohort metrics.
"""

from .analytics import (
    CohortSummary,
    SurveyResponse,
    assign_group,
    build_summary,
    compute_group_metrics,
    emit_report,
    filter_cohort,
    load_attempts,
    load_scores,
    load_survey,
    summarize_scores,
)
from .bank import TaskBank, TaskSpec, TestCase, list_tasks, load_bank, self_check
from .errors import PromptGraderError
from .gateway import (
    FixtureStore,
    PromptEnvelope,
    ProviderConfig,
    TranscriptStore,
    build_envelope,
    extract_code,
    submit_prompt,
)
from .grading import Attempt, AttemptStore, GradeResult, GradingEngine, RateLimiter
from .obfuscate import obfuscate_source
from .sandbox import (
    ExecutionResult,
    ResourceLimits,
    execute_test_case,
    prepare_program,
    run_suite,
)
from .values import Compare, Signature

__version__ = "0.1.0"
