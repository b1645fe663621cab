"""Versioned prompt templates.

Templates live as text files next to this module and use {NAME} placeholders.
Substitution is plain string replacement, never str.format: the templates
contain literal braces in the command format examples.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import Mapping

PROMPT_NAMES = (
    "summary",
    "answer",
    "create_plan",
    "adjust_plan",
    "direct_command",
    "caption_confidence",
)

# first line of the egocentric marker note in the summary template; the whole
# block from here down is dropped for third-person captioners
MARKER_NOTE_HEADER = "Note for captions:"


@lru_cache(maxsize=None)
def load_prompt(name: str) -> str:
    if name not in PROMPT_NAMES:
        raise KeyError(f"unknown prompt template {name!r}")
    return (
        resources.files(__package__).joinpath(f"prompts/{name}.txt").read_text()
    ).rstrip("\n")


def render_prompt(template: str, mapping: Mapping[str, str]) -> str:
    text = template
    for key, value in mapping.items():
        text = text.replace("{" + key + "}", value)
    return text


def summary_prompt(captions_block: str, segment_seconds: float, egocentric_markers: bool) -> str:
    """The whole-video summarization prompt.

    The marker note only applies to captioners that emit '#C'/'#O' prefixes;
    for third-person captioners the note would be misleading and is dropped.
    """
    template = load_prompt("summary")
    if not egocentric_markers:
        cut = template.find(MARKER_NOTE_HEADER)
        if cut != -1:
            template = template[:cut].rstrip("\n")
    return render_prompt(template, {"n": f"{segment_seconds:g}", "C": captions_block})


def answer_prompt(bank_block: str, question_block: str) -> str:
    return render_prompt(load_prompt("answer"), {"B": bank_block, "Q": question_block})
