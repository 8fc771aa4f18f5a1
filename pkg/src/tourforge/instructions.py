"""Turn trajectories into natural-language instructions.

Templates are fill-in-the-blank lines using literal {NP} and {VP}
placeholders, one template per line. Room nodes become noun captions,
movements between consecutive room nodes become one of three action
words, and each action lands in the verb blank closest to its noun
blank.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import IO, Iterable, Sequence

from .errors import GenerationError, InputError, PairSkip, TemplateError
from .trajectories import Trajectory, TrajectoryNode

NOUN = "noun"
VERB = "verb"

ACTION_TEXTS = {"forward": "go forward", "left": "turn left", "right": "turn right"}

FORM_ROOM_WITH_OBJECT = "room_with_object"
FORM_ROOM_ONLY = "room_only"
FORM_OBJECT_ONLY = "object_only"
CAPTION_FORMS = (FORM_ROOM_WITH_OBJECT, FORM_ROOM_ONLY, FORM_OBJECT_ONLY)

_PLACEHOLDER = re.compile(r"\{NP\}|\{VP\}")

# yaw difference (degrees, wrapped into (-180, 180]) beyond which a
# movement counts as a turn
TURN_THRESHOLD_DEG = 30.0


@dataclass(frozen=True)
class Blank:
    position: int
    kind: str


@dataclass(frozen=True)
class InstructionTemplate:
    template_id: str
    text: str
    blanks: tuple[Blank, ...]

    @property
    def noun_count(self) -> int:
        return sum(1 for b in self.blanks if b.kind == NOUN)

    @property
    def verb_count(self) -> int:
        return sum(1 for b in self.blanks if b.kind == VERB)


@dataclass(frozen=True)
class NodeCaption:
    room: str
    object: str | None
    form: str
    text: str


@dataclass(frozen=True)
class PathInstructionPair:
    pair_id: str
    trajectory_id: str
    template_id: str
    instruction: str
    captions: tuple[NodeCaption, ...]
    actions: tuple[str, ...]  # action keys: forward / left / right


@dataclass
class TemplateReport:
    accepted: int = 0
    rejected: list[dict] = field(default_factory=list)


def parse_templates(
    lines: Iterable[str] | IO[str], report: TemplateReport | None = None
) -> list[InstructionTemplate]:
    """Parse a template file. Lines whose blank counts break the
    verb = noun - 1 rule go to the report instead of failing the parse;
    an entirely empty file is an error."""
    templates: list[InstructionTemplate] = []
    report = report if report is not None else TemplateReport()
    saw_any = False
    for line_no, raw in enumerate(lines, start=1):
        text = raw.rstrip("\n")
        if not text.strip():
            continue
        saw_any = True
        blanks = tuple(
            Blank(m.start(), NOUN if m.group() == "{NP}" else VERB)
            for m in _PLACEHOLDER.finditer(text)
        )
        template = InstructionTemplate(f"t{line_no:05d}", text, blanks)
        if template.noun_count < 1:
            report.rejected.append({"line": line_no, "reason": "no noun blank"})
            continue
        if template.verb_count != template.noun_count - 1:
            report.rejected.append(
                {
                    "line": line_no,
                    "reason": f"{template.verb_count} verb blanks for "
                    f"{template.noun_count} noun blanks",
                }
            )
            continue
        templates.append(template)
        report.accepted += 1
    if not saw_any:
        raise InputError("template file contains no templates")
    return templates


def load_templates(path: str | Path, report: TemplateReport | None = None) -> list[InstructionTemplate]:
    with open(path, encoding="utf-8") as fh:
        return parse_templates(fh, report)


def caption_node(node: TrajectoryNode, rng: Random) -> NodeCaption:
    """Caption a room node from its room type and best-scored object.

    With an object available the form is drawn uniformly from the three
    variants; without one the room label stands alone.
    """
    room = node.view.room_type
    top = node.view.object_union[0][0] if node.view.object_union else None
    form = rng.choice(CAPTION_FORMS) if top is not None else FORM_ROOM_ONLY
    if form == FORM_ROOM_WITH_OBJECT:
        return NodeCaption(room=room, object=top, form=form, text=f"{room} with {top}")
    if form == FORM_OBJECT_ONLY:
        return NodeCaption(room=room, object=top, form=form, text=str(top))
    return NodeCaption(room=room, object=None, form=form, text=room)


def wrap_half_closed(deg: float) -> float:
    """Wrap an angle difference into (-180, 180]."""
    return 180.0 - ((180.0 - deg) % 360.0)


def infer_action(node_a: TrajectoryNode, node_b: TrajectoryNode) -> str:
    """Action key for moving from node_a to node_b.

    Prefers node_a's annotated action; falls back to the yaw change
    (left below -30 degrees, right above +30, forward between).
    """
    if node_a.keyframe.action_to_next is not None:
        return node_a.keyframe.action_to_next
    yaw_a = node_a.keyframe.yaw_deg
    yaw_b = node_b.keyframe.yaw_deg
    if yaw_a is None or yaw_b is None:
        raise PairSkip(
            f"no action label and missing yaw between frames "
            f"{node_a.keyframe.frame_index} and {node_b.keyframe.frame_index}"
        )
    delta = wrap_half_closed(yaw_b - yaw_a)
    if delta < -TURN_THRESHOLD_DEG:
        return "left"
    if delta > TURN_THRESHOLD_DEG:
        return "right"
    return "forward"


def fill_template(
    template: InstructionTemplate,
    captions: Sequence[NodeCaption],
    actions: Sequence[str],
) -> str:
    """Fill noun blanks with captions in order; each noun blank but the
    last sends its action to the nearest still-unfilled verb blank
    (character distance between blank starts on the original text, ties
    to the earlier blank)."""
    noun_blanks = [i for i, b in enumerate(template.blanks) if b.kind == NOUN]
    verb_blanks = [i for i, b in enumerate(template.blanks) if b.kind == VERB]
    if len(captions) != len(noun_blanks):
        raise TemplateError(
            f"template {template.template_id} has {len(noun_blanks)} noun blanks, "
            f"got {len(captions)} captions"
        )
    if len(actions) != len(verb_blanks):
        raise TemplateError(
            f"template {template.template_id} has {len(verb_blanks)} verb blanks, "
            f"got {len(actions)} actions"
        )

    fills: dict[int, str] = {}
    for blank_idx, caption in zip(noun_blanks, captions):
        fills[blank_idx] = caption.text
    unfilled_verbs = list(verb_blanks)
    for noun_idx, action in zip(noun_blanks[:-1], actions):
        noun_pos = template.blanks[noun_idx].position
        chosen = min(unfilled_verbs, key=lambda v: (abs(template.blanks[v].position - noun_pos), v))
        unfilled_verbs.remove(chosen)
        fills[chosen] = ACTION_TEXTS[action]

    out: list[str] = []
    cursor = 0
    for i, blank in enumerate(template.blanks):
        out.append(template.text[cursor : blank.position])
        out.append(fills[i])
        cursor = blank.position + 4  # len("{NP}") == len("{VP}")
    out.append(template.text[cursor:])
    return "".join(out)


def generate_pair(
    pair_id: str,
    trajectory: Trajectory,
    templates: Sequence[InstructionTemplate],
    rng: Random,
) -> PathInstructionPair:
    """Instruction for one trajectory: uniform template with matching
    noun arity, captions from room nodes in order, actions between
    consecutive room nodes."""
    rooms = trajectory.room_nodes()
    r = len(rooms)
    matching = [t for t in templates if t.noun_count == r]
    if not matching:
        raise GenerationError(f"no template with {r} noun blanks")
    template = matching[rng.randrange(len(matching))]
    captions = tuple(caption_node(node, rng) for node in rooms)
    actions = tuple(infer_action(rooms[i], rooms[i + 1]) for i in range(r - 1))
    instruction = fill_template(template, captions, actions)
    return PathInstructionPair(
        pair_id=pair_id,
        trajectory_id=trajectory.trajectory_id,
        template_id=template.template_id,
        instruction=instruction,
        captions=captions,
        actions=actions,
    )


def pair_record(pair: PathInstructionPair) -> dict:
    """JSON-ready record matching the pairs file schema."""
    return {
        "pair_id": pair.pair_id,
        "trajectory_id": pair.trajectory_id,
        "template_id": pair.template_id,
        "instruction": pair.instruction,
        "captions": [
            {"room": c.room, "object": c.object, "form": c.form, "text": c.text}
            for c in pair.captions
        ],
        "actions": [ACTION_TEXTS[a] for a in pair.actions],
    }
