"""Four-segment prompt envelope: context, query, persona, instruction.

Every character call is composed from exactly these four tagged segments, in
this order, so tests can parse a captured prompt back into its parts and
assert what each agent actually saw.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractError

CTX = "CTX"
QRY = "QRY"
PERSONA = "PERSONA"
INSTR = "INSTR"

SEGMENT_ORDER: tuple[str, ...] = (CTX, QRY, PERSONA, INSTR)

_WIRE_HEADER = "<<{tag}>>"


@dataclass(frozen=True)
class PromptEnvelope:
    """Ordered (tag, text) segments; exactly CTX, QRY, PERSONA, INSTR."""

    segments: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        tags = tuple(tag for tag, _ in self.segments)
        if tags != SEGMENT_ORDER:
            raise ContractError(
                f"envelope must carry segments {SEGMENT_ORDER} in order, got {tags}"
            )

    @classmethod
    def build(cls, context: str, query: str, persona: str, instruction: str) -> "PromptEnvelope":
        return cls(((CTX, context), (QRY, query), (PERSONA, persona), (INSTR, instruction)))

    def text(self, tag: str) -> str:
        for seg_tag, seg_text in self.segments:
            if seg_tag == tag:
                return seg_text
        raise ContractError(f"unknown segment tag {tag!r}")

    def render_wire(self) -> str:
        """Flatten to the line-delimited wire form used by spies and remotes."""
        parts = []
        for tag, text in self.segments:
            parts.append(_WIRE_HEADER.format(tag=tag))
            parts.append(text)
        return "\n".join(parts)

    @classmethod
    def parse_wire(cls, wire: str) -> "PromptEnvelope":
        """Inverse of render_wire for segment texts that contain no header lines."""
        headers = {SEGMENT_ORDER[i]: _WIRE_HEADER.format(tag=SEGMENT_ORDER[i]) for i in range(4)}
        segments: list[tuple[str, str]] = []
        current_tag: str | None = None
        buffer: list[str] = []
        for line in wire.split("\n"):
            matched = next((t for t, h in headers.items() if line == h), None)
            if matched is not None:
                if current_tag is not None:
                    segments.append((current_tag, "\n".join(buffer)))
                current_tag = matched
                buffer = []
            else:
                buffer.append(line)
        if current_tag is not None:
            segments.append((current_tag, "\n".join(buffer)))
        return cls(tuple(segments))
