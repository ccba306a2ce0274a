"""Heuristic sentence splitting for bridge inputs.

Whitespace runs are collapsed first; sentences end at a terminator
followed by a space (or end of text), with an optional trailing closing
quote or bracket kept on the sentence.  CJK full stops delimit sentences
even without following whitespace.  Empty sentences are dropped.
"""

from __future__ import annotations

_TERMINATORS = set(".!?…")
_CJK_TERMINATORS = set("。！？")
_CLOSERS = set("\"')]’”»")


def split_sentences(text: str, language: str | None = None) -> list[str]:
    """Split a document into an ordered list of sentences."""
    normalized = " ".join(text.split())
    if not normalized:
        return []
    sentences: list[str] = []
    buffer: list[str] = []
    i = 0
    length = len(normalized)
    while i < length:
        char = normalized[i]
        buffer.append(char)
        boundary = False
        if char in _CJK_TERMINATORS:
            boundary = True
        elif char in _TERMINATORS:
            nxt = normalized[i + 1] if i + 1 < length else ""
            if nxt in _CLOSERS:
                after = normalized[i + 2] if i + 2 < length else ""
                if after == " " or after == "":
                    buffer.append(nxt)
                    i += 1
                    boundary = True
            elif nxt == " " or nxt == "":
                boundary = True
        if boundary:
            sentence = "".join(buffer).strip()
            if sentence:
                sentences.append(sentence)
            buffer = []
        i += 1
    tail = "".join(buffer).strip()
    if tail:
        sentences.append(tail)
    return sentences
