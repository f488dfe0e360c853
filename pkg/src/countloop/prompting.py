"""Prompt parsing: free text -> per-category count targets.

The grammar is a sequence of "<count> <noun-phrase>" clauses joined by
"and"/",", optionally preceded by a template head ("A photo of ...") and
optionally followed by prepositional phrases. The final prepositional
phrase doubles as the scene context and as an attribute of the category it
follows. Counts may be digits, articles (a/an -> 1), or number words up to
composed hundreds ("a hundred and seven").
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import JsonError, ParseError, SchemaError

_UNITS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9,
}
_TEENS = {
    "ten": 10, "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
    "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
}
_TENS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}

_PREPOSITIONS = frozenset({
    "in", "on", "at", "over", "under", "with", "near", "inside", "by",
    "against", "beside", "along", "around", "above", "below", "behind",
    "atop", "upon",
})
_SEPARATORS = frozenset({"and", ","})
_DIGIT_RE = re.compile(r"^\d+$")
_TEMPLATE_RE = re.compile(
    r"^\s*(?:(?:a|an|the)\s+)?"
    r"(?:photo(?:graph)?|image|picture|scene|painting|rendering|view)\s+"
    r"(?:of|with|showing|containing|depicting|featuring)\s+",
    re.IGNORECASE,
)

_IRREGULARS: dict[str, str] = json.loads(
    resources.files("countloop.data").joinpath("irregular_plurals.json").read_text()
)
# first mapping per singular wins: "people" beats "persons" for person
_PLURALS: dict[str, str] = {}
for _pl, _sg in _IRREGULARS.items():
    _PLURALS.setdefault(_sg, _pl)


@dataclass
class PromptSpec:
    """Parsed prompt: count targets, per-category attributes, scene context."""

    targets: dict[str, int]
    attributes: dict[str, list[str]] = field(default_factory=dict)
    context: str | None = None
    raw: str = ""

    def total(self) -> int:
        return sum(self.targets.values())

    def to_dict(self) -> dict:
        return {
            "targets": dict(self.targets),
            "attributes": {k: list(v) for k, v in self.attributes.items()},
            "context": self.context,
        }

    @classmethod
    def from_dict(cls, data: dict, raw: str = "") -> "PromptSpec":
        targets = {str(k): int(v) for k, v in data["targets"].items()}
        attrs = {str(k): [str(a) for a in v] for k, v in data.get("attributes", {}).items()}
        context = data.get("context")
        return cls(targets=targets, attributes=attrs, context=context, raw=raw)


def singularize(word: str) -> str:
    """Singularize one lowercase noun via irregular table + suffix rules."""
    if word in _IRREGULARS:
        return _IRREGULARS[word]
    if len(word) > 3 and word.endswith("ies"):
        return word[:-3] + "y"
    if len(word) > 3 and word.endswith("ves"):
        return word[:-3] + "f"
    if word.endswith(("sses", "xes", "ches", "shes", "zes", "oes")):
        return word[:-2]
    if len(word) > 3 and word.endswith("ses"):
        return word[:-1]
    if len(word) > 1 and word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


def pluralize(word: str) -> str:
    """Inverse of singularize for category nouns (exact on the bundled list)."""
    if word in _PLURALS:
        return _PLURALS[word]
    if word.endswith("y") and len(word) > 1 and word[-2] not in "aeiou":
        return word[:-1] + "ies"
    if word.endswith(("s", "x", "z", "ch", "sh", "o")):
        return word + "es"
    if word.endswith("fe"):
        return word[:-2] + "ves"
    return word + "s"


def singularize_phrase(phrase: str) -> str:
    words = phrase.split()
    return " ".join(words[:-1] + [singularize(words[-1])])


def pluralize_phrase(phrase: str) -> str:
    words = phrase.split()
    return " ".join(words[:-1] + [pluralize(words[-1])])


def _parse_number(tokens: list[str], i: int) -> tuple[int, int] | None:
    """Parse a count starting at tokens[i]; returns (value, tokens consumed)."""
    tok = tokens[i]
    if _DIGIT_RE.match(tok):
        return int(tok), 1

    def sub_hundred(j):
        if j >= len(tokens):
            return None
        t = tokens[j]
        if "-" in t:
            parts = t.split("-")
            if len(parts) == 2 and parts[0] in _TENS and parts[1] in _UNITS:
                return _TENS[parts[0]] + _UNITS[parts[1]], 1
            return None
        if t in _TEENS:
            return _TEENS[t], 1
        if t in _TENS:
            if j + 1 < len(tokens) and tokens[j + 1] in _UNITS:
                return _TENS[t] + _UNITS[tokens[j + 1]], 2
            return _TENS[t], 1
        if t in _UNITS:
            return _UNITS[t], 1
        return None

    base = None
    used = 0
    if tok in ("a", "an"):
        if i + 1 < len(tokens) and tokens[i + 1] == "hundred":
            base, used = 1, 1
        else:
            return 1, 1
    else:
        small = sub_hundred(i)
        if small is None:
            if tok == "hundred":
                base, used = 1, 0
            else:
                return None
        else:
            base, used = small

    j = i + used
    if j < len(tokens) and tokens[j] == "hundred":
        value = base * 100
        j += 1
        if j + 1 < len(tokens) and tokens[j] == "and":
            rest = sub_hundred(j + 1)
            if rest is not None:
                return value + rest[0], (j + 1 + rest[1]) - i
        return value, j - i
    if used == 0:
        return None
    return base, used


def _tokenize(text: str) -> list[str]:
    text = re.sub(r"[.!?;]+$", "", text.strip())
    text = text.replace(",", " , ")
    return [t for t in text.split() if t]


def parse_prompt(text: str) -> PromptSpec:
    """Parse a scene prompt into a PromptSpec.

    Raises ParseError when no countable "<count> <noun>" clause is found,
    when a count is zero, or on uncountable measure phrases ("a crowd of
    people").
    """
    if not text or not text.strip():
        raise ParseError("empty prompt")
    raw = text
    lowered = _TEMPLATE_RE.sub("", text.lower())
    tokens = _tokenize(lowered)

    targets: dict[str, int] = {}
    attributes: dict[str, list[str]] = {}
    context: str | None = None
    last_category: str | None = None
    i = 0
    n = len(tokens)
    while i < n:
        if tokens[i] in _SEPARATORS:
            i += 1
            continue
        num = _parse_number(tokens, i)
        if num is None:
            if tokens[i] in _PREPOSITIONS and last_category is not None:
                phrase_end = _find_clause_break(tokens, i)
                pp = " ".join(t for t in tokens[i:phrase_end] if t != ",")
                attributes.setdefault(last_category, []).append(pp)
                if phrase_end >= n:
                    context = pp
                i = phrase_end
                continue
            # ungrammatical filler before the first clause is skipped; the
            # no-clause case is rejected after the loop
            i += 1
            continue
        count, consumed = num
        i += consumed
        phrase_tokens: list[str] = []
        while i < n:
            tok = tokens[i]
            if tok in _SEPARATORS:
                nxt = i + 1
                while nxt < n and tokens[nxt] in _SEPARATORS:
                    nxt += 1
                if nxt < n and _parse_number(tokens, nxt) is not None:
                    break
                if tok == "and":
                    phrase_tokens.append(tok)
                i += 1
                continue
            if tok in _PREPOSITIONS:
                break
            phrase_tokens.append(tok)
            i += 1
        if not phrase_tokens:
            raise ParseError(f"count {count} is not followed by a noun")
        if "of" in phrase_tokens:
            raise ParseError(
                "uncountable measure phrase: " + " ".join(phrase_tokens)
            )
        if count < 1:
            raise ParseError(f"count for {' '.join(phrase_tokens)} must be >= 1")
        category = singularize_phrase(" ".join(phrase_tokens))
        targets[category] = targets.get(category, 0) + count
        last_category = category

    if not targets:
        raise ParseError(f"no countable noun clause in: {raw!r}")
    return PromptSpec(targets=targets, attributes=attributes, context=context, raw=raw)


def _find_clause_break(tokens: list[str], start: int) -> int:
    """End of a prepositional phrase: next separator that introduces a count."""
    i = start
    n = len(tokens)
    while i < n:
        if tokens[i] in _SEPARATORS:
            nxt = i + 1
            while nxt < n and tokens[nxt] in _SEPARATORS:
                nxt += 1
            if nxt < n and _parse_number(tokens, nxt) is not None:
                return i
        i += 1
    return n


def iter_json_objects(text: str):
    """Yield parsed top-level JSON objects found anywhere in text, in order."""
    decoder = json.JSONDecoder()
    pos = 0
    n = len(text)
    while pos < n:
        start = text.find("{", pos)
        if start < 0:
            return
        try:
            obj, end = decoder.raw_decode(text, start)
        except ValueError:
            pos = start + 1
            continue
        if isinstance(obj, dict):
            yield obj
        pos = start + max(end - start, 1)


_TRAILING_COMMA_RE = re.compile(r",(\s*[}\]])")


def parse_llm_json(text: str) -> PromptSpec:
    """Extract the first schema-valid PromptSpec JSON object from a chat reply.

    Accepts either {"targets": {...}} directly or the planner-style
    {"objects": [...]} form (targets derived by counting categories).
    Surrounding prose and code fences are ignored; a lenient second pass
    strips trailing commas.
    """
    found_any = False
    for attempt in (text, _TRAILING_COMMA_RE.sub(r"\1", text)):
        for obj in iter_json_objects(attempt):
            found_any = True
            spec = _spec_from_object(obj, raw=text)
            if spec is not None:
                return spec
        if found_any:
            break
    if found_any:
        raise SchemaError("no JSON object with 'targets' or 'objects' keys")
    raise JsonError("no parseable JSON object in reply")


def _spec_from_object(obj: dict, raw: str) -> PromptSpec | None:
    if "targets" in obj and isinstance(obj["targets"], dict) and obj["targets"]:
        targets = {}
        for key, val in obj["targets"].items():
            if not isinstance(val, (int, float)) or int(val) < 1:
                return None
            targets[singularize_phrase(str(key).strip().lower())] = int(val)
        attrs = {
            str(k).strip().lower(): [str(a) for a in v]
            for k, v in obj.get("attributes", {}).items()
        } if isinstance(obj.get("attributes"), dict) else {}
        return PromptSpec(targets=targets, attributes=attrs,
                          context=obj.get("context"), raw=raw)
    if "objects" in obj and isinstance(obj["objects"], list) and obj["objects"]:
        targets: dict[str, int] = {}
        attrs: dict[str, list[str]] = {}
        for item in obj["objects"]:
            if not isinstance(item, dict):
                return None
            category = item.get("category")
            if not category:
                ident = str(item.get("id", "")).strip()
                category = re.sub(r"[\s_]*\d+$", "", ident)
            if not category:
                return None
            category = str(category).strip().lower()
            targets[category] = targets.get(category, 0) + 1
            for attr in item.get("attributes", []) or []:
                bucket = attrs.setdefault(category, [])
                if str(attr) not in bucket:
                    bucket.append(str(attr))
        return PromptSpec(targets=targets, attributes=attrs,
                          context=obj.get("context"), raw=raw)
    return None
