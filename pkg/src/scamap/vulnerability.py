"""Vulnerable-block identification from annotations and structure."""
from __future__ import annotations

import fnmatch
import json
import re
from dataclasses import dataclass, field

import jsonschema

from .netlist import Design, bit_fanout

DEFAULT_FANOUT_THRESHOLD = 4

ANNOTATION_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "sensitive_nets": {"type": "array", "items": {"type": "string"}},
        "leaky_modules": {"type": "array", "items": {"type": "string"}},
        "intensive_blocks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["pattern"],
                "additionalProperties": False,
                "properties": {"pattern": {"type": "string"}, "io": {"type": "integer"}},
            },
        },
    },
}


class AnnotationError(ValueError):
    pass


def check_glob(pattern: str) -> str:
    """Reject patterns with an unterminated ``[`` class; return the pattern."""
    i = 0
    while i < len(pattern):
        if pattern[i] == "[":
            j = i + 1
            if j < len(pattern) and pattern[j] == "!":
                j += 1
            if j < len(pattern) and pattern[j] == "]":
                j += 1
            close = pattern.find("]", j)
            if close < 0:
                raise AnnotationError(f"invalid glob {pattern!r}: unterminated '['")
            i = close
        i += 1
    if not pattern:
        raise AnnotationError("empty glob pattern")
    re.compile(fnmatch.translate(pattern))
    return pattern


@dataclass(frozen=True)
class IntensivePattern:
    pattern: str
    io: int | None = None

    def __post_init__(self):
        check_glob(self.pattern)
        if self.io is not None and self.io < 1:
            raise AnnotationError(f"intensive block {self.pattern!r}: io must be >= 1")


@dataclass(frozen=True)
class AnnotationSet:
    sensitive_nets: tuple[str, ...] = ()
    leaky_modules: tuple[str, ...] = ()
    intensive_blocks: tuple[IntensivePattern, ...] = ()

    def __post_init__(self):
        for p in self.sensitive_nets:
            check_glob(p)

    def is_sensitive(self, net_name: str) -> bool:
        return any(fnmatch.fnmatchcase(net_name, p) for p in self.sensitive_nets)

    def intensive(self, block_name: str) -> IntensivePattern | None:
        for ip in self.intensive_blocks:
            if fnmatch.fnmatchcase(block_name, ip.pattern) or fnmatch.fnmatchcase(block_name.split(".")[0], ip.pattern):
                return ip
        return None

    def merged(self, other: "AnnotationSet") -> "AnnotationSet":
        return AnnotationSet(self.sensitive_nets + other.sensitive_nets,
                             self.leaky_modules + other.leaky_modules,
                             self.intensive_blocks + other.intensive_blocks)

    def to_dict(self) -> dict:
        return {
            "sensitive_nets": list(self.sensitive_nets),
            "leaky_modules": list(self.leaky_modules),
            "intensive_blocks": [
                {"pattern": ip.pattern} | ({"io": ip.io} if ip.io is not None else {}) for ip in self.intensive_blocks
            ],
        }


def load_annotations(text: str) -> AnnotationSet:
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"annotation file is not JSON: {exc}") from None
    try:
        jsonschema.validate(doc, ANNOTATION_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise AnnotationError(f"annotation schema violation: {exc.message}") from None
    return AnnotationSet(
        tuple(doc.get("sensitive_nets", ())),
        tuple(doc.get("leaky_modules", ())),
        tuple(IntensivePattern(d["pattern"], d.get("io")) for d in doc.get("intensive_blocks", ())),
    )


@dataclass(frozen=True)
class VulnerabilityProfile:
    block_id: int
    SV: int = 0
    IO: int = 0
    F: int = 0
    leaky: bool = False
    io_annotated: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.SV not in (0, 1):
            raise ValueError("SV must be 0 or 1")
        if self.IO < 0 or self.F < 0:
            raise ValueError("IO and F must be >= 0")

    def to_dict(self) -> dict:
        return {"block_id": self.block_id, "SV": self.SV, "IO": self.IO, "F": self.F, "leaky": self.leaky}


def default_io(block) -> int:
    if block.kind == "TABLE":
        return 1 << len(block.inputs)
    return 1


def profile_blocks(design: Design, ann: AnnotationSet | None = None,
                   fanout_threshold: int = DEFAULT_FANOUT_THRESHOLD) -> dict[int, VulnerabilityProfile]:
    """Per-block SV/IO/F/leaky factors, keyed by block id.

    F is the largest bit-level fanout among the block's outputs (bit-blasted
    blocks drive single bits of wider nets).  ``fanout_threshold`` only
    matters to :func:`partition`; it is accepted here so both share a call
    shape.
    """
    ann = ann or AnnotationSet()
    out = {}
    for mod in design.modules.values():
        leaky = mod.name in ann.leaky_modules
        for blk in mod.blocks:
            nets = {b[0] for b in blk.inputs + blk.outputs}
            sv = int(leaky or any(ann.is_sensitive(n) for n in nets))
            ip = ann.intensive(blk.name)
            io = ip.io if ip is not None and ip.io is not None else default_io(blk)
            f = max((bit_fanout(mod, b) for b in blk.outputs), default=0)
            out[blk.id] = VulnerabilityProfile(blk.id, sv, io, f, leaky, ip is not None)
    return out


def partition(design: Design, profiles: dict[int, VulnerabilityProfile],
              fanout_threshold: int = DEFAULT_FANOUT_THRESHOLD) -> tuple[list[int], list[int]]:
    """Split block ids into (vulnerable, conventional), each in block order."""
    vulnerable, conventional = [], []
    for blk in design.blocks:
        p = profiles.get(blk.id)
        if p is None:
            raise KeyError(f"no profile for block {blk.id}")
        hot = p.SV == 1 or p.leaky or (p.io_annotated and p.IO > 0) or p.F >= fanout_threshold
        (vulnerable if hot else conventional).append(blk.id)
    return vulnerable, conventional
