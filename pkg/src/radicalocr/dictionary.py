"""Character decomposition dictionary.

A dictionary maps character categories to an ordered list of radicals and a
structure kind. Slot order is significant: the first radical of an up-down
character is the top one.

File format (UTF-8, one record per line)::

    # comment
    !radical swine swine (pig)
    !structure UD 2
    chase<TAB>UD<TAB>swine,toe
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, UnknownCharacter, ValidationError

log = logging.getLogger(__name__)

SINGLE = "Single"


@dataclass(frozen=True)
class Radical:
    id: str
    display_name: str = ""


@dataclass(frozen=True)
class CharacterEntry:
    character: str
    structure: str
    radicals: tuple[str, ...]

    @property
    def key(self):
        return self.radicals, self.structure


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Immutable decomposition dictionary with forward and inverse indices.

    ``radicals`` and ``structures`` preserve declaration order; ``structures``
    maps a kind to its slot count. ``entries`` preserves file order, which is
    also the category order used for seen/unseen splits.
    """

    radicals: dict[str, Radical]
    structures: dict[str, int]
    entries: tuple[CharacterEntry, ...]
    _by_char: dict = field(init=False, repr=False)
    _by_key: dict = field(init=False, repr=False)
    _by_radical: dict = field(init=False, repr=False)

    def __post_init__(self):
        by_char = defaultdict(list)
        by_key = defaultdict(list)
        by_radical = defaultdict(list)
        for e in self.entries:
            by_char[e.character].append(e)
            if e.character not in by_key[e.key]:
                by_key[e.key].append(e.character)
            for r in dict.fromkeys(e.radicals):
                if e.character not in by_radical[r]:
                    by_radical[r].append(e.character)
        object.__setattr__(self, "_by_char", dict(by_char))
        object.__setattr__(self, "_by_key", {k: tuple(v) for k, v in by_key.items()})
        object.__setattr__(self, "_by_radical", {k: tuple(v) for k, v in by_radical.items()})

    def __eq__(self, other):
        if not isinstance(other, Dictionary):
            return NotImplemented
        return (
            list(self.radicals.values()) == list(other.radicals.values())
            and list(self.structures.items()) == list(other.structures.items())
            and self.entries == other.entries
        )

    def __len__(self):
        return len(self.entries)

    def __contains__(self, character):
        return character in self._by_char

    @property
    def characters(self):
        """Distinct character labels in file order."""
        return list(self._by_char)

    def entry(self, character):
        try:
            return self._by_char[character][0]
        except KeyError:
            raise UnknownCharacter(character) from None

    def entries_for(self, character):
        return list(self._by_char.get(character, ()))

    def characters_with_radical(self, radical):
        return list(self._by_radical.get(radical, ()))

    def get_num(self, character):
        """Radical count of ``character`` (first entry when it has variants)."""
        return len(self.entry(character).radicals)

    def search_dic(self, radicals, structure):
        """All characters whose slot-ordered decomposition is exactly
        ``radicals`` under ``structure``; empty tuple when none match."""
        if not radicals:
            raise ValueError("radical list must be non-empty")
        return self._by_key.get((tuple(radicals), structure), ())

    def subset(self, characters):
        keep = set(characters)
        return Dictionary(
            dict(self.radicals),
            dict(self.structures),
            tuple(e for e in self.entries if e.character in keep),
        )


def validate(d: Dictionary) -> list[str]:
    """Return every invariant violation as a readable string (empty if valid)."""
    problems = []
    for kind, slots in d.structures.items():
        if kind == SINGLE and slots != 1:
            problems.append(f"structure {kind} must have exactly 1 slot, declares {slots}")
        elif kind != SINGLE and slots < 2:
            problems.append(f"structure {kind} must have >= 2 slots, declares {slots}")
    seen = set()
    for e in d.entries:
        where = f"entry {e.character!r}"
        if not e.character:
            problems.append("entry with empty character label")
        if e.structure not in d.structures:
            problems.append(f"{where}: undeclared structure {e.structure!r}")
        elif len(e.radicals) != d.structures[e.structure]:
            problems.append(
                f"{where}: structure {e.structure} has {d.structures[e.structure]} slots "
                f"but {len(e.radicals)} radicals given"
            )
        if (e.structure == SINGLE) != (len(e.radicals) == 1):
            problems.append(f"{where}: Single structure iff exactly one radical")
        if e.structure == SINGLE and e.radicals and e.radicals[0] != e.character:
            problems.append(f"{where}: single-radical character must use its own label as radical")
        for r in e.radicals:
            if r not in d.radicals:
                problems.append(f"{where}: undeclared radical {r!r}")
        triple = (e.character, e.radicals, e.structure)
        if triple in seen:
            problems.append(f"{where}: duplicate decomposition {e.structure}({','.join(e.radicals)})")
        seen.add(triple)
    return problems


def build_dictionary(radicals, structures, entries, check=True) -> Dictionary:
    """Construct from plain values; ``radicals`` may be ids or ``Radical``."""
    rads = {}
    for r in radicals:
        r = r if isinstance(r, Radical) else Radical(r, r)
        rads[r.id] = r
    ents = tuple(
        e if isinstance(e, CharacterEntry) else CharacterEntry(e[0], e[1], tuple(e[2]))
        for e in entries
    )
    d = Dictionary(rads, dict(structures), ents)
    if check:
        _raise_if_invalid(d)
    return d


def _raise_if_invalid(d):
    problems = validate(d)
    if problems:
        raise ValidationError(problems[0], problems)
    if len(d.radicals) > len(d.characters) and d.entries:
        log.warning(
            "dictionary declares more radical categories (%d) than characters (%d)",
            len(d.radicals), len(d.characters),
        )


def parse_dictionary(text, path="<string>", check=True) -> Dictionary:
    radicals = {}
    structures = {}
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line.startswith("!"):
            parts = line[1:].split(None, 2)
            if not parts:
                raise ParseError("empty directive", path, lineno)
            directive = parts[0]
            if directive == "radical":
                if len(parts) < 2:
                    raise ParseError("!radical needs an id", path, lineno)
                rid = parts[1]
                if rid in radicals:
                    raise ParseError(f"radical {rid!r} declared twice", path, lineno)
                radicals[rid] = Radical(rid, parts[2].strip() if len(parts) > 2 else rid)
            elif directive == "structure":
                if len(parts) != 3:
                    raise ParseError("!structure needs <kind> <slot_count>", path, lineno)
                try:
                    structures[parts[1]] = int(parts[2])
                except ValueError:
                    raise ParseError(f"bad slot count {parts[2]!r}", path, lineno) from None
            else:
                raise ParseError(f"unknown directive !{directive}", path, lineno)
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError("expected character<TAB>structure<TAB>radicals", path, lineno)
        char, kind, rads = (f.strip() for f in fields)
        radical_ids = tuple(r.strip() for r in rads.split(",") if r.strip())
        if not char or not kind or not radical_ids:
            raise ParseError("empty field", path, lineno)
        entries.append(CharacterEntry(char, kind, radical_ids))
    d = Dictionary(radicals, structures, tuple(entries))
    if check:
        _raise_if_invalid(d)
    return d


def load_dictionary(path, check=True) -> Dictionary:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}", path) from None
    return parse_dictionary(text, str(path), check=check)


def dumps_dictionary(d: Dictionary) -> str:
    lines = []
    for r in d.radicals.values():
        lines.append(f"!radical {r.id} {r.display_name}".rstrip())
    for kind, slots in d.structures.items():
        lines.append(f"!structure {kind} {slots}")
    for e in d.entries:
        lines.append(f"{e.character}\t{e.structure}\t{','.join(e.radicals)}")
    return "\n".join(lines) + "\n"


def save_dictionary(d: Dictionary, path):
    Path(path).write_text(dumps_dictionary(d), encoding="utf-8")
