"""Reading and writing system instances as line-based text files.

An instance bundles a system with a source and a target configuration:

    dimension 3
    transition a 1 0 0
    transition b -1 1 0
    transition c 0 -1 1
    source 0 0 0
    target 0 1/4 1/4

Fields appear in that order, one per line, tokens separated by whitespace.
Rationals are written "p/q" or "n". Blank lines and "#" comments are
accepted on input; rendering emits the canonical form above, so parsing a
canonical file and rendering it back is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cvas import Cvas, CvasError, config
from .rational import RationalSyntaxError, format_rational, parse_rational


class InstanceSyntaxError(ValueError):
    """Malformed instance text; carries the 1-based line number."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


@dataclass(frozen=True)
class Instance:
    """A system together with its source and target configurations."""

    system: Cvas
    source: tuple
    target: tuple

    @staticmethod
    def of(system: Cvas, source, target) -> "Instance":
        src = config(source)
        tgt = config(target)
        if len(src) != system.dim or len(tgt) != system.dim:
            raise CvasError("configuration arity differs from the dimension")
        return Instance(system, src, tgt)


def parse_instance(text: str) -> Instance:
    """Parse instance text, reporting the offending line on any error."""
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.partition("#")[0].strip()
        if body:
            lines.append((number, body.split()))
    cursor = 0

    def take(field: str):
        nonlocal cursor
        if cursor >= len(lines):
            last = lines[-1][0] if lines else 1
            raise InstanceSyntaxError(last, f"missing {field} line")
        number, tokens = lines[cursor]
        cursor += 1
        return number, tokens

    number, tokens = take("dimension")
    if tokens[0] != "dimension" or len(tokens) != 2 or not tokens[1].isdigit():
        raise InstanceSyntaxError(number, "expected 'dimension N'")
    dim = int(tokens[1])

    transitions = []
    while cursor < len(lines) and lines[cursor][1][0] == "transition":
        number, tokens = take("transition")
        if len(tokens) < 2:
            raise InstanceSyntaxError(number, "transition needs a label")
        if len(tokens) != 2 + dim:
            raise InstanceSyntaxError(
                number, f"transition {tokens[1]!r} needs {dim} integer components"
            )
        effect = []
        for tok in tokens[2:]:
            stripped = tok.lstrip("+-")
            if not stripped.isdigit() or (tok[0] in "+-" and not stripped):
                raise InstanceSyntaxError(number, f"effect component {tok!r} is not an integer")
            effect.append(int(tok))
        transitions.append((number, tokens[1], tuple(effect)))

    def vector(field: str) -> tuple:
        number, tokens = take(field)
        if tokens[0] != field:
            raise InstanceSyntaxError(number, f"expected {field!r}, got {tokens[0]!r}")
        if len(tokens) != 1 + dim:
            raise InstanceSyntaxError(number, f"{field} needs {dim} components")
        values = []
        for tok in tokens[1:]:
            try:
                values.append(parse_rational(tok))
            except RationalSyntaxError as err:
                raise InstanceSyntaxError(number, str(err)) from err
        try:
            return config(values)
        except CvasError as err:
            raise InstanceSyntaxError(number, str(err)) from err

    source = vector("source")
    target = vector("target")
    if cursor < len(lines):
        number, tokens = lines[cursor]
        raise InstanceSyntaxError(number, f"unexpected {tokens[0]!r} after target")

    try:
        system = Cvas.of(dim, [(label, effect) for _, label, effect in transitions])
    except CvasError as err:
        raise InstanceSyntaxError(transitions[-1][0] if transitions else 1, str(err)) from err
    return Instance.of(system, source, target)


def render_instance(instance: Instance) -> str:
    """Canonical text form; rationals in lowest terms, fields in fixed order."""
    out = [f"dimension {instance.system.dim}"]
    for t in instance.system.transitions:
        out.append(" ".join(["transition", t.label] + [str(v) for v in t.effect]))
    out.append(" ".join(["source"] + [format_rational(v) for v in instance.source]))
    out.append(" ".join(["target"] + [format_rational(v) for v in instance.target]))
    return "\n".join(out) + "\n"


def load_instance(path) -> Instance:
    with open(path, "r", encoding="ascii") as handle:
        return parse_instance(handle.read())


def save_instance(path, instance: Instance) -> None:
    with open(path, "w", encoding="ascii") as handle:
        handle.write(render_instance(instance))
