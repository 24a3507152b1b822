"""Writer and reader for the textual linear-programming file format.

The writer emits the widely understood layout (objective, Subject To,
Bounds, Binaries/Generals, End) with full-precision float literals and one
entity per line; every variable gets an explicit Bounds entry in model
order, which makes export -> parse -> export reproduce the file byte for
byte.  Names using characters outside the format's safe set are
transliterated deterministically and reported in a sidecar map.

The reader understands the subset the writer produces plus common
variations (wrapped constraint lines, =< / => senses, Maximize).
"""

from __future__ import annotations

import math
import re
from typing import Dict, Iterable, List, Optional, Tuple

from .model import EQUAL, GREATER_EQUAL, INF, LESS_EQUAL, MilpError, MipModel

_SAFE_NAME = re.compile(r"[A-Za-z_(){}.,!#$%&;?@'`|~][A-Za-z0-9_(){}.,!#$%&;?@'`|~]*$")
_NUMBER = re.compile(r"[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")
_SENSES = {"<=": LESS_EQUAL, "=<": LESS_EQUAL, ">=": GREATER_EQUAL, "=>": GREATER_EQUAL, "=": EQUAL}


class LpFormatError(MilpError):
    pass


def _fmt(value: float) -> str:
    if value == math.floor(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def sanitize_names(names: Iterable[str]) -> Dict[str, str]:
    """Deterministic transliteration map original -> safe; identity entries omitted."""
    mapping: Dict[str, str] = {}
    used = set()
    for name in names:
        if _SAFE_NAME.match(name) and name not in used:
            used.add(name)
            continue
        base = re.sub(r"[^A-Za-z0-9_(){}.,]", "_", name)
        if not base or base[0].isdigit() or base[0] in "._,":
            base = "x" + base
        candidate = base
        counter = 2
        while candidate in used or candidate in mapping.values():
            candidate = f"{base}_{counter}"
            counter += 1
        mapping[name] = candidate
        used.add(candidate)
    return mapping


def _terms(pairs: List[Tuple[str, float]], head: str) -> List[str]:
    """Render `head: c1 n1 + c2 n2 ...` wrapped to readable line lengths."""
    lines: List[str] = []
    chunk = f" {head}:"
    first = True
    for name, coef in pairs:
        if coef >= 0:
            piece = f" {'' if first else '+ '}{_fmt(coef)} {name}" if not first else f" {_fmt(coef)} {name}"
        else:
            piece = f" - {_fmt(-coef)} {name}"
        first = False
        if len(chunk) + len(piece) > 240:
            lines.append(chunk)
            chunk = "   "
        chunk += piece
    lines.append(chunk)
    return lines


def render_lp(model: MipModel) -> Tuple[str, Dict[str, str]]:
    """LP-format text plus the transliteration sidecar map (may be empty)."""
    rename = sanitize_names(
        [v.name for v in model.variables] + [r.name for r in model.rows]
    )
    vname = lambda n: rename.get(n, n)  # noqa: E731

    out: List[str] = []
    out.append("Minimize")
    obj_pairs = [
        (vname(v.name), v.objective) for v in model.variables if v.objective != 0.0
    ]
    lines = _terms(obj_pairs, "obj") if obj_pairs else [" obj: 0 " + vname(model.variables[0].name) if model.variables else " obj:"]
    if model.objective_constant:
        c = model.objective_constant
        lines[-1] += f" {'+' if c >= 0 else '-'} {_fmt(abs(c))}"
    out.extend(lines)

    out.append("Subject To")
    for row in model.rows:
        pairs = [(vname(model.variables[i].name), coef) for i, coef in row.coeffs]
        if not pairs:  # senseful even when empty: pin a zero term
            pairs = [(vname(model.variables[0].name), 0.0)]
        rendered = _terms(pairs, vname(row.name))
        rendered[-1] += f" {row.sense} {_fmt(row.rhs)}"
        out.extend(rendered)

    out.append("Bounds")
    for v in model.variables:
        name = vname(v.name)
        lo, hi = v.lower, v.upper
        if lo == -INF and hi == INF:
            out.append(f" {name} free")
        elif lo == hi:
            out.append(f" {name} = {_fmt(lo)}")
        elif lo == -INF:
            out.append(f" {name} <= {_fmt(hi)}")
        elif hi == INF:
            out.append(f" {name} >= {_fmt(lo)}")
        else:
            out.append(f" {_fmt(lo)} <= {name} <= {_fmt(hi)}")

    binaries = [
        vname(v.name)
        for v in model.variables
        if v.is_integer and v.lower >= 0 and v.upper <= 1
    ]
    generals = [
        vname(v.name)
        for v in model.variables
        if v.is_integer and not (v.lower >= 0 and v.upper <= 1)
    ]
    if binaries:
        out.append("Binaries")
        for i in range(0, len(binaries), 8):
            out.append(" " + " ".join(binaries[i : i + 8]))
    if generals:
        out.append("Generals")
        for i in range(0, len(generals), 8):
            out.append(" " + " ".join(generals[i : i + 8]))
    out.append("End")
    out.append("")
    return "\n".join(out), rename


def export_lp_format(model: MipModel, destination) -> Dict[str, str]:
    """Write the model to ``destination``; returns the transliteration map.

    When any name needed transliteration a sidecar file
    ``<destination>.names`` is written with one ``<safe> <original>`` pair
    per line.
    """
    text, rename = render_lp(model)
    path = str(destination)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)
    if rename:
        with open(path + ".names", "w", encoding="utf-8") as handle:
            for original, safe in rename.items():
                handle.write(f"{safe} {original}\n")
    return rename


def _tokenize_expr(text: str) -> List[str]:
    text = text.replace("<=", " <= ").replace(">=", " >= ")
    text = text.replace("=<", " =< ").replace("=>", " => ")
    text = re.sub(r"(?<![<>=])=(?![<>=])", " = ", text)
    text = text.replace("+", " + ").replace(":", " : ")
    # '-' only separates when not part of an exponent like 1e-3
    text = re.sub(r"(?<![eE])-", " - ", text)
    return text.split()


def _parse_expression(tokens: List[str], where: str):
    """Tokens -> (ordered (name, coef) pairs, constant)."""
    pairs: List[Tuple[str, float]] = []
    order: Dict[str, int] = {}
    constant = 0.0
    sign = 1.0
    coef: Optional[float] = None
    for tok in tokens:
        if tok == "+":
            if coef is not None:
                constant += sign * coef
            sign, coef = 1.0, None
        elif tok == "-":
            if coef is not None:
                constant += sign * coef
            sign, coef = -1.0, None
        elif _NUMBER.match(tok):
            if coef is None:
                coef = float(tok)
            else:  # two numbers in a row: previous one was a constant
                constant += sign * coef
                coef = float(tok)
        else:
            value = sign * (coef if coef is not None else 1.0)
            if tok in order:
                index = order[tok]
                pairs[index] = (tok, pairs[index][1] + value)
            else:
                order[tok] = len(pairs)
                pairs.append((tok, value))
            sign, coef = 1.0, None
    if coef is not None:
        constant += sign * coef
    return pairs, constant


def parse_lp_format(text: str, name: str = "model") -> MipModel:
    """Parse LP-format text into a fresh (sealed) MipModel."""
    # strip comments, keep line structure
    lines = []
    for raw in text.splitlines():
        body = raw.split("\\", 1)[0].rstrip()
        if body.strip():
            lines.append(body)

    section = None
    sense_obj = 1.0
    objective_tokens: List[str] = []
    constraint_buffers: List[List[str]] = []
    buffer: List[str] = []
    bound_lines: List[List[str]] = []
    binary_names: List[str] = []
    general_names: List[str] = []

    def flush_constraint():
        nonlocal buffer
        if buffer:
            constraint_buffers.append(buffer)
            buffer = []

    for line in lines:
        word = line.strip().lower()
        if word in ("minimize", "maximize", "min", "max"):
            section = "objective"
            sense_obj = 1.0 if word.startswith("min") else -1.0
            continue
        if word in ("subject to", "st", "s.t.", "such that"):
            flush_constraint()
            section = "rows"
            continue
        if word == "bounds":
            flush_constraint()
            section = "bounds"
            continue
        if word in ("binaries", "binary", "bin"):
            flush_constraint()
            section = "binaries"
            continue
        if word in ("generals", "general", "gen", "integers", "integer"):
            flush_constraint()
            section = "generals"
            continue
        if word == "end":
            flush_constraint()
            section = "done"
            continue
        tokens = _tokenize_expr(line)
        if section == "objective":
            objective_tokens.extend(tokens)
        elif section == "rows":
            buffer.extend(tokens)
            if any(t in _SENSES for t in tokens):
                flush_constraint()
        elif section == "bounds":
            bound_lines.append(tokens)
        elif section == "binaries":
            binary_names.extend(line.split())
        elif section == "generals":
            general_names.extend(line.split())
        elif section in (None, "done"):
            raise LpFormatError(f"unexpected content outside sections: {line!r}")

    model = MipModel(name)
    bounds: Dict[str, Tuple[float, float]] = {}

    def ensure(var_name: str) -> int:
        if model.has_variable(var_name):
            return model.variable_index(var_name)
        return model.add_variable(var_name, 0.0, INF)

    # first pass over bounds so variable order follows the Bounds section
    for tokens in bound_lines:
        lo, hi, var_name = _parse_bound_line(tokens)
        if var_name in bounds:
            raise LpFormatError(f"duplicate bounds for {var_name!r}")
        bounds[var_name] = (lo, hi)
        ensure(var_name)

    # objective
    if objective_tokens and objective_tokens[1:2] == [":"]:
        objective_tokens = objective_tokens[2:]
    pairs, constant = _parse_expression(objective_tokens, "objective")
    model.objective_constant = sense_obj * constant
    for var_name, coef in pairs:
        model.set_objective(ensure(var_name), sense_obj * coef)

    # rows
    for tokens in constraint_buffers:
        row_name = None
        if ":" in tokens:
            pos = tokens.index(":")
            if pos != 1:
                raise LpFormatError(f"bad row label in {' '.join(tokens)!r}")
            row_name = tokens[0]
            tokens = tokens[2:]
        sense_positions = [i for i, t in enumerate(tokens) if t in _SENSES]
        if len(sense_positions) != 1:
            raise LpFormatError(f"row needs exactly one sense: {' '.join(tokens)!r}")
        cut = sense_positions[0]
        sense = _SENSES[tokens[cut]]
        lhs, lconst = _parse_expression(tokens[:cut], "row lhs")
        rhs_pairs, rconst = _parse_expression(tokens[cut + 1 :], "row rhs")
        if rhs_pairs:
            raise LpFormatError("variables on the right-hand side are not supported")
        if row_name is None:
            row_name = f"r{model.n_rows}"
        coeffs = [(ensure(var_name), coef) for var_name, coef in lhs]
        model.add_row(row_name, coeffs, sense, rconst - lconst)

    for var_name, (lo, hi) in bounds.items():
        model.set_bounds(model.variable_index(var_name), lo, hi)
    for var_name in binary_names:
        index = ensure(var_name)
        model.variables[index].is_integer = True
        if var_name not in bounds:
            model.set_bounds(index, 0.0, 1.0)
    for var_name in general_names:
        model.variables[ensure(var_name)].is_integer = True
    return model.seal()


def _parse_bound_line(tokens: List[str]) -> Tuple[float, float, str]:
    def num(tok: str) -> float:
        low = tok.lower()
        if low in ("inf", "+inf", "infinity"):
            return INF
        if low == "-inf":
            return -INF
        if not _NUMBER.match(tok):
            raise LpFormatError(f"bad number in bounds: {tok!r}")
        return float(tok)

    # normalize "- inf" style splits back together
    merged: List[str] = []
    i = 0
    while i < len(tokens):
        if tokens[i] in ("-", "+") and i + 1 < len(tokens) and _NUMBER.match(tokens[i + 1]):
            merged.append(tokens[i] + tokens[i + 1])
            i += 2
        elif tokens[i] == "-" and i + 1 < len(tokens) and tokens[i + 1].lower() in ("inf", "infinity"):
            merged.append("-inf")
            i += 2
        else:
            merged.append(tokens[i])
            i += 1

    if len(merged) == 2 and merged[1].lower() == "free":
        return -INF, INF, merged[0]
    if len(merged) == 3 and merged[1] in _SENSES:
        name_first = not _NUMBER.match(merged[0]) and merged[0].lower() not in ("inf", "-inf")
        sense = _SENSES[merged[1]]
        if name_first:
            value = num(merged[2])
            if sense == LESS_EQUAL:
                return -INF, value, merged[0]
            if sense == GREATER_EQUAL:
                return value, INF, merged[0]
            return value, value, merged[0]
        value = num(merged[0])
        if sense == LESS_EQUAL:
            return value, INF, merged[2]
        if sense == GREATER_EQUAL:
            return -INF, value, merged[2]
        return value, value, merged[2]
    if len(merged) == 5 and merged[1] in _SENSES and merged[3] in _SENSES:
        return num(merged[0]), num(merged[4]), merged[2]
    raise LpFormatError(f"unrecognized bounds entry: {' '.join(tokens)!r}")
