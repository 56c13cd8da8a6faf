"""Channel documents: a small YAML file with the two transition matrices.

    name: bssc-0.5          # optional
    input_size: 2
    y1:
      - [0.5, 0.5]
      - [0.0, 1.0]
    y2:
      - [1.0, 0.0]
      - [0.5, 0.5]
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .bounds import bssc
from .probcore import PROB_TOL, BroadcastChannel


class ChannelFileError(ValueError):
    pass


def _where(node) -> str:
    return f"line {node.start_mark.line + 1}"


def _scalar_number(node, what: str) -> float:
    if not isinstance(node, yaml.ScalarNode):
        raise ChannelFileError(f"{what} ({_where(node)}): expected a number")
    tag = node.tag.rsplit(":", 1)[-1]
    try:
        if tag in ("bool", "null"):
            raise ValueError
        value = float(node.value)
    except ValueError:
        raise ChannelFileError(f"{what} ({_where(node)}): {node.value!r} is not a number") from None
    if not np.isfinite(value):
        raise ChannelFileError(f"{what} ({_where(node)}): {node.value!r} is not finite")
    return value


def _matrix(node, key: str, input_size: int) -> np.ndarray:
    if not isinstance(node, yaml.SequenceNode):
        raise ChannelFileError(f"field '{key}' ({_where(node)}): expected a list of rows")
    if len(node.value) != input_size:
        raise ChannelFileError(
            f"field '{key}' ({_where(node)}): {len(node.value)} rows for input_size {input_size}"
        )
    rows = []
    width = None
    for x, row in enumerate(node.value):
        what = f"{key} row {x}"
        if not isinstance(row, yaml.SequenceNode) or not row.value:
            raise ChannelFileError(f"{what} ({_where(row)}): expected a non-empty list")
        vals = [_scalar_number(v, what) for v in row.value]
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ChannelFileError(f"{what} ({_where(row)}): {len(vals)} entries, expected {width}")
        if min(vals) < 0:
            raise ChannelFileError(f"{what} ({_where(row)}): negative probability")
        total = sum(vals)
        if abs(total - 1.0) > PROB_TOL:
            raise ChannelFileError(f"{what} ({_where(row)}): sums to {total:.12g}, not 1")
        rows.append(vals)
    return np.array(rows)


def parse_channel(text: str, source: str = "<string>") -> BroadcastChannel:
    try:
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ChannelFileError(f"{source}: YAML syntax error at {where}: {exc.problem}") from None
    if not isinstance(root, yaml.MappingNode):
        raise ChannelFileError(f"{source}: expected a mapping with input_size, y1, y2")
    fields = {k.value: v for k, v in root.value}
    for key in ("input_size", "y1", "y2"):
        if key not in fields:
            raise ChannelFileError(f"{source}: missing field '{key}'")
    unknown = set(fields) - {"name", "input_size", "y1", "y2"}
    if unknown:
        raise ChannelFileError(f"{source}: unknown field(s) {sorted(unknown)}")
    size_node = fields["input_size"]
    if size_node.tag.rsplit(":", 1)[-1] != "int" or int(size_node.value) < 1:
        raise ChannelFileError(f"field 'input_size' ({_where(size_node)}): expected a positive integer")
    n = int(size_node.value)
    y1 = _matrix(fields["y1"], "y1", n)
    y2 = _matrix(fields["y2"], "y2", n)
    name = fields["name"].value if "name" in fields else Path(source).stem
    return BroadcastChannel.from_rows(y1, y2, name=str(name))


def load_channel(spec: str) -> BroadcastChannel:
    """A channel from a file path or the shorthand ``bssc:P``."""
    if spec.startswith("bssc:"):
        try:
            p = float(spec.split(":", 1)[1])
        except ValueError:
            raise ChannelFileError(f"bad crossover in {spec!r}") from None
        if not 0.0 <= p <= 1.0:
            raise ChannelFileError(f"crossover in {spec!r} is outside [0, 1]")
        return bssc(p)
    path = Path(spec)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ChannelFileError(f"cannot read channel file {spec!r}: {exc.strerror}") from None
    return parse_channel(text, str(path))


def dump_channel(ch: BroadcastChannel) -> str:
    doc = {
        "name": ch.name,
        "input_size": ch.input_size,
        "y1": ch.to_y1.rows.tolist(),
        "y2": ch.to_y2.rows.tolist(),
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)
