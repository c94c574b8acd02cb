"""File output: atomic writes, canonical JSON, CSV tables and DOT figures."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from typing import Any, Iterable, Sequence

from .glue import GluedTruncation


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def truncation_dot(b: GluedTruncation, blocks: int | None = None) -> str:
    """DOT graph of the first ``blocks`` blocks.

    Blocks are boxed clusters along the bottom row, the u-points sit on a row
    above them, top-cycle edges are blue. Edges leaving the drawn prefix are
    omitted.
    """
    blocks = b.M if blocks is None else blocks
    size = b.prefix_size(blocks)
    lines = [
        "digraph glued {",
        "  rankdir=BT;",
        '  node [shape=circle, fontsize=10];',
    ]
    for j in range(blocks):
        lines.append(f"  subgraph cluster_W{j} {{")
        lines.append(f'    label="W{j} (f={b.f[j]})"; style=filled; fillcolor=gray90;')
        for p in b.block_points(j):
            lines.append(f'    "{b.points[p]}";')
        lines.append("  }")
    us = " ".join(f'"U{j}";' for j in range(blocks))
    lines.append(f"  {{ rank=same; {us} }}")
    for gen in range(b.max_generator + 1):
        seen = set()
        for p, q in b.edges(gen):
            if q < 0 or q >= size or p >= size or p == q:
                continue
            family = b.provenance[(gen, p)]
            pair = (min(p, q), max(p, q))
            if family != "top" and b.step_index(gen, q) == p:
                if pair in seen:
                    continue
                seen.add(pair)
                style = "dir=both"
            else:
                style = "color=blue" if family == "top" else ""
            attrs = f'label="g{gen}"' + (f", {style}" if style else "")
            lines.append(f'  "{b.points[p]}" -> "{b.points[q]}" [{attrs}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
