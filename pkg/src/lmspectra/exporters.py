import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from jinja2 import Environment, FileSystemLoader

from lmspectra import settings
from lmspectra.adjacency import SparseSymMatrix
from lmspectra.errors import DenseCapExceededError
from lmspectra.graphs import RootedGraph
from lmspectra.lm_types import ESD, Histogram, MomentPolynomial

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).parent / "templates"


class ReportRenderer:
    """
    文本类产物的模板渲染 (DOT 图, 矩表)
    """

    def __init__(self, template_dir: Union[str, Path] = TEMPLATE_DIR):
        self.template_dir = Path(template_dir)
        self.jinja_env = Environment(
            loader=FileSystemLoader(self.template_dir),
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )

    def render(self, template_name: str, context: Dict[str, Any]) -> str:
        try:
            template = self.jinja_env.get_template(template_name)
            content = template.render(**context)
            logger.debug(f"[EXPORT] rendered template: {template_name}")
            return content
        except Exception as e:
            logger.error(f"[EXPORT] failed to render template {template_name}: {str(e)}", exc_info=True)
            raise


_renderer: Optional[ReportRenderer] = None


def get_renderer() -> ReportRenderer:
    global _renderer
    if _renderer is None:
        _renderer = ReportRenderer()
    return _renderer


def to_json(payload: Any) -> str:
    """Stable JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def esd_to_csv(esd: ESD) -> str:
    buffer = io.StringIO()
    meta = esd.meta
    buffer.write(f"# n={meta.n} d={meta.d} p={meta.p} seed={meta.seed} kind={meta.kind.value} reflected={meta.reflected}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["index", "eigenvalue"])
    for i, value in enumerate(esd.eigenvalues):
        writer.writerow([i, repr(float(value))])
    return buffer.getvalue()


def esd_to_json(esd: ESD) -> str:
    return to_json(esd.model_dump(mode="json"))


def histogram_to_json(histogram: Histogram) -> str:
    return to_json(histogram.model_dump(mode="json"))


def graph_record(graph: RootedGraph) -> dict:
    record = graph.to_record()
    return {
        "n_vertices": graph.num_vertices,
        "root": graph.root,
        "edges": record["edges"],
        "depths": [graph.depths[v] for v in range(graph.num_vertices)],
        "vertices": record["vertices"],
    }


def graph_to_json(graph: RootedGraph) -> str:
    return to_json(graph_record(graph))


def graph_to_dot(graph: RootedGraph, name: str = "ball") -> str:
    record = graph.to_record()
    vertices = [{"id": v["id"], "label": v.get("label", str(v["id"])), "side": v.get("side")}
                for v in record["vertices"]]
    return get_renderer().render("rooted_graph.dot.j2", {
        "name": name, "root": graph.root, "vertices": vertices, "edges": record["edges"],
    })


def matrix_to_coordinate_text(matrix: SparseSymMatrix, dense_cap: Optional[int] = None) -> str:
    """
    Symmetric coordinate format: a header line, then "i j value" (1-based, i <= j).

    Centred kinds have no zero pattern and are written from the dense matrix.
    """
    meta = matrix.meta()
    lines = [f"%lm-spectra sym {meta.n} {meta.d} {meta.p} {meta.seed} {meta.kind.value}"]
    if matrix.shift:
        cap = settings.DENSE_CAP if dense_cap is None else dense_cap
        if matrix.dim > cap:
            raise DenseCapExceededError(f"centred matrix of dimension {matrix.dim} is above the dense cap {cap}")
        rows, cols = np.triu_indices(matrix.dim)
        values = matrix.to_dense()[rows, cols]
    else:
        upper = matrix.base.tocoo()
        keep = upper.row <= upper.col
        order = np.lexsort((upper.col[keep], upper.row[keep]))
        rows, cols, values = upper.row[keep][order], upper.col[keep][order], upper.data[keep][order]
    lines.append(f"{matrix.dim} {matrix.dim} {len(values)}")
    lines.extend(f"{i + 1} {j + 1} {v:.17g}" for i, j, v in zip(rows.tolist(), cols.tolist(), values.tolist()))
    return "\n".join(lines) + "\n"


def moment_table_text(d: int, table: Dict[int, MomentPolynomial]) -> str:
    ks = sorted(table)
    rows = sorted({s for poly in table.values() for s in poly.coefficients}) or [d + 1]
    width = max(6, max((len(str(c)) for poly in table.values() for c in poly.coefficients.values()), default=1) + 2)
    return get_renderer().render("moment_table.txt.j2", {
        "d": d, "ks": ks, "rows": rows, "width": width,
        "table": {k: table[k].coefficients for k in ks},
        "betas": {k: table[k].value(1) for k in ks},
    })


def write_artifact(content: str, out: Optional[Union[str, Path]] = None) -> str:
    """Write to `out`, or to stdout when no path is given; returns where it went."""
    if out is None or str(out) == "-":
        sys.stdout.write(content)
        sys.stdout.flush()
        return "<stdout>"
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content, encoding="utf-8")
    logger.info(f"[EXPORT] wrote {len(content)} bytes to {path}")
    return str(path)
