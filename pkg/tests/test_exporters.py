import json

import numpy as np
import pytest

from lmspectra.adjacency import build_matrix
from lmspectra.cells import ComplexSample
from lmspectra.errors import DenseCapExceededError
from lmspectra.exporters import esd_to_csv, esd_to_json, graph_to_dot, graph_to_json, histogram_to_json, \
    matrix_to_coordinate_text, moment_table_text, to_json, write_artifact
from lmspectra.graphs import SIDE_CELL, SIDE_RIDGE, BipartiteRootedGraph
from lmspectra.lm_types import ESD, HistogramMode, MatrixKind
from lmspectra.spectra import histogram
from lmspectra.words import moment_table


def test_json_is_stable():
    assert to_json({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'


def test_esd_exports():
    esd = ESD(eigenvalues=[-1.0, 0.0, 2.5])
    lines = esd_to_csv(esd).splitlines()
    assert lines[0] == "# n=None d=None p=None seed=None kind=generic reflected=False"
    assert lines[1:] == ["index,eigenvalue", "0,-1.0", "1,0.0", "2,2.5"]
    assert json.loads(esd_to_json(esd))["eigenvalues"] == [-1.0, 0.0, 2.5]
    panel = json.loads(histogram_to_json(histogram(esd, 2, HistogramMode.PROBABILITY)))
    assert panel["counts"] == [2, 1] and panel["mode"] == "probability"


def _star():
    return BipartiteRootedGraph.from_edges(4, [(0, 1), (1, 2), (1, 3)],
                                           labels=[(1, 2), (1, 2, 3), (1, 3), (2, 3)],
                                           sides=[SIDE_RIDGE, SIDE_CELL, SIDE_RIDGE, SIDE_RIDGE])


def test_graph_exports():
    record = json.loads(graph_to_json(_star()))
    assert record["n_vertices"] == 4
    assert record["depths"] == [0, 1, 2, 2]
    assert record["vertices"][1]["side"] == "U"
    dot = graph_to_dot(_star(), name="star")
    assert dot.startswith('graph "star" {')
    assert '0 [label="{1,2}", style=filled, fillcolor=gold, shape=doublecircle];' in dot
    assert '1 [label="{1,2,3}", shape=box];' in dot
    assert "1 -- 3;" in dot


def test_centred_coordinate_text():
    sample = ComplexSample.from_cells(4, 2, [(1, 2, 3)], p=0.25)
    matrix = build_matrix(sample, MatrixKind.CENTRED_UNSIGNED)
    text = matrix_to_coordinate_text(matrix)
    lines = text.splitlines()
    assert lines[0].endswith("centred-unsigned")
    assert lines[1] == "6 6 21"
    dense = matrix.to_dense()
    i, j, value = lines[2].split()
    assert float(value) == dense[int(i) - 1, int(j) - 1]
    assert np.isclose(sum(float(line.split()[2]) for line in lines[2:] if line.split()[0] == line.split()[1]), 0.0)
    with pytest.raises(DenseCapExceededError):
        matrix_to_coordinate_text(matrix, dense_cap=4)


def test_moment_table_text():
    lines = moment_table_text(2, moment_table(2, 4)).splitlines()
    assert lines[2].split() == ["3", "0", "2", "2", "6"]
    assert lines[3].split() == ["4", "0", "0", "0", "8"]


def test_write_artifact(tmp_path, capsys):
    assert write_artifact("x\n") == "<stdout>"
    assert capsys.readouterr().out == "x\n"
    target = tmp_path / "nested" / "out.txt"
    assert write_artifact("y\n", target) == str(target)
    assert target.read_text() == "y\n"
