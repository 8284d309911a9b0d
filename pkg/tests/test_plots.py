import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from stancelab.core.errors import PreconditionError
from stancelab.core.project import Layout2D
from stancelab.plots import UNKNOWN_COLOR, class_colors, emit_heatmap_svg, emit_scatter_svg


def ids_with_prefix(path, prefix):
    root = ET.parse(path).getroot()
    return [el.get("id") for el in root.iter() if (el.get("id") or "").startswith(prefix)]


@pytest.fixture
def layout():
    return Layout2D(("u1", "u2", "u3"), np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]]))


def test_scatter_circles_and_legend(tmp_path, layout):
    path = emit_scatter_svg(layout, {"u1": "pro", "u2": "anti", "u3": "pro"}, tmp_path / "scatter.svg")
    assert sorted(ids_with_prefix(path, "point-")) == ["point-0", "point-1", "point-2"]
    assert sorted(ids_with_prefix(path, "legend-")) == ["legend-anti", "legend-pro"]


def test_scatter_without_labels_is_gray(tmp_path, layout):
    path = emit_scatter_svg(layout, {}, tmp_path / "scatter.svg")
    assert ids_with_prefix(path, "legend-") == ["legend-unknown"]
    assert UNKNOWN_COLOR in path.read_text(encoding="utf-8")


def test_scatter_is_byte_stable(tmp_path, layout):
    labels = {"u1": "pro", "u2": None}
    first = emit_scatter_svg(layout, labels, tmp_path / "a.svg", title="trump")
    second = emit_scatter_svg(layout, labels, tmp_path / "b.svg", title="trump")
    assert first.read_bytes() == second.read_bytes()


def test_scatter_rejects_empty_layout(tmp_path):
    with pytest.raises(PreconditionError):
        emit_scatter_svg(Layout2D((), np.zeros((0, 2))), {}, tmp_path / "x.svg")


def test_scatter_unwritable_path(tmp_path, layout):
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    with pytest.raises(OSError):
        emit_scatter_svg(layout, {}, blocker / "scatter.svg")


def test_class_colors_are_order_independent():
    assert class_colors(["pro", "anti", "unknown"]) == class_colors(["anti", "pro"])
    assert class_colors(["pro"])["unknown"] == UNKNOWN_COLOR


def annotations(path):
    root = ET.parse(path).getroot()
    texts = []
    for el in root.iter():
        if el.tag.endswith("text") and el.text:
            texts.append(el.text.strip())
    return texts


def test_heatmap_single_cell(tmp_path):
    path = emit_heatmap_svg(np.array([[1.0]]), tmp_path / "h.svg", names=["trump"])
    assert ids_with_prefix(path, "cell-") == ["cell-0-0"]
    assert "1.00" in annotations(path)


def test_heatmap_eight_topics(tmp_path):
    rng = np.random.default_rng(0)
    matrix = rng.uniform(size=(8, 8))
    matrix = (matrix + matrix.T) / 2
    np.fill_diagonal(matrix, 1.0)
    path = emit_heatmap_svg(matrix, tmp_path / "h.svg", names=[f"t{i}" for i in range(8)])
    assert len(ids_with_prefix(path, "cell-")) == 64
    assert annotations(path).count("1.00") >= 8


def test_heatmap_symmetric_annotations(tmp_path):
    matrix = np.array([[1.0, 0.37], [0.37, 1.0]])
    path = emit_heatmap_svg(matrix, tmp_path / "h.svg")
    texts = annotations(path)
    assert texts.count("0.37") == 2
    assert texts.count("1.00") == 2


def test_heatmap_nan_cells(tmp_path):
    path = emit_heatmap_svg(np.array([[1.0, np.nan], [np.nan, 1.0]]), tmp_path / "h.svg")
    assert annotations(path).count("n/a") == 2


def test_heatmap_rejects_non_square(tmp_path):
    with pytest.raises(PreconditionError):
        emit_heatmap_svg(np.ones((2, 3)), tmp_path / "h.svg")
    with pytest.raises(PreconditionError):
        emit_heatmap_svg(np.ones((2, 2)), tmp_path / "h.svg", names=["a"])


def test_heatmap_is_byte_stable(tmp_path):
    matrix = np.array([[1.0, 0.5], [0.5, 1.0]])
    a = emit_heatmap_svg(matrix, tmp_path / "a.svg", names=["x", "y"])
    b = emit_heatmap_svg(matrix, tmp_path / "b.svg", names=["x", "y"])
    assert a.read_bytes() == b.read_bytes()
    assert not re.search(r"<dc:date>", a.read_text(encoding="utf-8"))
