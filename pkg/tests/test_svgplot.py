import xml.etree.ElementTree as ET

import numpy as np

from cdlab.svgplot import PANEL_H, PANEL_W, Panel, write_svg

SVG_NS = "{http://www.w3.org/2000/svg}"


def two_panel_figure():
    x = np.linspace(0.0, 1.0, 10)
    left = Panel(title="left", xlabel="x", ylabel="y")
    left.add(x, x ** 2, label="square")
    left.add(x, x, color="#d62728", label="line", dash="4,3")
    right = Panel(title="right")
    right.add(x, np.sin(x))
    return [left, right]


def test_output_is_byte_identical_across_calls(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    write_svg(a, two_panel_figure())
    write_svg(b, two_panel_figure())
    assert a.read_bytes() == b.read_bytes()


def test_svg_is_well_formed_with_expected_structure(tmp_path):
    path = tmp_path / "fig.svg"
    write_svg(path, two_panel_figure())
    root = ET.parse(path).getroot()
    assert root.tag == f"{SVG_NS}svg"
    assert root.get("width") == str(2 * PANEL_W)
    assert root.get("height") == str(PANEL_H)
    polylines = root.findall(f"{SVG_NS}polyline")
    assert len(polylines) == 3
    texts = [t.text for t in root.findall(f"{SVG_NS}text")]
    assert "left" in texts and "right" in texts
    assert "square" in texts and "line" in texts


def test_flat_series_does_not_divide_by_zero(tmp_path):
    panel = Panel()
    panel.add([0.0, 1.0], [0.5, 0.5])
    write_svg(tmp_path / "flat.svg", [panel])
    content = (tmp_path / "flat.svg").read_text()
    assert "nan" not in content and "inf" not in content


def test_no_timestamps_or_external_references(tmp_path):
    path = tmp_path / "fig.svg"
    write_svg(path, two_panel_figure())
    content = path.read_text()
    assert "date" not in content.lower()
    assert "http" not in content.replace("http://www.w3.org/2000/svg", "")
