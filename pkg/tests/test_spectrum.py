import csv
import io
import json
import math

import numpy as np
import pytest

from conetree import density, generate_tree, moment, scan_bands, sigma0_test, vertex_green
from conetree.errors import PreconditionError, UndecidedEnergy
from conetree.recursion import Classification, boundary_values, fixed_point
from conetree.spectrum import (
    Band,
    closed_walks,
    green_along_path,
    max_phase_spread,
    regular_closed_form,
    vertex_green_array,
)


@pytest.fixture(scope="module")
def binary_report(binary):
    return scan_bands(binary)


@pytest.fixture(scope="module")
def golden_report(golden):
    return scan_bands(golden, root_label="b")


@pytest.mark.parametrize("k", [2, 3])
def test_regular_band(k):
    from conetree import validate

    bands = scan_bands(validate([k]), grid_step=0.05).bands
    assert len(bands) == 1
    assert bands[0].lower == pytest.approx(-2 * math.sqrt(k), abs=1e-3)
    assert bands[0].upper == pytest.approx(2 * math.sqrt(k), abs=1e-3)


def test_normalization(binary_report, golden_report):
    assert binary_report.normalization == pytest.approx(1.0, abs=1e-3)
    assert golden_report.normalization == pytest.approx(1.0, abs=1e-3)


def test_report_invariants(golden_report):
    bands = golden_report.bands
    assert all(b.lower < b.upper for b in bands)
    assert all(a.upper < b.lower for a, b in zip(bands, bands[1:]))
    assert golden_report.undecided_off_edge().size == 0
    assert golden_report.max_abs_green_inside < 1e3


def test_report_serialization(golden_report):
    doc = json.loads(golden_report.to_json())
    assert doc["fingerprint"] == golden_report.fingerprint
    assert len(doc["bands"]) == len(golden_report.bands)
    rows = list(csv.reader(io.StringIO(golden_report.to_csv())))
    assert rows[0] == ["E", "classification", "min_im_gamma", "density_root"]
    assert len(rows) == golden_report.energies.size + 1


def test_density_examples(binary):
    assert density(binary, 0.0) == pytest.approx(1 / (math.sqrt(2) * math.pi), abs=1e-9)
    assert density(binary, 3.0) == 0.0
    with pytest.raises(UndecidedEnergy):
        density(binary, 2 * math.sqrt(2))


def test_density_is_even_for_binary(binary):
    E = np.linspace(0.1, 2.7, 14)
    plus = [density(binary, e) for e in E]
    minus = [density(binary, -e) for e in E]
    assert np.allclose(plus, minus, atol=1e-6)


def test_density_along_path(golden):
    bv = boundary_values([0.7], golden)[0]
    expected = green_along_path(bv.limit, [0, 1, 1]).imag / math.pi
    assert density(golden, 0.7, root_label="o", path=["b", "b"]) == pytest.approx(expected, rel=1e-9)


def test_density_rejects_impossible_path():
    from conetree import validate

    cycle = validate([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    with pytest.raises(PreconditionError):
        density(cycle, 0.5, root_label="0", path=["2"])


def test_vertex_green_examples(binary, golden):
    tree = generate_tree(binary, 0, 2)
    g = np.array([1j / math.sqrt(2)])
    values = vertex_green(tree, g)
    assert values[0].value == pytest.approx(g[0])
    assert values[1].value == pytest.approx(1j / (2 * math.sqrt(2)))
    tree = generate_tree(golden, "o", 1)
    h = fixed_point(0.3 + 0.2j, golden).values
    G = vertex_green_array(tree, h)
    assert G[0] == h[0]
    for v in tree.sphere(1):
        k = tree.labels[v]
        assert G[v] == pytest.approx(h[k] + h[k] ** 2 * h[0])


def test_vertex_green_positive_inside(golden):
    bv = boundary_values([1.3], golden)[0]
    assert bv.classification is Classification.INSIDE
    G = vertex_green_array(generate_tree(golden, "o", 5), bv.limit)
    assert np.all(G.imag > 0)


def test_vertex_green_with_sphere_table(golden):
    tree = generate_tree(golden, "o", 2)
    table = np.array([[1j, 2j], [3j, 4j], [5j, 6j]])
    G = vertex_green_array(tree, table)
    assert G[0] == 1j
    with pytest.raises(PreconditionError):
        vertex_green_array(tree, table[:2])


def test_sigma0(binary, golden):
    assert sigma0_test(binary, 1.0) == (0.0, "ALIGNED")
    angle, verdict = sigma0_test(golden, 1.0)
    assert verdict == "SPREAD" and angle > 1e-3
    angle, verdict = sigma0_test(golden, 0.0)
    assert verdict in ("ALIGNED", "SPREAD")
    with pytest.raises(PreconditionError):
        sigma0_test(golden, 5.0)


def test_max_phase_spread():
    assert max_phase_spread([1j, 2j]) == 0.0
    assert max_phase_spread([1j, 1 + 0j]) == pytest.approx(math.pi / 2)


def test_moment_examples(golden, binary):
    assert moment(golden, "b", 0) == 1
    assert moment(golden, "b", 1) == 0
    assert moment(golden, "b", 2) == 2
    assert moment(golden, "b", 4) == 9
    assert closed_walks(binary, 0, 4) == 8


def test_density_moments(golden, golden_report):
    for m in range(0, 9, 2):
        w = moment(golden, "b", m)
        d = moment(golden, "b", m, via="DENSITY", report=golden_report)
        assert abs(d - w) <= 1e-2 * max(w, 1)


def test_closed_form_branches():
    assert regular_closed_form(0.0, 2) == pytest.approx(1j / math.sqrt(2))
    assert regular_closed_form(3.0, 2) == pytest.approx(-0.5)
    assert regular_closed_form(-3.0, 2) == pytest.approx(0.5)
    z = 0.3 + 0.2j
    g = regular_closed_form(z, 2)
    assert g.imag > 0
    assert abs(-1 / g - (z + 2 * g)) < 1e-14


def test_band_validation():
    with pytest.raises(ValueError):
        Band(1.0, 0.0, 1e-6)
    assert Band(-1.0, 1.0, 1e-6).contains(0.0)
