import json

import numpy as np
import pytest
from hypothesis import given, settings

from conetree import RadialPotential, cross_validate, dirichlet_green, fixed_point, generate_tree, walk_moments
from conetree.errors import InsufficientDepth, PreconditionError, ValidationFailure
from conetree.oracle import dirichlet_table, is_monotone
from conetree.spectrum import closed_walks

from strategies import valid_matrices


def test_depth_zero(golden):
    assert dirichlet_green(generate_tree(golden, "o", 0), 1j).root == pytest.approx(1j)


def test_depth_one_binary(binary):
    assert dirichlet_green(generate_tree(binary, 0, 1), 1j).root == pytest.approx(1j / 3)


def test_converges_to_fixed_point(binary):
    z = 0.5 + 0.1j
    h = fixed_point(z, binary)[0]
    gaps = [abs(dirichlet_table(binary, z, d)[0, d, 0] - h) for d in (5, 10, 20, 40)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_requires_upper_half_plane(binary):
    with pytest.raises(PreconditionError):
        dirichlet_green(generate_tree(binary, 0, 1), 0.5)


def test_herglotz_and_label_dependence(golden):
    tree = generate_tree(golden, "o", 7)
    res = dirichlet_green(tree, 0.3 + 0.02j)
    assert np.all(res.values.imag > 0)
    table = dirichlet_table(golden, 0.3 + 0.02j, tree.depth)[0]
    remaining = tree.depth - tree.spheres
    assert np.allclose(res.values, table[remaining, tree.labels], atol=1e-12, rtol=0)


def test_potential_shifts_leaves(golden):
    tree = generate_tree(golden, "o", 0)
    pot = RadialPotential.constant(2, 0.25)
    assert dirichlet_green(tree, 1j, pot).root == pytest.approx(-1 / (1j - 0.25))


def test_potential_matches_composition(golden):
    from conetree import kernels

    z = 0.8 + 0.05j
    depth = 6
    pot = RadialPotential.random(2, 0.3, seed=4)
    tree = generate_tree(golden, "b", depth)
    explicit = dirichlet_green(tree, z, pot)
    # same finite recursion, label-collapsed: leaves have no children
    v = pot.values(depth + 1)
    zetas = (z - v)[None, :, :]
    levels = kernels.get_backend("numpy").compose(zetas, golden.as_float(), np.zeros((1, 2)) + 0j)
    # the zero seed turns the last level into -1/(z - v)
    assert explicit.root == pytest.approx(levels[0, 0, 1], rel=1e-12)


def test_walk_moment_examples(binary, golden):
    assert walk_moments(generate_tree(binary, 0, 2), 4) == [1, 0, 2, 0, 8]
    assert walk_moments(generate_tree(golden, "b", 2), 4)[4] == 9
    with pytest.raises(InsufficientDepth):
        walk_moments(generate_tree(binary, 0, 1), 4)


@given(valid_matrices(max_entry=2))
@settings(max_examples=25, deadline=None)
def test_two_walk_counters_agree(M):
    m_max = 6
    tree = generate_tree(M, 0, 3)
    assert walk_moments(tree, m_max) == [closed_walks(M, 0, m) for m in range(m_max + 1)]


def test_cross_validate_passes(binary, golden):
    assert cross_validate(binary, [1j], [10, 20, 40], 1e-8).passed
    assert cross_validate(binary, [3 + 1e-3j], [10, 20, 40, 80], 1e-8).passed


def test_cross_validate_negative_control(binary):
    with pytest.raises(ValidationFailure) as info:
        cross_validate(binary, [1j], [1, 2], 1e-8)
    report = info.value.report
    assert not report.passed
    assert info.value.offenders == [(1j, 2)]
    doc = json.loads(report.to_json())
    assert doc["verdict"] == "FAIL"
    assert doc["entries"][0]["depths"] == [1, 2]


def test_monotone_with_jitter():
    assert is_monotone([1.0, 1.05, 0.5])
    assert not is_monotone([1.0, 1.2, 0.5])
    assert is_monotone([1e-3, 1e-15, 3e-15])
