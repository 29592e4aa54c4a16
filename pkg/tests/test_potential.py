import json

import numpy as np
import pytest

from conetree import RadialPotential


def test_zero_potential():
    pot = RadialPotential.zero(2)
    assert pot.is_zero
    assert np.all(pot.values(5) == 0.0)


def test_random_is_reproducible_and_bounded():
    a = RadialPotential.random(2, 0.05, seed=11)
    b = RadialPotential.random(2, 0.05, seed=11)
    c = RadialPotential.random(2, 0.05, seed=12)
    assert np.array_equal(a.values(50), b.values(50))
    assert not np.array_equal(a.values(50), c.values(50))
    assert np.all(np.abs(a.profile(200)) <= 1.0)
    assert np.abs(a.profile(2000)).max() > 0.9


def test_random_is_order_independent():
    a = RadialPotential.random(3, 1.0, seed=5)
    short = a.profile(10).copy()
    b = RadialPotential.random(3, 1.0, seed=5)
    long = b.profile(100)
    assert np.array_equal(short, long[:10])
    assert np.array_equal(a.profile(100), long)
    assert a(7, 2) == long[7, 2]


def test_alternating_and_constant():
    alt = RadialPotential.alternating(2, 0.2)
    assert np.allclose(alt.values(4)[:, 0], [0.2, -0.2, 0.2, -0.2])
    const = RadialPotential.constant(2, 0.1)
    assert np.allclose(const.values(3), 0.1)


def test_decaying():
    pot = RadialPotential.decaying(2, 0.3)
    w = pot.profile(4)
    assert np.allclose(w[:, 0], [1.0, 0.5, 1 / 3, 0.25])
    pot = RadialPotential.decaying(2, 1.0, exponent=2.0, amplitudes=(1.0, -0.5))
    assert np.allclose(pot.profile(2)[1], [0.25, -0.125])


def test_table_overrides_tail():
    pot = RadialPotential(2, 1.0, table=[[0.5, -0.5]], tail_rule="power")
    w = pot.profile(3)
    assert np.allclose(w[0], [0.5, -0.5])
    assert np.allclose(w[2], [1 / 3, 1 / 3])


@pytest.mark.parametrize("kwargs", [
    dict(n_labels=2, coupling=-1.0),
    dict(n_labels=2, coupling=1.0, tail_rule="bogus"),
    dict(n_labels=2, coupling=1.0, table=[[2.0, 0.0]]),
    dict(n_labels=2, coupling=1.0, tail_rule="periodic"),
    dict(n_labels=2, coupling=1.0, tail_rule="random"),
    dict(n_labels=2, coupling=1.0, tail_rule="power", amplitudes=(1.0,)),
])
def test_invalid(kwargs):
    with pytest.raises(ValueError):
        RadialPotential(**kwargs)


def test_from_spec(tmp_path):
    assert RadialPotential.from_spec("random:3", 2, 0.1).seed == 3
    assert RadialPotential.from_spec("decay:2", 2, 0.1).exponent == 2.0
    assert RadialPotential.from_spec("zero", 2, 0.1).is_zero
    path = tmp_path / "pot.json"
    path.write_text(json.dumps({"table": [[1.0, 0.0], [0.0, -1.0]], "tail": "periodic"}))
    pot = RadialPotential.from_spec(str(path), 2, 0.5)
    assert np.allclose(pot.values(3)[2], [0.5, 0.0])
    assert pot.describe()["tail_rule"] == "periodic"
