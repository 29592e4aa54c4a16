"""Radially label symmetric potentials.

A potential assigns ``coupling * w_j(n)`` to every vertex with label ``j`` on
sphere ``n``; the profile ``w`` takes values in ``[-1, 1]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

TAIL_RULES = ("zero", "periodic", "power", "random")


def _random_profile_value(seed, n, j):
    # keyed by (seed, n, j): values do not depend on evaluation order
    state = np.random.SeedSequence([int(seed), int(n), int(j)]).generate_state(2, dtype=np.uint32)
    u = ((int(state[0]) << 21) ^ (int(state[1]) >> 11)) / float(1 << 53)
    return 2.0 * u - 1.0


@dataclass(frozen=True)
class RadialPotential:
    """Profile ``w_j(n)`` scaled by ``coupling``.

    Parameters
    ----------
    n_labels : int
        Alphabet size.
    coupling : float
        Nonnegative scale ``lambda``; the potential value is ``coupling * w``.
    table : array_like, optional
        Explicit values ``table[n, j]`` for ``n < len(table)``.
    tail_rule : {"zero", "periodic", "power", "random"}
        What happens beyond (or instead of) the table. ``"periodic"`` repeats
        the table with period ``len(table)``; ``"power"`` uses
        ``amplitudes[j] / (1 + n)**exponent``; ``"random"`` draws
        ``w_j(n)`` uniformly from ``[-1, 1]`` from a generator keyed by
        ``(seed, n, j)``.
    """

    n_labels: int
    coupling: float = 0.0
    table: np.ndarray | None = None
    tail_rule: str = "zero"
    exponent: float = 1.0
    amplitudes: tuple | None = None
    seed: int | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.coupling < 0:
            raise ValueError("coupling must be nonnegative")
        if self.tail_rule not in TAIL_RULES:
            raise ValueError(f"tail_rule must be one of {TAIL_RULES}")
        if self.table is not None:
            tab = np.array(self.table, dtype=np.float64).reshape(-1, self.n_labels)
            if np.any(np.abs(tab) > 1.0):
                raise ValueError("profile values must lie in [-1, 1]")
            tab.setflags(write=False)
            object.__setattr__(self, "table", tab)
        if self.tail_rule == "periodic" and (self.table is None or len(self.table) == 0):
            raise ValueError("periodic tail needs a non-empty table")
        if self.tail_rule == "power":
            amps = self.amplitudes if self.amplitudes is not None else (1.0,) * self.n_labels
            amps = tuple(float(a) for a in amps)
            if len(amps) != self.n_labels or any(abs(a) > 1.0 for a in amps):
                raise ValueError("power tail needs one amplitude in [-1, 1] per label")
            object.__setattr__(self, "amplitudes", amps)
        if self.tail_rule == "random" and self.seed is None:
            raise ValueError("random profile needs a seed")

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n_labels):
        return cls(n_labels, 0.0)

    @classmethod
    def constant(cls, n_labels, coupling, value=1.0):
        return cls(n_labels, coupling, table=[[value] * n_labels], tail_rule="periodic")

    @classmethod
    def alternating(cls, n_labels, coupling):
        """``w_j(n) = (-1)**n``."""
        return cls(n_labels, coupling, table=[[1.0] * n_labels, [-1.0] * n_labels],
                   tail_rule="periodic")

    @classmethod
    def decaying(cls, n_labels, coupling, exponent=1.0, amplitudes=None):
        """``w_j(n) = amplitudes[j] / (1 + n)**exponent``."""
        return cls(n_labels, coupling, tail_rule="power", exponent=exponent,
                   amplitudes=amplitudes)

    @classmethod
    def random(cls, n_labels, coupling, seed):
        return cls(n_labels, coupling, tail_rule="random", seed=int(seed))

    @classmethod
    def from_spec(cls, spec: str, n_labels: int, coupling: float):
        """Parse ``random:SEED``, ``decay:Q``, ``zero`` or a JSON file path.

        The JSON file holds ``{"table": [[...], ...], "tail": "zero"|"periodic"}``.
        """
        if spec is None or spec == "zero":
            return cls(n_labels, coupling)
        kind, _, arg = spec.partition(":")
        if kind == "random":
            return cls.random(n_labels, coupling, int(arg))
        if kind == "decay":
            return cls.decaying(n_labels, coupling, float(arg) if arg else 1.0)
        if kind == "alternating":
            return cls.alternating(n_labels, coupling)
        with open(spec) as fh:
            doc = json.load(fh)
        return cls(n_labels, coupling, table=doc["table"], tail_rule=doc.get("tail", "zero"))

    def describe(self) -> dict:
        out = {"coupling": self.coupling, "tail_rule": self.tail_rule}
        if self.tail_rule == "power":
            out.update(exponent=self.exponent, amplitudes=list(self.amplitudes))
        if self.tail_rule == "random":
            out["seed"] = self.seed
        if self.table is not None:
            out["table"] = self.table.tolist()
        return out

    # evaluation -------------------------------------------------------
    def profile(self, n_levels: int) -> np.ndarray:
        """Array ``w[n, j]`` for spheres ``0 .. n_levels - 1``."""
        n_levels = int(n_levels)
        cached = self._cache.get("profile")
        if cached is not None and cached.shape[0] >= n_levels:
            return cached[:n_levels]
        w = np.zeros((n_levels, self.n_labels))
        if self.tail_rule == "power":
            n = np.arange(n_levels, dtype=np.float64)[:, None]
            w = np.asarray(self.amplitudes)[None, :] / (1.0 + n) ** self.exponent
        elif self.tail_rule == "random":
            start = 0 if cached is None else cached.shape[0]
            if cached is not None:
                w[:start] = cached
            for n in range(start, n_levels):
                for j in range(self.n_labels):
                    w[n, j] = _random_profile_value(self.seed, n, j)
        elif self.tail_rule == "periodic":
            period = len(self.table)
            w = self.table[np.arange(n_levels) % period]
        if self.table is not None and self.tail_rule in ("zero", "power", "random"):
            k = min(len(self.table), n_levels)
            w = np.array(w)
            w[:k] = self.table[:k]
        w = np.ascontiguousarray(w, dtype=np.float64)
        w.setflags(write=False)
        self._cache["profile"] = w
        return w

    def values(self, n_levels: int) -> np.ndarray:
        """Actual potential ``coupling * w[n, j]``."""
        return self.coupling * self.profile(n_levels)

    def __call__(self, sphere: int, label: int) -> float:
        return float(self.values(sphere + 1)[sphere, label])

    @property
    def is_zero(self) -> bool:
        return self.coupling == 0.0 or (self.tail_rule == "zero" and self.table is None)
