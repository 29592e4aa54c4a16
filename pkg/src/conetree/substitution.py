"""Substitution matrices and the finite truncations of the trees they generate.

Convention: row ``j`` of the matrix lists the children of a label-``j``
vertex, i.e. a vertex labelled ``j`` has ``M[j, k]`` children labelled ``k``.
"""
from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DepthOverflow,
    M1Violation,
    MatrixFormatError,
    NotPrimitive,
    OneDimensional,
)

DEFAULT_MAX_VERTICES = 10**7

_DEFAULT_LABELS_2 = ("o", "b")


def _default_labels(n):
    if n == 2:
        return _DEFAULT_LABELS_2
    return tuple(str(i) for i in range(n))


def _as_integer_matrix(raw):
    try:
        arr = np.array(raw, dtype=object)
    except (TypeError, ValueError) as exc:  # ragged input
        raise MatrixFormatError(f"cannot read matrix: {exc}") from None
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1 and arr.size == 1:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise MatrixFormatError(f"matrix must be square and non-empty, got shape {arr.shape}")
    out = np.empty(arr.shape, dtype=np.int64)
    for idx, value in np.ndenumerate(arr):
        if isinstance(value, (bool, np.bool_)):
            raise MatrixFormatError("boolean matrix entries are not allowed")
        try:
            as_float = float(value)
        except (TypeError, ValueError):
            raise MatrixFormatError(f"entry {idx} is not a number: {value!r}") from None
        if not as_float.is_integer():
            raise MatrixFormatError(f"entry {idx} is not an integer: {value!r}")
        if as_float < 0:
            raise MatrixFormatError(f"entry {idx} is negative: {value!r}")
        out[idx] = int(as_float)
    return out


def primitivity_exponent(entries):
    """Smallest ``n`` such that ``entries**n`` is entrywise positive, or ``None``.

    Powers are tracked as boolean patterns, so there is no integer overflow.
    The search stops at the Wielandt bound ``(N-1)**2 + 1``.
    """
    pattern = np.asarray(entries) > 0
    n_labels = pattern.shape[0]
    bound = (n_labels - 1) ** 2 + 1
    power = pattern.copy()
    for n in range(1, bound + 1):
        if power.all():
            return n
        power = (power.astype(np.int64) @ pattern.astype(np.int64)) > 0
    return None


@dataclass(frozen=True)
class SubstitutionMatrix:
    """A validated substitution matrix over a finite label alphabet.

    Build instances with :func:`validate`; the constructor does not check
    the model assumptions.
    """

    labels: tuple
    entries: np.ndarray
    primitivity_exponent: int

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.int64)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    @property
    def is_regular(self) -> bool:
        return is_regular(self)

    @property
    def branching(self):
        """Common forward degree of a regular tree, ``None`` otherwise."""
        return int(self.row_sums[0]) if self.is_regular else None

    def as_float(self) -> np.ndarray:
        return self.entries.astype(np.float64)

    def index(self, label) -> int:
        """Position of ``label`` in the alphabet; integer positions pass through."""
        if label in self.labels:
            return self.labels.index(label)
        if isinstance(label, (int, np.integer)) and 0 <= label < self.size:
            return int(label)
        raise KeyError(f"unknown label {label!r}; alphabet is {self.labels}")

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "matrix": self.entries.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SubstitutionMatrix":
        doc = json.loads(text)
        if isinstance(doc, list):
            return validate(doc)
        return validate(doc["matrix"], doc.get("labels"))

    def __repr__(self):
        return f"SubstitutionMatrix(labels={self.labels}, entries={self.entries.tolist()})"


def validate(matrix, labels: Sequence | None = None) -> SubstitutionMatrix:
    """Check a raw integer matrix against the model assumptions.

    Parameters
    ----------
    matrix : array_like
        Square matrix of nonnegative integers; a bare integer ``k`` or ``[k]``
        is accepted for a single label.
    labels : sequence, optional
        Names of the labels in row order. Defaults to ``("o", "b")`` for two
        labels and ``"0", "1", ...`` otherwise.

    Returns
    -------
    SubstitutionMatrix

    Raises
    ------
    MatrixFormatError
        Not a square nonnegative integer matrix, or bad labels.
    M1Violation
        A zero on the diagonal.
    OneDimensional
        A single label with ``M = 1``.
    NotPrimitive
        No power up to ``(N-1)**2 + 1`` is entrywise positive.
    """
    entries = _as_integer_matrix(matrix)
    n_labels = entries.shape[0]
    if labels is None:
        labels = _default_labels(n_labels)
    labels = tuple(labels)
    if len(labels) != n_labels or len(set(labels)) != n_labels:
        raise MatrixFormatError(f"need {n_labels} distinct labels, got {labels!r}")

    zero_diag = [labels[j] for j in range(n_labels) if entries[j, j] < 1]
    if zero_diag:
        raise M1Violation(f"M1 violated: zero diagonal entry for label(s) {zero_diag}")
    if n_labels == 1 and entries[0, 0] < 2:
        raise OneDimensional("one-dimensional: a single label needs M >= 2")
    exponent = primitivity_exponent(entries)
    if exponent is None:
        raise NotPrimitive(
            f"M2 violated: no power up to {(n_labels - 1) ** 2 + 1} is entrywise positive"
        )
    return SubstitutionMatrix(labels, entries, exponent)


def is_regular(matrix: SubstitutionMatrix) -> bool:
    """True iff every label has the same number of children."""
    sums = matrix.row_sums
    return bool(np.all(sums == sums[0]))


def sphere_label_counts(matrix: SubstitutionMatrix, root_label, depth: int) -> list:
    """Exact label counts on spheres ``0..depth`` (Python ints, no overflow)."""
    n_labels = matrix.size
    rows = [[int(x) for x in row] for row in matrix.entries]
    counts = [0] * n_labels
    counts[matrix.index(root_label)] = 1
    out = [counts]
    for _ in range(depth):
        counts = [sum(counts[j] * rows[j][k] for j in range(n_labels)) for k in range(n_labels)]
        out.append(counts)
    return out


@dataclass(frozen=True)
class ConeTree:
    """Breadth-first truncation of a cone-type tree to a fixed depth.

    Vertex ids are positions in the BFS order. Children of a vertex are
    contiguous, grouped by label in alphabet order.
    """

    matrix: SubstitutionMatrix
    root_label: int
    depth: int
    labels: np.ndarray
    spheres: np.ndarray
    parents: np.ndarray
    child_start: np.ndarray
    child_count: np.ndarray
    sphere_start: np.ndarray = field(repr=False)

    def __len__(self):
        return int(self.labels.size)

    @property
    def n_vertices(self) -> int:
        return len(self)

    def children(self, vertex: int) -> np.ndarray:
        start = self.child_start[vertex]
        return np.arange(start, start + self.child_count[vertex])

    def sphere(self, n: int) -> np.ndarray:
        """Ids of the vertices at distance ``n`` from the root."""
        return np.arange(self.sphere_start[n], self.sphere_start[n + 1])

    def sphere_label_counts(self, n: int) -> np.ndarray:
        ids = self.sphere(n)
        return np.bincount(self.labels[ids], minlength=self.matrix.size)

    @property
    def vertices(self) -> list:
        """``(id, label, sphere, parent_id or None, children ids)`` per vertex."""
        out = []
        for v in range(len(self)):
            parent = int(self.parents[v])
            out.append((
                v,
                self.matrix.labels[self.labels[v]],
                int(self.spheres[v]),
                None if parent < 0 else parent,
                tuple(int(c) for c in self.children(v)),
            ))
        return out

    def path_to(self, vertex: int) -> list:
        """Vertex ids from the root down to ``vertex``."""
        path = [int(vertex)]
        while self.parents[path[-1]] >= 0:
            path.append(int(self.parents[path[-1]]))
        return path[::-1]

    def find_path(self, label_path: Sequence) -> int:
        """Id of the first vertex reached by following ``label_path`` from the root.

        ``label_path[0]`` must be the root label.
        """
        idx = [self.matrix.index(lab) for lab in label_path]
        if not idx or idx[0] != self.root_label:
            raise ValueError("label path must start with the root label")
        v = 0
        for lab in idx[1:]:
            kids = self.children(v)
            match = kids[self.labels[kids] == lab]
            if match.size == 0:
                raise ValueError(f"no child with label {self.matrix.labels[lab]!r} below vertex {v}")
            v = int(match[0])
        return v

    def to_csv(self, fh=None) -> str:
        """Write ``id,label,sphere,parent_id`` rows; returns the text as well."""
        buf = io.StringIO()
        buf.write("id,label,sphere,parent_id\n")
        names = self.matrix.labels
        for v in range(len(self)):
            parent = int(self.parents[v])
            buf.write(f"{v},{names[self.labels[v]]},{self.spheres[v]},{'' if parent < 0 else parent}\n")
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def generate_tree(
    matrix: SubstitutionMatrix,
    root_label,
    depth: int,
    max_vertices: int = DEFAULT_MAX_VERTICES,
) -> ConeTree:
    """Build the depth-``depth`` truncation of the tree rooted at ``root_label``.

    Raises
    ------
    DepthOverflow
        If the projected vertex count exceeds ``max_vertices``.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    root = matrix.index(root_label)
    counts = sphere_label_counts(matrix, root, depth)
    total = sum(sum(c) for c in counts)
    if total > max_vertices:
        raise DepthOverflow(
            f"depth {depth} needs {total} vertices, cap is {max_vertices}"
        )

    entries = matrix.entries
    row_sums = entries.sum(axis=1)
    width = int(row_sums.max())
    # child label pattern per parent label, padded to the widest row
    patterns = np.zeros((matrix.size, width), dtype=np.int64)
    for j in range(matrix.size):
        pat = np.repeat(np.arange(matrix.size), entries[j])
        patterns[j, : pat.size] = pat

    labels = [np.array([root], dtype=np.int64)]
    parents = [np.array([-1], dtype=np.int64)]
    offset = 1
    starts = [0, 1]
    for _ in range(depth):
        cur = labels[-1]
        first_id = starts[-2]
        n_kids = row_sums[cur]
        total_kids = int(n_kids.sum())
        parent_ids = np.repeat(np.arange(first_id, first_id + cur.size), n_kids)
        local_start = np.cumsum(n_kids) - n_kids
        position = np.arange(total_kids) - np.repeat(local_start, n_kids)
        labels.append(patterns[np.repeat(cur, n_kids), position])
        parents.append(parent_ids)
        offset += total_kids
        starts.append(offset)

    labels = np.concatenate(labels)
    parents = np.concatenate(parents)
    spheres = np.repeat(np.arange(depth + 1), np.diff(starts))
    child_count = np.where(spheres < depth, row_sums[labels], 0)
    child_start = np.empty_like(child_count)
    child_start[0] = 1
    if labels.size > 1:
        child_start[1:] = 1 + np.cumsum(child_count)[:-1]
    for arr in (labels, parents, spheres, child_count, child_start):
        arr.setflags(write=False)
    return ConeTree(
        matrix=matrix,
        root_label=root,
        depth=depth,
        labels=labels,
        spheres=spheres,
        parents=parents,
        child_start=child_start,
        child_count=child_count,
        sphere_start=np.array(starts, dtype=np.int64),
    )
