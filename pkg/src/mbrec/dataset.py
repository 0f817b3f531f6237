"""Interaction data: behavior schema, sparse per-behavior matrices, splits.

A dataset holds one binary user-item matrix per behavior, all sharing the
same user/item index spaces. The last behavior in the schema is the target
(the one being predicted); every other behavior is auxiliary signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import scipy.sparse as sp

from .errors import DataError, EmptyDatasetError, SchemaMismatchError


@dataclass(frozen=True)
class BehaviorSchema:
    """Ordered behavior labels; the last label is the target behavior."""

    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) < 2:
            raise ValueError(
                f"schema needs at least 2 behaviors, got {len(self.names)}"
            )
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"behavior labels must be unique: {self.names}")

    def __len__(self) -> int:
        return len(self.names)

    @property
    def target_index(self) -> int:
        return len(self.names) - 1

    @property
    def target(self) -> str:
        return self.names[-1]

    @property
    def auxiliary(self) -> tuple[str, ...]:
        return self.names[:-1]

    def index(self, label: str) -> int:
        try:
            return self.names.index(label)
        except ValueError:
            raise SchemaMismatchError(
                f"behavior label {label!r} not in schema {list(self.names)}"
            ) from None


class MultiBehaviorDataset:
    """Immutable bundle of per-behavior binary CSR matrices.

    Parameters
    ----------
    schema : BehaviorSchema
        Behavior labels, target last.
    matrices : sequence of scipy CSR matrices
        One binary matrix per behavior, identical shapes, rows are users.
    user_ids, item_ids : sequence of str
        External keys in dense-index order.
    """

    def __init__(self, schema, matrices, user_ids, item_ids):
        matrices = [sp.csr_matrix(m) for m in matrices]
        if len(matrices) != len(schema):
            raise ValueError(
                f"{len(matrices)} matrices for {len(schema)} behaviors"
            )
        shape = matrices[0].shape
        for m in matrices:
            if m.shape != shape:
                raise ValueError(f"matrix shapes differ: {m.shape} vs {shape}")
            m.sum_duplicates()
            if m.nnz and (m.data.min() < 1 or m.data.max() > 1):
                raise ValueError("interaction matrices must be binary")
        if shape[0] != len(user_ids) or shape[1] != len(item_ids):
            raise ValueError("id maps do not match matrix dimensions")
        self.schema = schema
        self.matrices = matrices
        self.user_ids = list(user_ids)
        self.item_ids = list(item_ids)
        self.user_index = {k: i for i, k in enumerate(self.user_ids)}
        self.item_index = {k: i for i, k in enumerate(self.item_ids)}
        if len(self.user_index) != len(self.user_ids):
            raise ValueError("duplicate user keys")
        if len(self.item_index) != len(self.item_ids):
            raise ValueError("duplicate item keys")
        self._transposed: dict[int, sp.csr_matrix] = {}

    @property
    def n_users(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def n_items(self) -> int:
        return self.matrices[0].shape[1]

    def matrix(self, behavior: int) -> sp.csr_matrix:
        return self.matrices[behavior]

    def transposed(self, behavior: int) -> sp.csr_matrix:
        """Item-major view of a behavior matrix, cached per behavior."""
        if behavior not in self._transposed:
            self._transposed[behavior] = self.matrices[behavior].T.tocsr()
        return self._transposed[behavior]

    @property
    def target_matrix(self) -> sp.csr_matrix:
        return self.matrices[self.schema.target_index]

    def nnz(self, behavior: int) -> int:
        return self.matrices[behavior].nnz

    def with_matrices(self, matrices) -> "MultiBehaviorDataset":
        """New dataset sharing this one's schema and id maps."""
        return MultiBehaviorDataset(
            self.schema, matrices, self.user_ids, self.item_ids
        )

    def to_triples(self) -> Iterator[tuple[str, str, str]]:
        """Yield (user, item, behavior) triples; round-trips through ingest."""
        for b, name in enumerate(self.schema.names):
            coo = self.matrices[b].tocoo()
            for u, i in zip(coo.row.tolist(), coo.col.tolist()):
                yield self.user_ids[u], self.item_ids[i], name


@dataclass
class SplitDataset:
    """Train dataset plus held-out (user, item) target pairs, one per user."""

    train: MultiBehaviorDataset
    test_pairs: list[tuple[int, int]] = field(default_factory=list)


def _binary_csr(rows, cols, shape) -> sp.csr_matrix:
    m = sp.csr_matrix(
        (
            np.ones(len(rows), dtype=np.int64),
            (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)),
        ),
        shape=shape,
    )
    m.sum_duplicates()
    m.data[:] = 1  # duplicate triples collapse to a single binary entry
    return m


def ingest(
    records: Iterable[tuple[str, str, str]], schema: BehaviorSchema
) -> MultiBehaviorDataset:
    """Build a dataset from a stream of (user, item, behavior) triples.

    Dense indices are assigned in first-appearance order across all
    behaviors; duplicate triples collapse to a single binary entry.

    Raises
    ------
    SchemaMismatchError
        If a record's behavior label is not in the schema (the message
        names the label and the 1-based record ordinal).
    EmptyDatasetError
        If the stream yields no records.
    """
    labels = {name: b for b, name in enumerate(schema.names)}
    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    rows: list[list[int]] = [[] for _ in schema.names]
    cols: list[list[int]] = [[] for _ in schema.names]
    count = 0
    for ordinal, (user, item, behavior) in enumerate(records, start=1):
        count = ordinal
        b = labels.get(behavior)
        if b is None:
            raise SchemaMismatchError(
                f"record {ordinal}: behavior label {behavior!r} not in "
                f"schema {list(schema.names)}"
            )
        u = user_index.setdefault(user, len(user_index))
        i = item_index.setdefault(item, len(item_index))
        rows[b].append(u)
        cols[b].append(i)
    if count == 0:
        raise EmptyDatasetError("interaction stream contained no records")
    shape = (len(user_index), len(item_index))
    matrices = [_binary_csr(rows[b], cols[b], shape) for b in range(len(schema))]
    return MultiBehaviorDataset(
        schema, matrices, list(user_index), list(item_index)
    )


def read_interaction_file(path) -> Iterator[tuple[str, str, str]]:
    """Yield triples from a TSV file: ``user<TAB>item<TAB>behavior``.

    Lines starting with ``#`` and blank lines are skipped.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, "
                    f"got {len(parts)}"
                )
            yield parts[0], parts[1], parts[2]


def load_dataset(path, schema: BehaviorSchema) -> MultiBehaviorDataset:
    return ingest(read_interaction_file(path), schema)


def leave_one_out_split(dataset: MultiBehaviorDataset, seed: int) -> SplitDataset:
    """Hold out one random target interaction per user.

    Every user with at least one target interaction contributes exactly
    one held-out pair, chosen uniformly under ``seed``; auxiliary
    matrices are untouched. Deterministic for a fixed seed.
    """
    target = dataset.target_matrix
    if target.nnz == 0:
        raise EmptyDatasetError("target behavior matrix is empty; nothing to split")
    rng = np.random.default_rng(seed)
    indptr, indices = target.indptr, target.indices
    keep = np.ones(target.nnz, dtype=bool)
    test_pairs: list[tuple[int, int]] = []
    for u in range(dataset.n_users):
        lo, hi = indptr[u], indptr[u + 1]
        if lo == hi:
            continue
        pick = lo + int(rng.integers(hi - lo))
        keep[pick] = False
        test_pairs.append((u, int(indices[pick])))
    row_of = np.repeat(np.arange(dataset.n_users), np.diff(indptr))
    train_target = sp.csr_matrix(
        (target.data[keep], (row_of[keep], indices[keep])), shape=target.shape
    )
    matrices = list(dataset.matrices)
    matrices[dataset.schema.target_index] = train_target
    return SplitDataset(dataset.with_matrices(matrices), test_pairs)
