"""Labeled recommendation records and their vertical partition between two parties.

Records are plain immutable values. A raw :class:`RecordSet` indexes fields
globally; :func:`vertical_split` projects every record onto the fields each
party owns and re-indexes those fields locally, so a party's records never
carry another party's columns.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ParseError, SchemaError

PARTIES = ("A", "B")
CATEGORICAL = "categorical"
NUMERICAL = "numerical"
LABEL = "label"
UNKNOWN_CATEGORY = 0


@dataclass(frozen=True)
class Field:
    name: str
    kind: str
    vocab: int = 1
    party: str | None = None

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, NUMERICAL):
            raise SchemaError(f"field {self.name!r}: unknown kind {self.kind!r}")
        if self.vocab < 1:
            raise SchemaError(f"field {self.name!r}: vocabulary size must be positive")
        if self.kind == NUMERICAL and self.vocab != 1:
            raise SchemaError(f"numerical field {self.name!r} must have vocab 1")


@dataclass(frozen=True)
class Schema:
    fields: tuple[Field, ...]

    def __len__(self) -> int:
        return len(self.fields)

    @property
    def vocab_sizes(self) -> tuple[int, ...]:
        return tuple(f.vocab for f in self.fields)

    @property
    def numerical(self) -> tuple[bool, ...]:
        return tuple(f.kind == NUMERICAL for f in self.fields)

    def subset(self, indices: Sequence[int]) -> "Schema":
        return Schema(tuple(self.fields[i] for i in indices))


@dataclass(frozen=True)
class FeatureRecord:
    sample: int
    categorical: tuple[tuple[int, int], ...]
    numerical: tuple[tuple[int, float], ...]
    label: int

    def validate(self, schema: Schema) -> None:
        seen = set()
        for f, c in self.categorical:
            if not 0 <= f < len(schema) or schema.fields[f].kind != CATEGORICAL:
                raise DomainError(f"sample {self.sample}: bad categorical field {f}")
            if not 0 <= c < schema.fields[f].vocab:
                raise DomainError(
                    f"sample {self.sample}: category {c} out of range for field {f}"
                )
            if f in seen:
                raise DomainError(f"sample {self.sample}: duplicate field {f}")
            seen.add(f)
        for f, _ in self.numerical:
            if not 0 <= f < len(schema) or schema.fields[f].kind != NUMERICAL:
                raise DomainError(f"sample {self.sample}: bad numerical field {f}")
            if f in seen:
                raise DomainError(f"sample {self.sample}: duplicate field {f}")
            seen.add(f)


@dataclass(frozen=True)
class RecordSet:
    """Records sharing one schema, in a fixed order."""

    records: tuple[FeatureRecord, ...]
    schema: Schema

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[FeatureRecord]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("train_fraction", "validation_fraction"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {v}")


@dataclass(frozen=True)
class VerticalDataset:
    party_a: tuple[FeatureRecord, ...]
    party_b: tuple[FeatureRecord, ...]
    overlapped: frozenset[int]
    alpha: float
    schema_a: Schema
    schema_b: Schema

    def party(self, name: str) -> tuple[FeatureRecord, ...]:
        return {"A": self.party_a, "B": self.party_b}[name]

    def schema(self, name: str) -> Schema:
        return {"A": self.schema_a, "B": self.schema_b}[name]

    @cached_property
    def ids_a(self) -> frozenset[int]:
        return frozenset(r.sample for r in self.party_a)

    @cached_property
    def ids_b(self) -> frozenset[int]:
        return frozenset(r.sample for r in self.party_b)

    @cached_property
    def _index(self) -> dict[str, dict[int, FeatureRecord]]:
        return {
            "A": {r.sample: r for r in self.party_a},
            "B": {r.sample: r for r in self.party_b},
        }

    def lookup(self, party: str, sample: int) -> FeatureRecord | None:
        return self._index[party].get(sample)

    def realized_alpha(self) -> float:
        total = len(self.party_a) + len(self.party_b)
        return len(self.overlapped) / total if total else 0.0

    def validate(self) -> None:
        if not self.overlapped <= (self.ids_a & self.ids_b):
            raise DomainError("overlapped ids must be held by both parties")
        for sid in self.overlapped:
            if self.lookup("A", sid).label != self.lookup("B", sid).label:
                raise DomainError(f"label disagreement on overlapped id {sid}")
        for records, schema in ((self.party_a, self.schema_a), (self.party_b, self.schema_b)):
            for r in records:
                r.validate(schema)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the two-view synthetic click generator.

    Samples are tuples of latent entities (think users and items). Each
    entity is seen by one party as a raw ID (``vocab`` values, popularity
    following a power law with exponent ``skew``) and by the other party
    only through a coarse attribute: the quantile bucket of the entity's
    latent quality, wrong with probability ``attribute_noise``. Half of a
    party's categorical fields are IDs, the rest are attributes of the
    other party's entities. Numerical fields carry a noisy copy of the
    quality of one of the other party's entities.

    The label score sums entity qualities plus a low-rank pairwise
    interaction, is median-centered, passed through a logistic with slope
    ``signal``, and finally flipped with probability ``label_noise`` (0.5
    makes labels independent of the features).
    """

    n_samples: int = 20000
    fields_a: int = 4
    fields_b: int = 4
    vocab: int = 500
    numerical_a: int = 0
    numerical_b: int = 0
    buckets: int = 6
    attribute_noise: float = 0.1
    signal: float = 3.0
    interaction: float = 0.5
    rank: int = 4
    label_noise: float = 0.05
    skew: float = 0.5

    def __post_init__(self):
        if self.n_samples < 1:
            raise DomainError("n_samples must be positive")
        if self.fields_a < 1 or self.fields_b < 1:
            raise DomainError("each party needs at least one categorical field")
        if self.numerical_a < 0 or self.numerical_b < 0:
            raise DomainError("numerical field counts must be non-negative")
        if self.vocab < 2 or self.buckets < 1 or self.rank < 1:
            raise DomainError("vocab must be >= 2 (index 0 is reserved); buckets, rank >= 1")
        if not 0.0 <= self.label_noise <= 0.5:
            raise DomainError("label_noise must lie in [0, 0.5]")
        if not 0.0 <= self.attribute_noise <= 1.0:
            raise DomainError("attribute_noise must lie in [0, 1]")


def _check_party(p: str) -> str:
    p = str(p).upper()
    if p not in PARTIES:
        raise ConfigurationError(f"unknown party {p!r}")
    return p


def load_schema(path: str | Path) -> tuple[list[dict], dict[str, str]]:
    """Read a YAML column schema.

    The file lists ``columns`` entries with ``name``, ``kind`` and, for
    feature columns, ``party`` (and optionally a fixed ``vocabulary``).
    Returns the column descriptors and the column→party map.
    """
    import yaml

    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    columns = doc.get("columns")
    if not columns:
        raise SchemaError(f"{path}: no columns declared")
    assignment = {}
    for col in columns:
        if col.get("kind") != LABEL:
            if "party" not in col:
                raise SchemaError(f"column {col.get('name')!r} has no party")
            assignment[col["name"]] = _check_party(col["party"])
    return columns, assignment


def load_csv(path: str | Path, schema: Sequence[Mapping]) -> RecordSet:
    """Parse a headed CSV file into records.

    ``schema`` holds one descriptor per used column: ``name``, ``kind`` (one
    of categorical / numerical / label), optionally ``vocabulary`` for a fixed
    category list and ``party``. Category strings not in a fixed vocabulary
    map to index 0; without one the vocabulary grows in first-seen order
    from index 1. Feature field indices follow descriptor order.
    """
    labels = [c for c in schema if c.get("kind") == LABEL]
    if len(labels) != 1:
        raise SchemaError("schema must declare exactly one label column")
    features = [c for c in schema if c.get("kind") != LABEL]
    for c in features:
        if c.get("kind") not in (CATEGORICAL, NUMERICAL):
            raise SchemaError(f"column {c.get('name')!r}: unknown kind {c.get('kind')!r}")

    vocabularies: list[dict[str, int] | None] = []
    frozen_vocab: list[bool] = []
    for c in features:
        if c["kind"] != CATEGORICAL:
            vocabularies.append(None)
            frozen_vocab.append(True)
        elif c.get("vocabulary") is not None:
            vocabularies.append({str(v): i + 1 for i, v in enumerate(c["vocabulary"])})
            frozen_vocab.append(True)
        else:
            vocabularies.append({})
            frozen_vocab.append(False)

    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return RecordSet((), _csv_schema(features, vocabularies))
        position = {name: i for i, name in enumerate(header)}
        label_name = labels[0]["name"]
        if label_name not in position:
            raise SchemaError(f"label column {label_name!r} missing from header")
        for c in features:
            if c["name"] not in position:
                raise SchemaError(f"column {c['name']!r} missing from header")

        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} cells, got {len(row)}", row_no)
            raw_label = row[position[label_name]].strip()
            try:
                label = int(float(raw_label))
            except ValueError:
                raise ParseError(f"label {raw_label!r} is not numeric", row_no) from None
            if label not in (0, 1):
                raise ParseError(f"label {raw_label!r} is not binary", row_no)
            cats, nums = [], []
            for f, c in enumerate(features):
                cell = row[position[c["name"]]].strip()
                if c["kind"] == NUMERICAL:
                    try:
                        value = float(cell)
                    except ValueError:
                        raise ParseError(
                            f"column {c['name']!r}: {cell!r} is not numeric", row_no
                        ) from None
                    if not math.isfinite(value):
                        raise ParseError(f"column {c['name']!r}: non-finite value", row_no)
                    nums.append((f, value))
                else:
                    vocab = vocabularies[f]
                    idx = vocab.get(cell)
                    if idx is None:
                        if frozen_vocab[f] or cell == "":
                            idx = UNKNOWN_CATEGORY
                        else:
                            idx = vocab[cell] = len(vocab) + 1
                    cats.append((f, idx))
            records.append(FeatureRecord(row_no - 1, tuple(cats), tuple(nums), label))
    return RecordSet(tuple(records), _csv_schema(features, vocabularies))


def _csv_schema(features, vocabularies) -> Schema:
    fields = []
    for c, vocab in zip(features, vocabularies):
        party = _check_party(c["party"]) if c.get("party") is not None else None
        if c["kind"] == NUMERICAL:
            fields.append(Field(c["name"], NUMERICAL, 1, party))
        else:
            fields.append(Field(c["name"], CATEGORICAL, len(vocab) + 1, party))
    return Schema(tuple(fields))


def synthesize(spec: SyntheticSpec, seed: int) -> RecordSet:
    rng = np.random.default_rng(seed)
    n = spec.n_samples
    n_ids = {"A": spec.fields_a - spec.fields_a // 2, "B": spec.fields_b - spec.fields_b // 2}
    n_attrs = {"A": spec.fields_a // 2, "B": spec.fields_b // 2}
    n_nums = {"A": spec.numerical_a, "B": spec.numerical_b}
    # entities [0, n_ids[A]) are identified by A, the rest by B
    first = {"A": 0, "B": n_ids["A"]}
    n_entities = n_ids["A"] + n_ids["B"]

    ranks = np.arange(1, spec.vocab)
    popularity = ranks ** -spec.skew
    popularity /= popularity.sum()
    entity = rng.choice(ranks, size=(n, n_entities), p=popularity)
    quality = rng.normal(size=(n_entities, spec.vocab))
    latent = rng.normal(size=(n_entities, spec.vocab, spec.rank)) / math.sqrt(spec.rank)

    bucket_of = np.zeros((n_entities, spec.vocab), dtype=np.int64)
    for e in range(n_entities):
        cuts = np.quantile(quality[e, 1:], np.linspace(0.0, 1.0, spec.buckets + 1)[1:-1])
        bucket_of[e] = 1 + np.searchsorted(cuts, quality[e])

    rows = np.arange(n_entities)
    score = quality[rows, entity].sum(axis=1)
    v = latent[rows, entity]
    total = v.sum(axis=1)
    score += spec.interaction * 0.5 * ((total**2).sum(axis=1) - (v**2).sum(axis=(1, 2)))
    score = (score - np.median(score)) / (score.std() + 1e-12)
    prob = 1.0 / (1.0 + np.exp(-spec.signal * score))
    labels = (rng.random(n) < prob).astype(np.int64)
    labels = np.where(rng.random(n) < spec.label_noise, 1 - labels, labels)

    fields, columns = [], []
    for party, other in (("A", "B"), ("B", "A")):
        p = party.lower()
        for j in range(n_ids[party]):
            e = first[party] + j
            fields.append(Field(f"{p}_id{j}", CATEGORICAL, spec.vocab, party))
            columns.append(entity[:, e])
        for j in range(n_attrs[party]):
            e = first[other] + j % n_ids[other]
            attr = bucket_of[e][entity[:, e]]
            wrong = rng.random(n) < spec.attribute_noise
            attr = np.where(wrong, rng.integers(1, spec.buckets + 1, size=n), attr)
            fields.append(Field(f"{p}_attr{j}", CATEGORICAL, spec.buckets + 1, party))
            columns.append(attr)
        for j in range(n_nums[party]):
            e = first[other] + j % n_ids[other]
            fields.append(Field(f"{p}_num{j}", NUMERICAL, 1, party))
            columns.append(quality[e][entity[:, e]] + rng.normal(size=n))
    schema = Schema(tuple(fields))

    cat_idx = [i for i, f in enumerate(fields) if f.kind == CATEGORICAL]
    num_idx = [i for i, f in enumerate(fields) if f.kind == NUMERICAL]
    cats = np.stack([columns[i] for i in cat_idx], axis=1).tolist()
    nums = np.stack([columns[i] for i in num_idx], axis=1).tolist() if num_idx else [[]] * n
    records = tuple(
        FeatureRecord(
            s,
            tuple(zip(cat_idx, cats[s])),
            tuple(zip(num_idx, nums[s])),
            int(labels[s]),
        )
        for s in range(n)
    )
    return RecordSet(records, schema)


def default_assignment(schema: Schema) -> dict[int, str]:
    """Field→party map taken from the party hints carried by the schema."""
    out = {}
    for i, f in enumerate(schema.fields):
        if f.party is None:
            raise ConfigurationError(f"field {f.name!r} carries no party hint")
        out[i] = f.party
    return out


def random_assignment(schema: Schema, seed: int, n_a: int | None = None) -> dict[int, str]:
    """Randomly split fields (categorical and numerical alike) between the parties."""
    n = len(schema)
    if n < 2:
        raise ConfigurationError("need at least two fields to split")
    n_a = n // 2 if n_a is None else n_a
    if not 1 <= n_a < n:
        raise ConfigurationError("each party needs at least one field")
    order = np.random.default_rng(seed).permutation(n)
    return {int(f): ("A" if k < n_a else "B") for k, f in enumerate(order)}


def _resolve_assignment(schema: Schema, assignment: Mapping) -> dict[int, str]:
    names = {f.name: i for i, f in enumerate(schema.fields)}
    resolved: dict[int, str] = {}
    for key, party in assignment.items():
        idx = names.get(key, key) if isinstance(key, str) else key
        if not isinstance(idx, (int, np.integer)) or not 0 <= idx < len(schema):
            raise ConfigurationError(f"assignment names unknown field {key!r}")
        if int(idx) in resolved:
            raise ConfigurationError(f"field {key!r} assigned twice")
        resolved[int(idx)] = _check_party(party)
    missing = [schema.fields[i].name for i in range(len(schema)) if i not in resolved]
    if missing:
        raise ConfigurationError(f"unassigned fields: {missing}")
    for p in PARTIES:
        if p not in resolved.values():
            raise ConfigurationError(f"party {p} owns no fields")
    return resolved


class _Projector:
    """Maps global-field records onto one party's locally indexed fields."""

    def __init__(self, schema: Schema, assignment: Mapping[int, str], party: str):
        self.global_fields = [i for i in range(len(schema)) if assignment[i] == party]
        self.local = {g: l for l, g in enumerate(self.global_fields)}
        self.schema = schema.subset(self.global_fields)

    def __call__(self, r: FeatureRecord) -> FeatureRecord:
        loc = self.local
        return FeatureRecord(
            r.sample,
            tuple((loc[f], c) for f, c in r.categorical if f in loc),
            tuple((loc[f], v) for f, v in r.numerical if f in loc),
            r.label,
        )


def overlap_count(n_samples: int, alpha: float) -> int:
    """Number of shared ids giving ``|D^c| / (|D^A| + |D^B|) == alpha``.

    Both party totals include the shared ids, so the ratio cannot exceed 0.5;
    larger requests saturate at full alignment.
    """
    if alpha >= 0.5:
        return n_samples
    return min(n_samples, int(round(alpha * n_samples / (1.0 - alpha))))


def vertical_split(
    records: RecordSet, feature_assignment: Mapping, alpha: float, seed: int
) -> VerticalDataset:
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    assignment = _resolve_assignment(records.schema, feature_assignment)
    n = len(records)
    c = overlap_count(n, alpha)
    if c < 1:
        raise DomainError(f"alpha={alpha} over {n} samples leaves no overlapped ids")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    shared = order[:c]
    rest = order[c:]
    half = (len(rest) + 1) // 2
    only_a, only_b = rest[:half], rest[half:]

    proj_a = _Projector(records.schema, assignment, "A")
    proj_b = _Projector(records.schema, assignment, "B")
    ids_a = np.sort(np.concatenate([shared, only_a]))
    ids_b = np.sort(np.concatenate([shared, only_b]))
    party_a = tuple(proj_a(records[i]) for i in ids_a)
    party_b = tuple(proj_b(records[i]) for i in ids_b)
    overlapped = frozenset(records[i].sample for i in shared)
    alpha_real = len(overlapped) / (len(party_a) + len(party_b))
    return VerticalDataset(party_a, party_b, overlapped, alpha_real, proj_a.schema, proj_b.schema)


def _restrict(records: Iterable[FeatureRecord], ids: frozenset[int]) -> tuple[FeatureRecord, ...]:
    return tuple(r for r in records if r.sample in ids)


def train_val_test_split(
    dataset: VerticalDataset, spec: SplitSpec, alpha: float | None = None
) -> tuple[VerticalDataset, VerticalDataset, VerticalDataset]:
    """Carve training, validation and test views out of ``dataset``.

    Test ids are drawn from ids both parties hold, so every test sample is
    aligned. When ``alpha`` is given the remaining training pool (which must
    then be fully aligned) is re-partitioned so that the training view has
    that overlapped ratio; otherwise the pool keeps its existing overlap.
    Each party's validation set comes from its non-overlapped local records.
    """
    all_ids = sorted(dataset.ids_a | dataset.ids_b)
    if not all_ids:
        raise DomainError("dataset is empty")
    n_total = len(all_ids)
    n_train = int(round(spec.train_fraction * n_total))
    n_test = n_total - n_train
    if n_train < 1 or n_test < 1:
        raise DomainError("split fractions produce an empty partition")
    aligned = sorted(dataset.overlapped)
    if n_test > len(aligned):
        raise DomainError(
            f"test set needs {n_test} aligned ids but only {len(aligned)} are shared"
        )

    rng = np.random.default_rng(spec.seed)
    test_ids = frozenset(aligned[i] for i in rng.permutation(len(aligned))[:n_test])
    pool_ids = frozenset(all_ids) - test_ids
    test = VerticalDataset(
        _restrict(dataset.party_a, test_ids),
        _restrict(dataset.party_b, test_ids),
        test_ids,
        0.5,
        dataset.schema_a,
        dataset.schema_b,
    )

    pool_a = _restrict(dataset.party_a, pool_ids)
    pool_b = _restrict(dataset.party_b, pool_ids)
    pool_overlap = dataset.overlapped - test_ids
    if alpha is not None:
        if not 0.0 < alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
        if len(pool_overlap) != len(pool_ids):
            raise DomainError("re-partitioning by alpha needs a fully aligned pool")
        n = len(pool_ids)
        # validation later removes a share of each party's records, so aim
        # the pool's overlap at alpha * (1 - validation_fraction)
        c = n if alpha >= 0.5 else overlap_count(n, alpha * (1.0 - spec.validation_fraction))
        if c < 1:
            raise DomainError(f"alpha={alpha} over {n} samples leaves no overlapped ids")
        ordered = sorted(pool_ids)
        perm = rng.permutation(n)
        shared = frozenset(ordered[i] for i in perm[:c])
        rest = [ordered[i] for i in perm[c:]]
        half = (len(rest) + 1) // 2
        keep_a = shared | frozenset(rest[:half])
        keep_b = shared | frozenset(rest[half:])
        pool_a = _restrict(pool_a, keep_a)
        pool_b = _restrict(pool_b, keep_b)
        pool_overlap = shared

    # Validation prefers ids private to the party so the shared set stays
    # intact; a party with too few private ids also gives up shared ones,
    # which then leave the overlapped set.
    val_ids = {}
    taken: set[int] = set()
    for name, pool in (("A", pool_a), ("B", pool_b)):
        n_val = int(round(spec.validation_fraction * len(pool)))
        if n_val < 1 or n_val >= len(pool):
            raise DomainError(f"party {name}: validation partition is empty or too large")
        local = [r.sample for r in pool if r.sample not in pool_overlap]
        if n_val <= len(local):
            chosen = [local[i] for i in rng.permutation(len(local))[:n_val]]
        else:
            spare = [r.sample for r in pool if r.sample in pool_overlap and r.sample not in taken]
            extra = [spare[i] for i in rng.permutation(len(spare))[:n_val - len(local)]]
            chosen = local + extra
        val_ids[name] = frozenset(chosen)
        taken |= val_ids[name]
    pool_overlap = pool_overlap - taken

    train_a = tuple(r for r in pool_a if r.sample not in val_ids["A"])
    train_b = tuple(r for r in pool_b if r.sample not in val_ids["B"])
    train = VerticalDataset(
        train_a,
        train_b,
        frozenset(pool_overlap),
        len(pool_overlap) / (len(train_a) + len(train_b)),
        dataset.schema_a,
        dataset.schema_b,
    )
    val = VerticalDataset(
        _restrict(pool_a, val_ids["A"]),
        _restrict(pool_b, val_ids["B"]),
        frozenset(),
        0.0,
        dataset.schema_a,
        dataset.schema_b,
    )
    return train, val, test


def prepare(
    records: RecordSet,
    feature_assignment: Mapping,
    alpha: float,
    split: SplitSpec,
) -> tuple[VerticalDataset, VerticalDataset, VerticalDataset]:
    """Full pipeline: align everything, hold out an aligned test set, then split by alpha."""
    universe = vertical_split(records, feature_assignment, 1.0, split.seed)
    return train_val_test_split(universe, split, alpha=alpha)


@dataclass(frozen=True)
class Encoded:
    """Dense arrays for a sequence of one party's records."""

    ids: np.ndarray
    categories: np.ndarray
    values: np.ndarray
    labels: np.ndarray
    positions: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.ids)

    def take(self, idx) -> "Encoded":
        return Encoded(self.ids[idx], self.categories[idx], self.values[idx], self.labels[idx])


def encode(records: Sequence[FeatureRecord], schema: Schema) -> Encoded:
    """Turn records into ``(n, fields)`` category-index and value arrays.

    Categorical fields carry value 1 (a missing one falls back to the
    reserved category 0); numerical fields use slot 0 scaled by the value
    (missing → 0).
    """
    n, F = len(records), len(schema)
    cats = np.zeros((n, F), dtype=np.int64)
    vals = np.zeros((n, F))
    numerical = schema.numerical
    for f in range(F):
        if not numerical[f]:
            vals[:, f] = 1.0
    for row, r in enumerate(records):
        for f, c in r.categorical:
            cats[row, f] = c
        for f, v in r.numerical:
            vals[row, f] = v
    ids = np.fromiter((r.sample for r in records), dtype=np.int64, count=n)
    labels = np.fromiter((r.label for r in records), dtype=np.int64, count=n)
    positions = {int(s): i for i, s in enumerate(ids)}
    return Encoded(ids, cats, vals, labels, positions)
