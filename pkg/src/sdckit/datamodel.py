"""Schema, table and taxonomy types, plus CSV/JSON/TSV ingestion and emission.

Tables are immutable and validated on construction, so every downstream
operation can assume well-formed input.
"""

import csv
import io
import json
import math
import os
import tempfile
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DataFormatError, TaxonomyError, ValidationError

NUMERIC = "numeric"
CATEGORICAL = "categorical"
KINDS = (NUMERIC, CATEGORICAL)

IDENTIFIER = "identifier"
QUASI_IDENTIFIER = "quasi-identifier"
CONFIDENTIAL = "confidential"
ROLES = (IDENTIFIER, QUASI_IDENTIFIER, CONFIDENTIAL)


class Taxonomy:
    """A single-rooted concept hierarchy (multiple parents allowed).

    Concepts are kept in sorted name order; the position of a concept in
    ``concepts`` is its integer code, so code order equals lexicographic order.
    """

    def __init__(self, parents, name=None):
        parent_map = {}
        for child, ps in parents.items():
            parent_map[str(child)] = tuple(sorted({str(p) for p in ps}))
        concepts = set(parent_map)
        for ps in parent_map.values():
            concepts.update(ps)
        if not concepts:
            raise TaxonomyError("taxonomy has no concepts (no root)")
        roots = sorted(c for c in concepts if not parent_map.get(c))
        if len(roots) != 1:
            raise TaxonomyError(f"taxonomy must have exactly one root, found {roots}")
        self.name = name
        self.root = roots[0]
        self.parents = {c: parent_map.get(c, ()) for c in concepts}
        self.concepts = tuple(sorted(concepts))
        self.index = {c: i for i, c in enumerate(self.concepts)}
        self.ancestors = self._closure()

    def _closure(self):
        children = defaultdict(list)
        indegree = {c: len(self.parents[c]) for c in self.concepts}
        for c, ps in self.parents.items():
            for p in ps:
                children[p].append(c)
        # Kahn order from the root down; leftovers sit on a cycle
        order, frontier = [], [c for c in self.concepts if indegree[c] == 0]
        while frontier:
            c = frontier.pop()
            order.append(c)
            for ch in children[c]:
                indegree[ch] -= 1
                if indegree[ch] == 0:
                    frontier.append(ch)
        if len(order) != len(self.concepts):
            stuck = sorted(c for c in self.concepts if indegree[c] > 0)
            raise TaxonomyError(f"taxonomy contains a cycle through {stuck}")
        anc = {}
        for c in order:
            s = {c}
            for p in self.parents[c]:
                s |= anc[p]
            anc[c] = frozenset(s)
        return anc

    @classmethod
    def from_edges(cls, edges, name=None):
        parents = defaultdict(set)
        for child, parent in edges:
            parents[child].add(parent)
        return cls(parents, name=name)

    def phi(self, concept):
        try:
            return self.ancestors[concept]
        except KeyError:
            raise ValidationError(f"unknown concept {concept!r}") from None

    def __contains__(self, concept):
        return concept in self.index

    def __len__(self):
        return len(self.concepts)

    def __eq__(self, other):
        return isinstance(other, Taxonomy) and self.parents == other.parents

    def __hash__(self):
        return hash(self.concepts)

    def __repr__(self):
        return f"Taxonomy(name={self.name!r}, root={self.root!r}, size={len(self)})"

    @cached_property
    def distance_matrix(self):
        """Pairwise semantic distances indexed by concept code."""
        n = len(self.concepts)
        out = np.zeros((n, n))
        sets = [self.ancestors[c] for c in self.concepts]
        for i in range(n):
            for j in range(i + 1, n):
                u = len(sets[i] | sets[j])
                out[i, j] = out[j, i] = math.log2(1.0 + (u - len(sets[i] & sets[j])) / u)
        out.setflags(write=False)
        return out

    def edges(self):
        return [(c, p) for c in self.concepts for p in self.parents[c]]


def flat_taxonomy(labels, root="ANY", name=None):
    """Taxonomy with every label directly under a common root."""
    return Taxonomy({lab: {root} for lab in labels}, name=name)


@dataclass(frozen=True)
class AttributeSchema:
    name: str
    kind: str
    role: str = QUASI_IDENTIFIER
    bounds: tuple = None
    taxonomy: Taxonomy = field(default=None, compare=False)
    taxonomy_ref: str = None

    def __post_init__(self):
        if not self.name:
            raise ValidationError("attribute name must be non-empty")
        if self.kind not in KINDS:
            raise ValidationError(f"attribute {self.name!r}: kind must be one of {KINDS}")
        if self.role not in ROLES:
            raise ValidationError(f"attribute {self.name!r}: role must be one of {ROLES}")
        if self.role == IDENTIFIER:
            return
        if self.kind == NUMERIC:
            if self.bounds is None or len(self.bounds) != 2:
                raise ValidationError(f"numeric attribute {self.name!r} needs bounds [a_b, a_t]")
            lo, hi = (float(b) for b in self.bounds)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValidationError(f"numeric attribute {self.name!r} needs finite a_b < a_t")
            object.__setattr__(self, "bounds", (lo, hi))
        elif self.taxonomy is None:
            raise ValidationError(f"categorical attribute {self.name!r} needs a taxonomy")

    @property
    def is_numeric(self):
        return self.kind == NUMERIC

    @property
    def span(self):
        return self.bounds[1] - self.bounds[0]


@dataclass(frozen=True)
class DatasetTable:
    schema: tuple
    rows: tuple

    def __post_init__(self):
        schema = tuple(self.schema)
        names = [a.name for a in schema]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate attribute names in schema")
        rows = []
        for r, row in enumerate(self.rows, start=1):
            row = tuple(row)
            if len(row) != len(schema):
                raise DataFormatError(f"expected {len(schema)} cells, got {len(row)}", row=r)
            rows.append(tuple(_check_cell(a, v, r) for a, v in zip(schema, row)))
        if not rows:
            raise ValidationError("a table needs at least one row")
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "rows", tuple(rows))

    def __len__(self):
        return len(self.rows)

    @property
    def names(self):
        return tuple(a.name for a in self.schema)

    def position(self, name):
        for i, a in enumerate(self.schema):
            if a.name == name:
                return i
        raise ValidationError(f"unknown attribute {name!r}")

    def attribute(self, name):
        return self.schema[self.position(name)]

    def column(self, name):
        i = self.position(name)
        return [row[i] for row in self.rows]

    def names_with_role(self, role):
        return tuple(a.name for a in self.schema if a.role == role)

    def numeric_matrix(self, names=None):
        names = self.names if names is None else names
        idx = [self.position(n) for n in names]
        return np.array([[row[i] for i in idx] for row in self.rows], dtype=float).reshape(len(self), len(idx))

    def with_columns(self, columns, schema=None):
        """New table with the named columns replaced; ``schema`` may override attribute metadata."""
        attrs = list(self.schema)
        if schema:
            for a in schema:
                attrs[self.position(a.name)] = a
        cols = {self.position(n): list(v) for n, v in columns.items()}
        for v in cols.values():
            if len(v) != len(self):
                raise ValidationError("replacement column has the wrong length")
        rows = [tuple(cols[j][r] if j in cols else cell for j, cell in enumerate(row))
                for r, row in enumerate(self.rows)]
        return DatasetTable(tuple(attrs), tuple(rows))

    def drop_identifiers(self):
        keep = [i for i, a in enumerate(self.schema) if a.role != IDENTIFIER]
        if len(keep) == len(self.schema):
            return self
        return DatasetTable(tuple(self.schema[i] for i in keep),
                            tuple(tuple(row[i] for i in keep) for row in self.rows))


def _check_cell(attr, value, r):
    if attr.role == IDENTIFIER:
        if value is None or value == "":
            raise DataFormatError("missing identifier value", row=r, column=attr.name)
        return value
    if attr.kind == NUMERIC:
        if isinstance(value, str):
            value = _parse_float(value, r, attr.name)
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise DataFormatError("non-numeric value", row=r, column=attr.name) from None
        if not math.isfinite(value):
            raise DataFormatError("non-finite numeric value", row=r, column=attr.name)
        lo, hi = attr.bounds
        if value < lo or value > hi:
            raise DataFormatError(f"value {value!r} outside domain [{lo!r}, {hi!r}]",
                                  row=r, column=attr.name)
        return value
    if not isinstance(value, str) or value == "":
        raise DataFormatError("missing categorical value", row=r, column=attr.name)
    if attr.taxonomy is not None and value not in attr.taxonomy:
        raise DataFormatError(f"unknown categorical value {value!r}", row=r, column=attr.name)
    return value


def _parse_float(text, r, column):
    text = text.strip()
    if text == "":
        raise DataFormatError("missing value", row=r, column=column)
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(f"cannot parse {text!r} as a number", row=r, column=column) from None
    if not math.isfinite(value):
        raise DataFormatError(f"non-finite value {text!r}", row=r, column=column)
    return value


def load_taxonomy(path, name=None):
    """Read a ``child<TAB>parent`` edge list."""
    edges = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"taxonomy file is not UTF-8: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise TaxonomyError(f"taxonomy line {lineno}: expected 'child<TAB>parent'")
        child, parent = parts[0].strip(), parts[1].strip()
        if child == parent:
            raise TaxonomyError(f"taxonomy contains a cycle through {[child]}")
        edges.append((child, parent))
    if not edges:
        raise TaxonomyError("taxonomy file has no edges (no root)")
    return Taxonomy.from_edges(edges, name=name or Path(path).stem)


def load_schema(path):
    path = Path(path)
    try:
        spec = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"schema is not valid JSON: {exc}") from None
    if isinstance(spec, dict):
        spec = spec.get("attributes")
    if not isinstance(spec, list) or not spec:
        raise DataFormatError("schema must list at least one attribute")
    taxonomies = {}
    attrs = []
    for entry in spec:
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise DataFormatError(f"schema entry {entry!r} needs 'name' and 'kind'")
        tax, ref = None, entry.get("taxonomy")
        if ref is not None:
            if ref not in taxonomies:
                taxonomies[ref] = load_taxonomy(path.parent / ref)
            tax = taxonomies[ref]
        bounds = entry.get("bounds")
        attrs.append(AttributeSchema(
            name=str(entry["name"]), kind=entry["kind"],
            role=entry.get("role", QUASI_IDENTIFIER),
            bounds=tuple(bounds) if bounds is not None else None,
            taxonomy=tax, taxonomy_ref=ref))
    return tuple(attrs)


def load_dataset(csv_path, schema_path):
    """Parse and validate a CSV file against a JSON schema; identifier columns, if present, are dropped."""
    schema = load_schema(schema_path)
    try:
        with open(csv_path, encoding="utf-8", newline="") as fh:
            records = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"CSV is not UTF-8: {exc}") from None
    except csv.Error as exc:
        raise DataFormatError(f"malformed CSV: {exc}") from None
    if not records:
        raise DataFormatError("CSV file is empty (no header row)")
    header = [h.strip() for h in records[0]]
    for a in schema:
        if a.name not in header and a.role != IDENTIFIER:
            raise DataFormatError(f"missing attribute {a.name!r} in CSV header", row=0)
    extra = [h for h in header if h not in {a.name for a in schema}]
    if extra:
        raise DataFormatError(f"CSV columns not in schema: {extra}", row=0)
    # identifier columns are optional since they are dropped anyway
    schema = tuple(a for a in schema if a.name in header)
    pos = [header.index(a.name) for a in schema]
    rows = []
    for r, rec in enumerate(records[1:], start=1):
        if not rec:
            continue
        if len(rec) != len(header):
            raise DataFormatError(f"expected {len(header)} fields, got {len(rec)}", row=r)
        rows.append(tuple(rec[p] for p in pos))
    return DatasetTable(schema, tuple(rows)).drop_identifiers()


def format_cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def table_to_csv(table):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.names)
    for row in table.rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def atomic_write_text(path, text):
    """Write via a temporary sibling file and rename, so failures leave no partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_dataset(table, path):
    if not isinstance(table, DatasetTable):
        raise ValidationError("save_dataset expects a DatasetTable")
    atomic_write_text(path, table_to_csv(table))


def save_schema(schema, path):
    """Write a schema JSON; taxonomies without a file reference are written next to it."""
    path = Path(path)
    entries = []
    for a in schema:
        entry = {"name": a.name, "kind": a.kind, "role": a.role}
        if a.is_numeric:
            entry["bounds"] = list(a.bounds)
        elif a.taxonomy is not None:
            ref = a.taxonomy_ref or f"{path.stem}.{a.name}.tsv"
            if a.taxonomy_ref is None or not (path.parent / ref).exists():
                edges = "".join(f"{c}\t{p}\n" for c, p in a.taxonomy.edges())
                atomic_write_text(path.parent / ref, edges)
            entry["taxonomy"] = ref
        entries.append(entry)
    atomic_write_text(path, json.dumps({"attributes": entries}, indent=2) + "\n")
