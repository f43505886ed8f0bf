"""IRMA annotation codes and the hierarchical retrieval error.

An IRMA code has four hyphen-separated axes (technical, directional,
anatomical, biological), e.g. ``1121-4a0-914-700``.  A retrieval is charged
for every code position at or after the first disagreement within an axis,
each weighted by ``1 / (branches * position)``.  Branch counts come from a
:class:`BranchTable` derived from an annotated corpus.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from .exceptions import (
    AxisLengthMismatch,
    EmptyCorpus,
    InconsistentAxisLengths,
    MalformedCode,
    MissingBranchEntry,
)

_AXIS = re.compile(r"[0-9a-z]+")
NUM_AXES = 4


@dataclass(frozen=True)
class IrmaCode:
    axes: tuple[str, str, str, str]

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(axes) != NUM_AXES or not all(isinstance(a, str) and _AXIS.fullmatch(a) for a in axes):
            raise MalformedCode(f"invalid axes {axes!r}")
        object.__setattr__(self, "axes", axes)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    def __str__(self):
        return "-".join(self.axes)


def parse_code(text: str) -> IrmaCode:
    """Parse ``AXIS-AXIS-AXIS-AXIS``; axis lengths are taken from the text."""
    if not isinstance(text, str):
        raise MalformedCode(f"expected a string, got {type(text).__name__}")
    parts = text.strip().split("-")
    if len(parts) != NUM_AXES:
        raise MalformedCode(f"{text!r}: expected {NUM_AXES} axes, found {len(parts)}")
    for part in parts:
        if not _AXIS.fullmatch(part):
            raise MalformedCode(f"{text!r}: axis {part!r} must be non-empty and use only 0-9, a-z")
    return IrmaCode(tuple(parts))


def _as_code(code) -> IrmaCode:
    return code if isinstance(code, IrmaCode) else parse_code(code)


class BranchTable:
    """Branch counts keyed by ``(axis, position, prefix)``.

    Axis and position are 1-based; ``prefix`` is the string of the axis's
    characters before ``position``.
    """

    def __init__(self, counts: dict[tuple[int, int, str], int], lengths: tuple[int, ...]):
        for key, b in counts.items():
            if b < 1:
                raise ValueError(f"branch count for {key} must be >= 1, got {b}")
        self._counts = dict(counts)
        self.lengths = tuple(lengths)

    def __getitem__(self, key) -> int:
        try:
            return self._counts[key]
        except KeyError:
            j, i, prefix = key
            raise MissingBranchEntry(
                f"no branch count for axis {j}, position {i}, prefix {prefix!r}"
            ) from None

    def __contains__(self, key):
        return key in self._counts

    def __len__(self):
        return len(self._counts)

    def __eq__(self, other):
        if not isinstance(other, BranchTable):
            return NotImplemented
        return self._counts == other._counts and self.lengths == other.lengths

    def items(self):
        return sorted(self._counts.items())

    def to_text(self) -> str:
        """Sorted ``j,i,prefix,b`` lines preceded by a ``lengths`` line."""
        lines = ["lengths," + ",".join(str(n) for n in self.lengths)]
        lines += [f"{j},{i},{prefix},{b}" for (j, i, prefix), b in self.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BranchTable":
        lines = text.strip().splitlines()
        if not lines or not lines[0].startswith("lengths,"):
            raise ValueError("branch table text must start with a lengths line")
        lengths = tuple(int(n) for n in lines[0].split(",")[1:])
        counts = {}
        for line in lines[1:]:
            j, i, prefix, b = line.split(",")
            counts[(int(j), int(i), prefix)] = int(b)
        return cls(counts, lengths)


def build_branch_table(codes: Iterable) -> BranchTable:
    codes = [_as_code(c) for c in codes]
    if not codes:
        raise EmptyCorpus("cannot build a branch table from no codes")
    lengths = codes[0].lengths
    successors: dict[tuple[int, int, str], set[str]] = defaultdict(set)
    for code in codes:
        if code.lengths != lengths:
            raise InconsistentAxisLengths(f"{code} has axis lengths {code.lengths}, expected {lengths}")
        for j, axis in enumerate(code.axes, start=1):
            for i, ch in enumerate(axis, start=1):
                successors[(j, i, axis[: i - 1])].add(ch)
    return BranchTable({k: len(v) for k, v in successors.items()}, lengths)


def code_error(query, retrieved, bt: BranchTable) -> float:
    """Hierarchical error between a query code and its retrieved code.

    Within each axis, once a position disagrees every later position of that
    axis is charged as well.  Branch counts are looked up with the query's
    prefix, and only for charged positions.
    """
    query, retrieved = _as_code(query), _as_code(retrieved)
    if query.lengths != retrieved.lengths:
        raise AxisLengthMismatch(f"axis lengths differ: {query.lengths} vs {retrieved.lengths}")
    err = 0.0
    for j, (qa, ra) in enumerate(zip(query.axes, retrieved.axes), start=1):
        mismatch = False
        for i, (qc, rc) in enumerate(zip(qa, ra), start=1):
            mismatch = mismatch or qc != rc
            if mismatch:
                err += 1.0 / (bt[(j, i, qa[: i - 1])] * i)
    return err


def max_code_error(query, bt: BranchTable) -> float:
    """Error of a retrieval that disagrees at the first position of every axis."""
    query = _as_code(query)
    return sum(
        1.0 / (bt[(j, i, axis[: i - 1])] * i)
        for j, axis in enumerate(query.axes, start=1)
        for i in range(1, len(axis) + 1)
    )


def total_error(pairs, bt: BranchTable) -> float:
    return float(sum(code_error(q, r, bt) for q, r in pairs))
