"""Partition matroids."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence


class MatroidError(ValueError):
    pass


class Matroid(ABC):
    ground_set: tuple

    @abstractmethod
    def rank(self, S: Iterable) -> int: ...

    def is_independent(self, S: Iterable) -> bool:
        S = set(S)
        return self.rank(S) == len(S)


@dataclass(frozen=True)
class LinearRow:
    """sum_{u in support} y_u <= rhs"""
    support: tuple
    rhs: int
    name: str = ""


class PartitionMatroid(Matroid):
    """I is independent iff |I & part_i| <= cap_i for every part."""

    def __init__(self, parts: Sequence[Iterable[Hashable]], caps: Sequence[int], names: Sequence[str] | None = None):
        parts = [tuple(p) for p in parts]
        if len(parts) != len(caps):
            raise MatroidError("one capacity per part required")
        self.part_of: dict = {}
        for i, part in enumerate(parts):
            for u in part:
                if u in self.part_of:
                    raise MatroidError(f"element {u!r} appears in more than one part")
                self.part_of[u] = i
        for c in caps:
            if int(c) != c or c < 0:
                raise MatroidError(f"capacities must be nonnegative integers, got {c!r}")
        self.parts = parts
        self.caps = tuple(int(c) for c in caps)
        self.names = tuple(names) if names is not None else tuple(f"part{i}" for i in range(len(parts)))
        self.ground_set = tuple(u for part in parts for u in part)

    def _counts(self, S: Iterable) -> list[int]:
        counts = [0] * len(self.parts)
        for u in set(S):
            try:
                counts[self.part_of[u]] += 1
            except KeyError:
                raise MatroidError(f"{u!r} is not in the ground set") from None
        return counts

    def rank(self, S: Iterable) -> int:
        return sum(min(c, cap) for c, cap in zip(self._counts(S), self.caps))

    def is_independent(self, S: Iterable) -> bool:
        return all(c <= cap for c, cap in zip(self._counts(S), self.caps))

    def full_rank(self) -> int:
        return self.rank(self.ground_set)

    def emit_lp_constraints(self) -> list[LinearRow]:
        """One cap row per part; together with 0 <= y <= 1 this is the
        matroid polytope."""
        return [LinearRow(part, cap, name) for part, cap, name in zip(self.parts, self.caps, self.names)]

    def to_dict(self) -> dict:
        return {"parts": [list(p) for p in self.parts], "caps": list(self.caps), "names": list(self.names)}

    @classmethod
    def from_dict(cls, d: dict) -> "PartitionMatroid":
        return cls(d["parts"], d["caps"], d.get("names"))

    def __repr__(self):
        return f"PartitionMatroid({len(self.parts)} parts, caps={self.caps})"


def is_independent(M: Matroid, S: Iterable) -> bool:
    return M.is_independent(S)


def rank(M: Matroid, S: Iterable) -> int:
    return M.rank(S)


def emit_lp_constraints(M: PartitionMatroid) -> list[LinearRow]:
    return M.emit_lp_constraints()
