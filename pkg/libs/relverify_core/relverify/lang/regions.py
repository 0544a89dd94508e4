"""References, regions and reference permutations.

These are the concrete values of the state model. They are immutable and
safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, Mapping, Optional, Tuple


@dataclass(frozen=True, order=True)
class Reference:
    """Opaque object identity. Only equality is meaningful; id 0 is null."""

    id: int

    @property
    def is_null(self) -> bool:
        return self.id == 0

    def __str__(self) -> str:
        return "null" if self.is_null else f"r{self.id}"


NULL = Reference(0)


@dataclass(frozen=True)
class Region:
    """Finite set of references; may contain null."""

    elems: FrozenSet[Reference] = frozenset()

    @staticmethod
    def of(*refs: Reference) -> "Region":
        return Region(frozenset(refs))

    def __contains__(self, r: object) -> bool:
        return r in self.elems

    def __iter__(self) -> Iterator[Reference]:
        return iter(sorted(self.elems))

    def __len__(self) -> int:
        return len(self.elems)

    def union(self, other: "Region") -> "Region":
        return Region(self.elems | other.elems)

    def inter(self, other: "Region") -> "Region":
        return Region(self.elems & other.elems)

    def diff(self, other: "Region") -> "Region":
        return Region(self.elems - other.elems)

    def subset(self, other: "Region") -> bool:
        return self.elems <= other.elems

    def __str__(self) -> str:
        return "{" + ", ".join(str(r) for r in self) + "}"


EMPTY = Region()


class RefPermError(ValueError):
    pass


@dataclass(frozen=True)
class RefPerm:
    """Partial bijection from left-allocated to right-allocated references."""

    pairs: Tuple[Tuple[Reference, Reference], ...] = ()

    def __post_init__(self) -> None:
        fwd: Dict[Reference, Reference] = {}
        bwd: Dict[Reference, Reference] = {}
        for left, right in self.pairs:
            if left.is_null or right.is_null:
                raise RefPermError("refperm never relates null")
            if fwd.get(left, right) != right or bwd.get(right, left) != left:
                raise RefPermError(f"refperm not injective at {left}|{right}")
            fwd[left] = right
            bwd[right] = left
        object.__setattr__(self, "_fwd", fwd)
        object.__setattr__(self, "_bwd", bwd)

    @staticmethod
    def from_mapping(m: Mapping[Reference, Reference]) -> "RefPerm":
        return RefPerm(tuple(sorted(m.items())))

    @property
    def forward(self) -> Mapping[Reference, Reference]:
        return dict(self._fwd)  # type: ignore[attr-defined]

    def get(self, left: Reference) -> Optional[Reference]:
        return self._fwd.get(left)  # type: ignore[attr-defined]

    def get_inverse(self, right: Reference) -> Optional[Reference]:
        return self._bwd.get(right)  # type: ignore[attr-defined]

    def domain(self) -> FrozenSet[Reference]:
        return frozenset(self._fwd)  # type: ignore[attr-defined]

    def range(self) -> FrozenSet[Reference]:
        return frozenset(self._bwd)  # type: ignore[attr-defined]

    def inverse(self) -> "RefPerm":
        return RefPerm(tuple(sorted((r, l) for l, r in self.pairs)))

    def compose(self, other: "RefPerm") -> "RefPerm":
        """``other`` after ``self``: maps l to other(self(l)) where both are defined."""
        out = []
        for left, mid in self.pairs:
            right = other.get(mid)
            if right is not None:
                out.append((left, right))
        return RefPerm(tuple(out))

    def extend(self, left: Reference, right: Reference) -> "RefPerm":
        if self.get(left) == right:
            return self
        return RefPerm(self.pairs + ((left, right),))

    def includes(self, other: "RefPerm") -> bool:
        return all(self.get(l) == r for l, r in other.pairs)

    def relates(self, left: Reference, right: Reference) -> bool:
        if left.is_null or right.is_null:
            return left.is_null and right.is_null
        return self.get(left) == right

    def image(self, region: Region) -> Optional[Region]:
        """Elementwise image, null mapped to null; None if some element is unmapped."""
        out = []
        for r in region.elems:
            if r.is_null:
                out.append(r)
                continue
            m = self.get(r)
            if m is None:
                return None
            out.append(m)
        return Region(frozenset(out))

    def __len__(self) -> int:
        return len(self.pairs)


def region_of(refs: Iterable[Reference]) -> Region:
    return Region(frozenset(refs))


__all__ = ["Reference", "NULL", "Region", "EMPTY", "RefPerm", "RefPermError", "region_of"]
