"""Spin labels, sector enumeration, and dimension bookkeeping.

Spins are stored as doubled integers (twice_j), so half-integers are exact
and all dimension arithmetic stays in exact integers until logarithms are
needed.  A *sector* assigns a spin to every link of a graph; the total space
decomposes into a direct sum over sectors.  Per sector we track:

    d_e           = 2 j_e + 1                      (link dimension)
    D(j^x)        = dim Inv(V_{j_1} x ... x V_{j_D})   (intertwiner dimension)
    D_I(E)        = sum over bulk spins of prod_x D(j^x)  at fixed boundary E
    D_O(E)        = prod over boundary links of d_e
    D_E           = D_I(E) * D_O(E)

The intertwiner dimension (multiplicity of total spin 0) is computed by
dynamic programming over intermediate-spin multiplicities, i.e. iterated
Clebsch-Gordan fusion; the cache is keyed by the sorted spin multiset, which
makes permutation invariance automatic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import log
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple

from .graph import OpenGraph


@dataclass(frozen=True, order=True)
class Spin:
    """An SU(2) spin j, stored as twice_j = 2j."""

    twice: int

    def __post_init__(self):
        if self.twice < 0:
            raise ValueError(f"negative spin: twice_j = {self.twice}")

    @property
    def j(self) -> float:
        return self.twice / 2.0

    @property
    def dim(self) -> int:
        """Bond dimension d_j = 2j + 1."""
        return self.twice + 1

    @staticmethod
    def parse(value) -> "Spin":
        """Accept a Spin, an int/float j, or a string like "3/2"."""
        if isinstance(value, Spin):
            return value
        fr = Fraction(str(value))
        twice = 2 * fr
        if twice.denominator != 1:
            raise ValueError(f"{value!r} is not a half-integer spin")
        return Spin(int(twice))

    def __str__(self) -> str:
        return str(self.twice // 2) if self.twice % 2 == 0 else f"{self.twice}/2"


def link_dim(j: Spin) -> int:
    """d_j = 2j + 1."""
    return j.dim


@lru_cache(maxsize=None)
def _fusion_multiplicities(sorted_twice: Tuple[int, ...]) -> Tuple[int, ...]:
    """Multiplicity of each total twice-spin in the tensor product.

    Returns a tuple m with m[t] = multiplicity of total spin t/2; the length
    is sum(sorted_twice) + 1.  Iterated Clebsch-Gordan: fusing total spin t
    with spin s yields every t' in |t - s| .. t + s in steps of 2 (twice
    units) exactly once.
    """
    mult = [0] * (sum(sorted_twice) + 1)
    mult[sorted_twice[0]] = 1
    reached = sorted_twice[0]
    for s in sorted_twice[1:]:
        new = [0] * (sum(sorted_twice) + 1)
        for t in range(reached + 1):
            m = mult[t]
            if m == 0:
                continue
            for t2 in range(abs(t - s), t + s + 1, 2):
                new[t2] += m
        reached += s
        mult = new
    return tuple(mult)


def intertwiner_dim(spins: Sequence[Spin]) -> int:
    """Multiplicity of total spin 0 in the product of the given spins.

    Invariant under permutations of the tuple; 0 whenever parity (integer
    total) or polygon inequalities obstruct an invariant vector.
    """
    if len(spins) == 0:
        raise ValueError("intertwiner_dim needs at least one spin")
    key = tuple(sorted(s.twice for s in spins))
    return _fusion_multiplicities(key)[0]


class SectorEnumerationError(RuntimeError):
    """Enumeration would exceed the configured sector-count guard."""


@dataclass(frozen=True)
class SectorFamily:
    """Cutoffs, allowed spin lists, and link superposition weights.

    `allowed` maps each link id to its ascending tuple of allowed spins
    (default: every half-integer in [lower, upper]).  `weights` maps internal
    link ids to {twice_j: complex amplitude}; boundary links always carry
    weight 1.  With `normalized=True` the per-link weights satisfy
    sum |g|^2 = 1.
    """

    lower: Spin
    upper: Spin
    allowed: Mapping[str, Tuple[Spin, ...]]
    weights: Mapping[str, Mapping[int, complex]]

    @staticmethod
    def build(
        graph: OpenGraph,
        lower,
        upper,
        allowed: Optional[Mapping[str, Sequence]] = None,
        weights: Optional[Mapping[str, Mapping]] = None,
        normalize: bool = True,
    ) -> "SectorFamily":
        lo, hi = Spin.parse(lower), Spin.parse(upper)
        if lo > hi:
            raise ValueError(f"lower cutoff {lo} exceeds upper cutoff {hi}")
        grid = tuple(Spin(t) for t in range(lo.twice, hi.twice + 1))
        allowed = dict(allowed or {})
        table: Dict[str, Tuple[Spin, ...]] = {}
        for lid in graph.link_ids():
            if lid in allowed:
                spins = tuple(sorted(Spin.parse(s) for s in allowed[lid]))
                if not spins:
                    raise ValueError(f"link {lid!r} has an empty allowed-spin list")
                for s in spins:
                    if not lo <= s <= hi:
                        raise ValueError(
                            f"link {lid!r}: spin {s} outside cutoffs [{lo}, {hi}]"
                        )
                table[lid] = spins
            else:
                table[lid] = grid
        internal = set(graph.internal_ids())
        wtable: Dict[str, Dict[int, complex]] = {}
        for lid in internal:
            given = (weights or {}).get(lid)
            if given is None:
                w = {s.twice: 1.0 + 0.0j for s in table[lid]}
            else:
                w = {Spin.parse(k).twice: complex(v) for k, v in given.items()}
                if set(w) != {s.twice for s in table[lid]}:
                    raise ValueError(
                        f"weights for link {lid!r} do not match its allowed spins"
                    )
            if normalize:
                norm = sum(abs(v) ** 2 for v in w.values()) ** 0.5
                if norm == 0.0:
                    raise ValueError(f"all-zero weights on link {lid!r}")
                w = {k: v / norm for k, v in w.items()}
            wtable[lid] = w
        for lid in (weights or {}):
            if lid not in internal:
                raise ValueError(f"weights given for non-internal link {lid!r}")
        return SectorFamily(lower=lo, upper=hi, allowed=table, weights=wtable)

    def g(self, link_id: str, spin: Spin) -> complex:
        """Superposition amplitude of `spin` on `link_id` (1 on the boundary)."""
        w = self.weights.get(link_id)
        if w is None:
            return 1.0 + 0.0j
        return w.get(spin.twice, 0.0 + 0.0j)

    def validate(self, graph: OpenGraph, tol: float = 1e-12) -> None:
        for lid in graph.internal_ids():
            total = sum(abs(v) ** 2 for v in self.weights[lid].values())
            if abs(total - 1.0) > tol:
                raise ValueError(
                    f"link {lid!r}: sum |g|^2 = {total!r} is not normalized"
                )


@dataclass(frozen=True)
class SpinSector:
    """A complete spin assignment on a graph's links."""

    graph: OpenGraph
    assignment: Tuple[Tuple[str, int], ...]  # (link id, twice_j), canonical order

    @staticmethod
    def make(graph: OpenGraph, spins: Mapping[str, object]) -> "SpinSector":
        order = graph.link_ids()
        missing = [lid for lid in order if lid not in spins]
        if missing:
            raise ValueError(f"sector misses links {missing}")
        extra = [lid for lid in spins if lid not in set(order)]
        if extra:
            raise ValueError(f"sector assigns unknown links {extra}")
        return SpinSector(
            graph=graph,
            assignment=tuple((lid, Spin.parse(spins[lid]).twice) for lid in order),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpinSector):
            return NotImplemented
        return self.assignment == other.assignment and self.graph == other.graph

    def __hash__(self) -> int:
        # The graph is deliberately left out: its valence mapping is a
        # plain dict, and sectors are only ever pooled per graph anyway.
        return hash(self.assignment)

    def spin(self, link_id: str) -> Spin:
        for lid, t in self.assignment:
            if lid == link_id:
                return Spin(t)
        raise KeyError(link_id)

    def spins(self) -> Dict[str, Spin]:
        return {lid: Spin(t) for lid, t in self.assignment}

    def vertex_spins(self, vertex: str) -> Tuple[Spin, ...]:
        """Spin tuple j^x, ordered by port number."""
        lookup = dict(self.assignment)
        return tuple(Spin(lookup[lid]) for lid in self.graph.links_at(vertex))

    def boundary_part(self) -> Tuple[Tuple[str, int], ...]:
        bnd = set(self.graph.boundary_ids())
        return tuple((lid, t) for lid, t in self.assignment if lid in bnd)

    def bulk_part(self) -> Tuple[Tuple[str, int], ...]:
        bnd = set(self.graph.boundary_ids())
        return tuple((lid, t) for lid, t in self.assignment if lid not in bnd)

    def key(self) -> Tuple[Tuple[str, int], ...]:
        """Hashable canonical id used by partition tables."""
        return self.assignment

    def label(self) -> str:
        return ",".join(f"{lid}={Spin(t)}" for lid, t in self.assignment)


@dataclass(frozen=True)
class SectorDims:
    """All dimension data of one sector within a family."""

    link_dims: Mapping[str, int]
    intertwiner_dims: Mapping[str, int]
    bulk_intertwiner_product: int  # prod_x D(j^x) for this sector's bulk spins
    d_input: int                   # D_I(E): boundary-fixed bulk dimension
    d_output: int                  # D_O(E): prod over boundary links of d
    dim_sector: int                # dim of the sector's product vertex space

    @property
    def d_total(self) -> int:
        return self.d_input * self.d_output

    @property
    def r(self) -> float:
        if self.d_output == 0:
            raise ZeroDivisionError("r undefined: D_O = 0")
        return self.d_input / self.d_output

    @property
    def beta(self) -> float:
        return log(self.d_output)


def enumerate_sectors(
    family: SectorFamily,
    graph: OpenGraph,
    boundary_filter: Optional[Mapping[str, object]] = None,
    limit: int = 10**6,
) -> Iterator[SpinSector]:
    """Yield all sectors in lexicographic order of the canonical link order.

    With `boundary_filter` (a {boundary link id: spin} mapping) only the bulk
    spins vary.  Refuses enumerations larger than `limit`.
    """
    order = graph.link_ids()
    fixed: Dict[str, Spin] = {}
    if boundary_filter is not None:
        bnd = set(graph.boundary_ids())
        for lid, sp in boundary_filter.items():
            if lid not in bnd:
                raise ValueError(f"boundary filter names non-boundary link {lid!r}")
            fixed[lid] = Spin.parse(sp)
        if set(fixed) != bnd:
            raise ValueError("boundary filter must fix every boundary link")
    choices = []
    total = 1
    for lid in order:
        opts = (fixed[lid],) if lid in fixed else family.allowed[lid]
        choices.append(opts)
        total *= len(opts)
    if total > limit:
        raise SectorEnumerationError(
            f"{total} sectors exceed the guard of {limit}; tighten cutoffs "
            f"or restrict per-link spin lists"
        )
    for combo in itertools.product(*choices):
        yield SpinSector(
            graph=graph,
            assignment=tuple((lid, s.twice) for lid, s in zip(order, combo)),
        )


def sector_dims(
    sector: SpinSector, graph: OpenGraph, family: SectorFamily
) -> SectorDims:
    """Populate every dimension field for `sector` within `family`.

    D_I(E) sums prod_x D(j^x) over all bulk assignments of the family that
    share this sector's boundary spins; for a graph without internal links it
    reduces to the sector's own intertwiner-dimension product.
    """
    ldims = {lid: Spin(t).dim for lid, t in sector.assignment}
    idims = {x: intertwiner_dim(sector.vertex_spins(x)) for x in graph.vertices}
    bulk_prod = 1
    for x in graph.vertices:
        bulk_prod *= idims[x]
    d_out = 1
    for lid in graph.boundary_ids():
        d_out *= ldims[lid]
    boundary = {lid: Spin(t) for lid, t in sector.boundary_part()}
    d_in = 0
    for sec in enumerate_sectors(family, graph, boundary_filter=boundary):
        prod = 1
        for x in graph.vertices:
            prod *= intertwiner_dim(sec.vertex_spins(x))
        d_in += prod
    dim_sector = 1
    for x in graph.vertices:
        dim_sector *= idims[x]
        for lid in graph.links_at(x):
            dim_sector *= ldims[lid]
    return SectorDims(
        link_dims=ldims,
        intertwiner_dims=idims,
        bulk_intertwiner_product=bulk_prod,
        d_input=d_in,
        d_output=d_out,
        dim_sector=dim_sector,
    )


def truncated_link_dim(family: SectorFamily) -> int:
    """Truncated single-link dimension: the inclusive sum of 2j + 1 from the
    lower to the upper cutoff over the half-integer grid.

    Note: an alternative closed form (d_J(d_J + 1) - d_jmin(d_jmin + 1)) / 2
    floating around for this quantity excludes the lower endpoint and is
    smaller by d_jmin; this function implements the inclusive sum.
    """
    return sum(t + 1 for t in range(family.lower.twice, family.upper.twice + 1))
