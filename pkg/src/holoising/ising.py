"""Dual constrained random Ising models for replica-averaged purities.

The second moment of a random superposed network state reduces to a pair of
partition sums over one Ising spin per vertex,

    Z_b = sum over sector pairs (j, k) of  K_j K_k Z^{(j,k)}_b,
    Z^{(j,k)}_b = sum over configurations of  Delta_b(j,k,sigma) e^{-H_b},

with replica index b = 1 for the swapped (purity numerator) copy and b = 0
for the normalization.  Two model kinds share this shape:

* bulk-to-boundary: Delta is a product of Kronecker deltas (sector data must
  agree on antialigned links and on the field-selected vertices) and H
  carries link couplings lambda_e = log d and vertex couplings
  Lambda_x = log D.
* boundary-to-boundary: the bulk intertwiner data enters through partial
  traces of a fixed bulk state; Delta additionally carries the
  Hilbert-Schmidt cosine of the two traced blocks, and H carries their
  Renyi-2 entropies instead of Lambda terms.

Boundary legs are treated as links to one-valent virtual vertices whose
Ising spins are pinned, never summed: +1 everywhere, except that the swapped
replica of the boundary-to-boundary kind pins the input-region legs to -1.

Any factor that can vanish lives in Delta, never in H; Hamiltonians are only
defined on Delta-allowed configurations.  All sums accumulate in log domain.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .bulk import IntertwinerState
from .graph import BoundaryPartition, OpenGraph
from .spins import (
    SectorFamily,
    Spin,
    SpinSector,
    enumerate_sectors,
    intertwiner_dim,
    sector_dims,
)

#: Absolute tolerance for counting ground-state ties.
TIE_TOL = 1e-12


class EngineError(RuntimeError):
    """Raised for structurally invalid engine inputs."""


class ContractViolation(RuntimeError):
    """Raised when a quantity is requested outside its defined domain."""


# -- configurations ------------------------------------------------------


@dataclass(frozen=True)
class IsingConfig:
    """One +/-1 assignment per (non-virtual) vertex, in graph order."""

    values: Tuple[Tuple[str, int], ...]

    @staticmethod
    def make(graph: OpenGraph, assignment: Mapping[str, int]) -> "IsingConfig":
        missing = [x for x in graph.vertices if x not in assignment]
        if missing:
            raise EngineError(f"configuration misses vertices {missing}")
        extra = [x for x in assignment if x not in set(graph.vertices)]
        if extra:
            raise EngineError(f"configuration names unknown vertices {extra}")
        values = []
        for x in graph.vertices:
            s = int(assignment[x])
            if s not in (1, -1):
                raise EngineError(f"vertex {x!r}: Ising spin must be +1 or -1")
            values.append((x, s))
        return IsingConfig(tuple(values))

    @property
    def sigma(self) -> Dict[str, int]:
        return dict(self.values)

    def value(self, vertex: str) -> int:
        for x, s in self.values:
            if x == vertex:
                return s
        raise KeyError(vertex)

    def up_set(self) -> Tuple[str, ...]:
        return tuple(x for x, s in self.values if s > 0)

    def down_set(self) -> Tuple[str, ...]:
        return tuple(x for x, s in self.values if s < 0)

    def label(self) -> str:
        return "".join("+" if s > 0 else "-" for _, s in self.values)


# -- model kinds ---------------------------------------------------------


@dataclass(frozen=True)
class ModelKind:
    """Which replica average the model encodes.

    The boundary-to-boundary kind carries the input/output split of the
    boundary legs; the bulk-to-boundary kind has no partition (the whole
    boundary is output).
    """

    mode: str
    partition: Optional[BoundaryPartition] = None

    BULK_TO_BOUNDARY = "bulk_to_boundary"
    BOUNDARY_TO_BOUNDARY = "boundary_to_boundary"

    @staticmethod
    def bulk_to_boundary() -> "ModelKind":
        return ModelKind(mode=ModelKind.BULK_TO_BOUNDARY)

    @staticmethod
    def boundary_to_boundary(partition: BoundaryPartition) -> "ModelKind":
        if partition is None:
            raise EngineError("boundary-to-boundary kind needs a boundary partition")
        return ModelKind(
            mode=ModelKind.BOUNDARY_TO_BOUNDARY, partition=partition
        )

    @property
    def is_boundary_to_boundary(self) -> bool:
        return self.mode == ModelKind.BOUNDARY_TO_BOUNDARY


# -- couplings -----------------------------------------------------------


@dataclass(frozen=True)
class CouplingSet:
    """Couplings of one sector: lambda_e = log d, Lambda_x = log D.

    `beta` is log D_O of the sector; dividing every coupling by it gives the
    rescaled (tilde) couplings used in high-spin arguments.  `b` is the
    replica field sign: +1 for the normalization copy, -1 for the swapped
    copy.  For the boundary-to-boundary kind the Lambda values are reported
    for completeness but do not enter the Hamiltonian.
    """

    lam: Tuple[Tuple[str, float], ...]
    big_lam: Tuple[Tuple[str, float], ...]
    beta: float
    replica: int
    b: int
    mode: str

    @property
    def lam_map(self) -> Dict[str, float]:
        return dict(self.lam)

    @property
    def big_lam_map(self) -> Dict[str, float]:
        return dict(self.big_lam)

    def _rescale(self, value: float) -> float:
        if self.beta > 0.0:
            return value / self.beta
        return 0.0 if value == 0.0 else math.inf

    @property
    def lam_tilde(self) -> Dict[str, float]:
        return {lid: self._rescale(v) for lid, v in self.lam}

    @property
    def big_lam_tilde(self) -> Dict[str, float]:
        return {x: self._rescale(v) for x, v in self.big_lam}


def couplings(sector: SpinSector, kind: ModelKind, replica: int) -> CouplingSet:
    """Link and vertex couplings of `sector` for the given replica."""
    if replica not in (0, 1):
        raise EngineError(f"replica must be 0 or 1, got {replica!r}")
    graph = sector.graph
    lam = tuple(
        (lid, math.log(sector.spin(lid).dim)) for lid in graph.link_ids()
    )
    big = []
    for x in graph.vertices:
        dim = intertwiner_dim(sector.vertex_spins(x))
        if dim == 0:
            raise EngineError(
                f"vertex {x!r} has an empty intertwiner space in this sector"
            )
        big.append((x, math.log(dim)))
    beta = sum(
        math.log(sector.spin(lid).dim) for lid in graph.boundary_ids()
    )
    return CouplingSet(
        lam=lam,
        big_lam=tuple(big),
        beta=beta,
        replica=replica,
        b=-1 if replica == 1 else +1,
        mode=kind.mode,
    )


# -- K factors -----------------------------------------------------------


@dataclass(frozen=True)
class KFactor:
    """Sector weight K and its split K = L * D_O (log-domain internally)."""

    log_value: float
    d_output: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if math.isfinite(self.log_value) else 0.0

    @property
    def log_l(self) -> float:
        return self.log_value - math.log(self.d_output)

    @property
    def l_value(self) -> float:
        return math.exp(self.log_l) if math.isfinite(self.log_l) else 0.0


# -- results -------------------------------------------------------------


@dataclass(frozen=True)
class GroundState:
    """Minimizer data of one (sector pair, replica) energy landscape."""

    config: Optional[IsingConfig]
    energy: float
    degeneracy: int
    gap: float

    @property
    def feasible(self) -> bool:
        return self.config is not None


@dataclass(frozen=True)
class BoundaryFixedSums:
    """Pair sums restricted to one boundary assignment, and normalized."""

    z_bar: Tuple[float, float]  # (replica 0, replica 1)
    y: Tuple[float, float]
    d_total: int
    sector_count: int


@dataclass(frozen=True)
class PairRow:
    pair_id: str
    replica: int
    z: float
    e_min: float
    degeneracy: int
    gap: float


@dataclass(frozen=True)
class BoundarySumRow:
    boundary_id: str
    z_bar: Tuple[float, float]
    y: Tuple[float, float]
    d_total: int


@dataclass(frozen=True, eq=False)
class PartitionSumTable:
    """All per-pair kernels plus K factors, boundary sums, and totals."""

    rows: Tuple[PairRow, ...]
    k_factors: Tuple[Tuple[str, float], ...]
    boundary_rows: Tuple[BoundarySumRow, ...]
    totals: Tuple[float, float]  # (Z_0, Z_1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["sector_pair_id", "replica", "Z", "E_min", "degeneracy", "gap"]
            )
            for row in self.rows:
                writer.writerow(
                    [
                        row.pair_id,
                        row.replica,
                        f"{row.z:.17g}",
                        f"{row.e_min:.17g}",
                        row.degeneracy,
                        f"{row.gap:.17g}",
                    ]
                )

    def to_json_dict(self) -> dict:
        def num(v: float):
            return v if math.isfinite(v) else None

        return {
            "rows": [
                {
                    "sector_pair_id": r.pair_id,
                    "replica": r.replica,
                    "Z": num(r.z),
                    "E_min": num(r.e_min),
                    "degeneracy": r.degeneracy,
                    "gap": num(r.gap),
                }
                for r in self.rows
            ],
            "k_factors": {label: k for label, k in self.k_factors},
            "boundary_sums": [
                {
                    "boundary_id": b.boundary_id,
                    "Z_bar_0": num(b.z_bar[0]),
                    "Z_bar_1": num(b.z_bar[1]),
                    "Y_0": num(b.y[0]),
                    "Y_1": num(b.y[1]),
                    "D_total": b.d_total,
                }
                for b in self.boundary_rows
            ],
            "totals": {"Z_0": self.totals[0], "Z_1": self.totals[1]},
        }

    def to_json(self, path) -> None:
        with open(path, "w") as handle:
            json.dump(self.to_json_dict(), handle, indent=2)


def _signed_sum(pos: List[float], neg: List[float]) -> float:
    """Sum of +/- exp(log) terms, each bucket reduced by log-sum-exp."""
    total = 0.0
    if pos:
        total += math.exp(logsumexp(np.array(pos)))
    if neg:
        total -= math.exp(logsumexp(np.array(neg)))
    return total


# -- the model -----------------------------------------------------------


class IsingModel:
    """Evaluator for one graph + sector family + model kind.

    The boundary-to-boundary kind additionally needs the bulk intertwiner
    state whose partial traces define its Delta and Hamiltonian data.
    """

    def __init__(
        self,
        graph: OpenGraph,
        family: SectorFamily,
        kind: ModelKind,
        state: Optional[IntertwinerState] = None,
        exhaustive_limit: int = 20,
    ):
        self.graph = graph
        self.family = family
        self.kind = kind
        self.state = state
        self.exhaustive_limit = int(exhaustive_limit)
        if kind.is_boundary_to_boundary:
            if kind.partition is None:
                raise EngineError("boundary-to-boundary kind lost its partition")
            kind.partition.validate(graph)
            if state is None:
                raise EngineError(
                    "boundary-to-boundary model needs a bulk intertwiner state"
                )

    # -- pieces ----------------------------------------------------------

    def couplings(self, sector: SpinSector, replica: int) -> CouplingSet:
        return couplings(sector, self.kind, replica)

    def boundary_pin(self, link_id: str, replica: int) -> int:
        """Pinned Ising value of the virtual vertex behind a boundary leg."""
        if (
            self.kind.is_boundary_to_boundary
            and replica == 1
            and link_id in self.kind.partition.input_region
        ):
            return -1
        return +1

    def _cut_links(
        self, config: IsingConfig, replica: int
    ) -> Tuple[List[str], bool]:
        """(antialigned link ids, all-deltas-satisfied placeholder)."""
        sig = config.sigma
        cut = []
        for lid in self.graph.link_ids():
            src, tgt = self.graph.endpoints(lid)
            s = sig[src]
            t = sig[tgt] if tgt in sig else self.boundary_pin(lid, replica)
            if s * t < 0:
                cut.append(lid)
        return cut, True

    def k_factor(self, sector: SpinSector) -> KFactor:
        """Sector weight K for this model kind (zero-weight sectors give
        log K = -inf, which drops them from every sum)."""
        graph = self.graph
        log_k = 0.0
        d_output = 1
        for lid in graph.boundary_ids():
            log_k += math.log(sector.spin(lid).dim)
            d_output *= sector.spin(lid).dim
        for lid in graph.internal_ids():
            g = self.family.g(lid, sector.spin(lid))
            mag = abs(g) ** 2
            log_k += math.log(mag) if mag > 0.0 else -math.inf
        if self.kind.is_boundary_to_boundary:
            w = self.state.weight(sector)
            log_k += math.log(w) if w > 0.0 else -math.inf
        else:
            for x in graph.vertices:
                dim = intertwiner_dim(sector.vertex_spins(x))
                log_k += math.log(dim) if dim > 0 else -math.inf
        return KFactor(log_value=log_k, d_output=d_output)

    # -- Delta and H -----------------------------------------------------

    def _evaluate(
        self, j: SpinSector, k: SpinSector, config: IsingConfig, replica: int
    ) -> Tuple[float, Optional[float]]:
        """(Delta value, Hamiltonian) of one configuration.

        Delta == 0 means the configuration is forbidden; the Hamiltonian is
        then None.  A +inf Hamiltonian (empty intertwiner space on an active
        vertex) contributes zero weight but is reported as allowed.
        """
        if replica not in (0, 1):
            raise EngineError(f"replica must be 0 or 1, got {replica!r}")
        if j.graph is not self.graph and j.graph != self.graph:
            raise EngineError("sector j belongs to a different graph")
        if k.graph is not self.graph and k.graph != self.graph:
            raise EngineError("sector k belongs to a different graph")
        cut, _ = self._cut_links(config, replica)
        for lid in cut:
            if j.spin(lid) != k.spin(lid):
                return 0.0, None
        lam_cut = sum(math.log(j.spin(lid).dim) for lid in cut)
        if not self.kind.is_boundary_to_boundary:
            b = -1 if replica == 1 else +1
            sig = config.sigma
            energy = lam_cut
            for x in self.graph.vertices:
                if (1 - b * sig[x]) // 2 == 1:
                    if j.vertex_spins(x) != k.vertex_spins(x):
                        return 0.0, None
                    dim = intertwiner_dim(j.vertex_spins(x))
                    energy += math.log(dim) if dim > 0 else math.inf
            return 1.0, energy
        return self._evaluate_boundary(j, k, config, lam_cut)

    def _evaluate_boundary(
        self, j: SpinSector, k: SpinSector, config: IsingConfig, lam_cut: float
    ) -> Tuple[float, Optional[float]]:
        state = self.state
        sig = config.sigma
        up = {x for x, s in config.values if s > 0}
        down = [x for x in self.graph.vertices if x not in up]
        up_links = set()
        for lid in self.graph.link_ids():
            if any(v in up for v in self.graph.endpoints(lid)):
                up_links.add(lid)
        j_spins, k_spins = j.spins(), k.spins()
        mixed_1 = SpinSector.make(
            self.graph,
            {
                lid: (j_spins[lid] if lid in up_links else k_spins[lid])
                for lid in self.graph.link_ids()
            },
        )
        mixed_2 = SpinSector.make(
            self.graph,
            {
                lid: (k_spins[lid] if lid in up_links else j_spins[lid])
                for lid in self.graph.link_ids()
            },
        )
        b1 = state.traced_block(j, mixed_1, down)
        b2 = state.traced_block(k, mixed_2, down)
        n1_sq = float(np.sum(np.abs(b1) ** 2))
        n2_sq = float(np.sum(np.abs(b2) ** 2))
        w_j, w_k = state.weight(j), state.weight(k)
        if n1_sq == 0.0 or n2_sq == 0.0 or w_j <= 0.0 or w_k <= 0.0:
            return 0.0, None
        overlap = float(np.trace(b1 @ b2).real)
        cos = overlap / math.sqrt(n1_sq * n2_sq)
        if cos == 0.0:
            return 0.0, None
        energy = (
            lam_cut
            - 0.5 * math.log(n1_sq / w_j**2)
            - 0.5 * math.log(n2_sq / w_k**2)
        )
        return cos, energy

    def delta_factor(
        self, j: SpinSector, k: SpinSector, config: IsingConfig, replica: int
    ) -> float:
        """Constraint factor of one configuration.

        Kronecker deltas give 0 or 1; the boundary-to-boundary kind folds in
        the Hilbert-Schmidt cosine of the traced blocks, which carries its
        sign if an overlap happens to be negative.
        """
        delta, _ = self._evaluate(j, k, config, replica)
        return delta

    def hamiltonian(
        self, j: SpinSector, k: SpinSector, config: IsingConfig, replica: int
    ) -> float:
        delta, energy = self._evaluate(j, k, config, replica)
        if delta == 0.0 or energy is None:
            raise ContractViolation(
                f"Hamiltonian undefined on the forbidden configuration "
                f"{config.label()} (replica {replica})"
            )
        return energy

    # -- configuration sums ----------------------------------------------

    def _configurations(self) -> Iterable[IsingConfig]:
        vertices = self.graph.vertices
        if len(vertices) > self.exhaustive_limit:
            raise EngineError(
                f"{len(vertices)} vertices exceed the exhaustive limit of "
                f"{self.exhaustive_limit}; use ground_state instead"
            )
        for bits in itertools.product((1, -1), repeat=len(vertices)):
            yield IsingConfig(tuple(zip(vertices, bits)))

    def partition_sum_fixed(
        self, j: SpinSector, k: SpinSector, replica: int
    ) -> float:
        """Exact kernel Z^{(j,k)} = sum over configurations of Delta e^-H."""
        pos: List[float] = []
        neg: List[float] = []
        for config in self._configurations():
            delta, energy = self._evaluate(j, k, config, replica)
            if delta == 0.0 or energy is None or math.isinf(energy):
                continue
            log_mag = math.log(abs(delta)) - energy
            (pos if delta > 0 else neg).append(log_mag)
        return _signed_sum(pos, neg)

    def ground_state(
        self, j: SpinSector, k: SpinSector, replica: int
    ) -> GroundState:
        """Minimizing allowed configuration, tie count, and spectral gap.

        Ties within 1e-12 share the minimum; the representative is the tied
        configuration whose spin-down vertex set is lexicographically
        smallest.  An empty feasible set gives (None, inf, 0, inf).
        """
        found: List[Tuple[float, IsingConfig]] = []
        for config in self._configurations():
            delta, energy = self._evaluate(j, k, config, replica)
            if delta == 0.0 or energy is None or math.isinf(energy):
                continue
            found.append((energy, config))
        if not found:
            return GroundState(config=None, energy=math.inf, degeneracy=0, gap=math.inf)
        e_min = min(e for e, _ in found)
        ties = [cfg for e, cfg in found if e - e_min <= TIE_TOL]
        rep = min(ties, key=lambda cfg: tuple(sorted(cfg.down_set())))
        above = [e for e, _ in found if e - e_min > TIE_TOL]
        gap = (min(above) - e_min) if above else math.inf
        return GroundState(
            config=rep, energy=e_min, degeneracy=len(ties), gap=gap
        )

    # -- assembled sums --------------------------------------------------

    def default_sectors(self) -> List[SpinSector]:
        if self.kind.is_boundary_to_boundary:
            return list(self.state.sectors)
        return list(enumerate_sectors(self.family, self.graph))

    def _weighted_sectors(
        self, sectors: Optional[Sequence[SpinSector]]
    ) -> List[Tuple[SpinSector, KFactor]]:
        pool = list(sectors) if sectors is not None else self.default_sectors()
        out = []
        for sec in pool:
            kf = self.k_factor(sec)
            if math.isfinite(kf.log_value):
                out.append((sec, kf))
        return out

    def boundary_fixed_sums(
        self, boundary: Mapping[str, object]
    ) -> BoundaryFixedSums:
        """K-weighted pair sums over bulk spins at a fixed boundary."""
        fixed = {lid: Spin.parse(sp) for lid, sp in boundary.items()}
        if self.kind.is_boundary_to_boundary:
            pool = [
                s
                for s in self.state.sectors
                if all(s.spin(lid) == sp for lid, sp in fixed.items())
            ]
            if set(fixed) != set(self.graph.boundary_ids()):
                raise EngineError("boundary assignment must fix every boundary leg")
        else:
            pool = list(
                enumerate_sectors(self.family, self.graph, boundary_filter=fixed)
            )
        weighted = self._weighted_sectors(pool)
        if not weighted:
            raise EngineError("no admissible sector matches this boundary")
        z_bar = []
        for replica in (0, 1):
            pos: List[float] = []
            neg: List[float] = []
            for sec_j, kf_j in weighted:
                for sec_k, kf_k in weighted:
                    z = self.partition_sum_fixed(sec_j, sec_k, replica)
                    if z == 0.0:
                        continue
                    log_mag = kf_j.log_value + kf_k.log_value + math.log(abs(z))
                    (pos if z > 0 else neg).append(log_mag)
            z_bar.append(_signed_sum(pos, neg))
        dims = sector_dims(weighted[0][0], self.graph, self.family)
        d_total = dims.d_total
        y = tuple(z / d_total**2 for z in z_bar)
        return BoundaryFixedSums(
            z_bar=tuple(z_bar),
            y=y,
            d_total=d_total,
            sector_count=len(weighted),
        )

    def partition_table(
        self,
        sectors: Optional[Sequence[SpinSector]] = None,
        threads: int = 1,
    ) -> PartitionSumTable:
        """Kernels, ground-state data, K factors, boundary sums, totals.

        Totals include every sector pair (also pairs with different boundary
        spins); the boundary rows are the boundary-diagonal restrictions.
        The thread count never changes results: per-pair outputs are
        reduced in a fixed pair order.
        """
        weighted = self._weighted_sectors(sectors)
        pairs = [
            (sec_j, kf_j, sec_k, kf_k)
            for sec_j, kf_j in weighted
            for sec_k, kf_k in weighted
        ]

        def job(pair):
            sec_j, kf_j, sec_k, kf_k = pair
            out = []
            for replica in (0, 1):
                z = self.partition_sum_fixed(sec_j, sec_k, replica)
                gs = self.ground_state(sec_j, sec_k, replica)
                out.append((replica, z, gs))
            return out

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(job, pairs))
        else:
            results = [job(p) for p in pairs]

        rows: List[PairRow] = []
        totals_pos: Dict[int, List[float]] = {0: [], 1: []}
        totals_neg: Dict[int, List[float]] = {0: [], 1: []}
        by_boundary: Dict[Tuple, Dict[int, Tuple[List[float], List[float]]]] = {}
        boundary_reps: Dict[Tuple, SpinSector] = {}
        for (sec_j, kf_j, sec_k, kf_k), result in zip(pairs, results):
            pair_id = f"{sec_j.label()}|{sec_k.label()}"
            for replica, z, gs in result:
                rows.append(
                    PairRow(
                        pair_id=pair_id,
                        replica=replica,
                        z=z,
                        e_min=gs.energy,
                        degeneracy=gs.degeneracy,
                        gap=gs.gap,
                    )
                )
                if z != 0.0:
                    log_mag = (
                        kf_j.log_value + kf_k.log_value + math.log(abs(z))
                    )
                    bucket = totals_pos if z > 0 else totals_neg
                    bucket[replica].append(log_mag)
                    if sec_j.boundary_part() == sec_k.boundary_part():
                        key = sec_j.boundary_part()
                        boundary_reps.setdefault(key, sec_j)
                        slot = by_boundary.setdefault(
                            key, {0: ([], []), 1: ([], [])}
                        )
                        (slot[replica][0] if z > 0 else slot[replica][1]).append(
                            log_mag
                        )
        totals = (
            _signed_sum(totals_pos[0], totals_neg[0]),
            _signed_sum(totals_pos[1], totals_neg[1]),
        )
        boundary_rows = []
        for key in sorted(by_boundary):
            rep = boundary_reps[key]
            dims = sector_dims(rep, self.graph, self.family)
            z0 = _signed_sum(*by_boundary[key][0])
            z1 = _signed_sum(*by_boundary[key][1])
            boundary_rows.append(
                BoundarySumRow(
                    boundary_id=",".join(f"{lid}={Spin(t)}" for lid, t in key),
                    z_bar=(z0, z1),
                    y=(z0 / dims.d_total**2, z1 / dims.d_total**2),
                    d_total=dims.d_total,
                )
            )
        k_factors = tuple(
            (sec.label(), kf.value) for sec, kf in weighted
        )
        return PartitionSumTable(
            rows=tuple(rows),
            k_factors=k_factors,
            boundary_rows=tuple(boundary_rows),
            totals=totals,
        )
