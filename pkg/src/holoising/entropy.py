"""Average purities and entropies assembled from partition tables.

The engine's tables carry per-pair kernels Z^{(j,k)}_b, sector weights K_j,
and replica totals.  This module turns them into reports:

* the sector and pair distributions p_j = K_j / sum K and
  P(j,k) = K_j K_k Z_0^{(j,k)} / Z_0, with the factorized form p_j p_k,
* the average purity Z_1/Z_0 decomposed as an expectation, under P, of the
  per-pair ratios Z_1^{(j,k)} / Z_0^{(j,k)} = e^{-X_{jk}},
* cumulant expansions of S_2 = -log purity in the exponent X,
* an area-form entropy estimate from minimal-surface data,
* closed forms for the coarse (one global Haar unitary) and fine
  (per-sector Haar with manual weights) averaging grades, and
* rescaled configuration energies used in high-spin isometry arguments.

Pairs whose swapped-replica kernel vanishes (sectors with different boundary
spins admit no configuration satisfying the deltas) have X = infinity.
Cumulants are then taken over the distribution conditioned on the feasible
pairs, and the missing mass is reported separately; the identity

    purity = feasible_mass * <e^{-X}>_{P conditioned}

holds exactly, so nothing is lost by the split.

All entropies are in nats.  Every function here is a pure aggregation over
immutable inputs and is safe to call from multiple threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .graph import OpenGraph
from .ising import ModelKind, PartitionSumTable, couplings
from .spins import (
    SectorFamily,
    Spin,
    SpinSector,
    enumerate_sectors,
    intertwiner_dim,
    sector_dims,
)

#: Report modes: exact per-pair kernels, ground-state kernels under the
#: exact pair measure, or ground-state kernels under the factorized measure.
MODES = ("exact", "ground_state", "high_spin")

#: Weights more negative than this are treated as genuinely signed.
_SIGN_TOL = 1e-12


class EntropyError(RuntimeError):
    """Raised for tables or distributions the assembly cannot digest."""


# -- distributions -------------------------------------------------------


@dataclass(frozen=True)
class SectorDistribution:
    """Normalized sector, pair, and boundary-region weights of a table.

    `p` is the single-sector distribution K_j / sum K; `pair_probs` the
    exact pair distribution K_j K_k Z_0^{(j,k)} / Z_0 and
    `pair_probs_factorized` its high-spin product form p_j p_k.  `c`, when
    dimension data is available, weights each boundary assignment E by
    D_E / sum_F D_F; it is keyed by boundary id and is None otherwise.
    """

    p: Mapping[str, float]
    pair_probs: Mapping[str, float]
    pair_probs_factorized: Mapping[str, float]
    c: Optional[Mapping[str, float]]


@dataclass(frozen=True)
class _PairCell:
    label_j: str
    label_k: str
    z: Tuple[float, float]
    e_min: Tuple[float, float]


def _pair_cells(table: PartitionSumTable) -> Dict[str, _PairCell]:
    """Group the table rows into complete per-pair cells."""
    grouped: Dict[str, Dict[int, object]] = {}
    for row in table.rows:
        grouped.setdefault(row.pair_id, {})[row.replica] = row
    known = {label for label, _ in table.k_factors}
    cells: Dict[str, _PairCell] = {}
    for pair_id, rows in grouped.items():
        if set(rows) != {0, 1}:
            raise EntropyError(f"pair {pair_id!r} misses a replica row")
        parts = pair_id.split("|")
        if len(parts) != 2 or parts[0] not in known or parts[1] not in known:
            raise EntropyError(f"pair id {pair_id!r} does not name two sectors")
        cells[pair_id] = _PairCell(
            label_j=parts[0],
            label_k=parts[1],
            z=(rows[0].z, rows[1].z),
            e_min=(rows[0].e_min, rows[1].e_min),
        )
    return cells


def sector_distribution(
    table: PartitionSumTable,
    graph: Optional[OpenGraph] = None,
    family: Optional[SectorFamily] = None,
) -> SectorDistribution:
    """Build the normalized distributions carried by `table`.

    The boundary-region weights c_E need dimension data, so they are filled
    only when both `graph` and `family` are given.
    """
    kmap = dict(table.k_factors)
    k_total = math.fsum(kmap.values())
    if k_total <= 0.0:
        raise EntropyError("table carries no sector weight")
    p = {label: k / k_total for label, k in kmap.items()}

    z0_total = table.totals[0]
    if z0_total == 0.0:
        raise EntropyError("Z_0 = 0: the pair distribution is undefined")
    cells = _pair_cells(table)
    pair_probs = {
        pid: kmap[c.label_j] * kmap[c.label_k] * c.z[0] / z0_total
        for pid, c in cells.items()
    }
    factorized = {
        pid: p[c.label_j] * p[c.label_k] for pid, c in cells.items()
    }

    c_weights: Optional[Dict[str, float]] = None
    if graph is not None and family is not None:
        totals: Dict[str, int] = {}
        for sec in enumerate_sectors(family, graph):
            boundary_id = ",".join(
                f"{lid}={Spin(t)}" for lid, t in sec.boundary_part()
            )
            if boundary_id in totals:
                continue
            dims = sector_dims(sec, graph, family)
            if dims.d_input == 0:
                continue
            totals[boundary_id] = dims.d_total
        grand = sum(totals.values())
        if grand == 0:
            raise EntropyError("family admits no sector with intertwiners")
        c_weights = {bid: d / grand for bid, d in totals.items()}

    return SectorDistribution(
        p=p,
        pair_probs=pair_probs,
        pair_probs_factorized=factorized,
        c=c_weights,
    )


# -- purity reports ------------------------------------------------------


@dataclass(frozen=True)
class PurityReport:
    """Average purity with its distributional decomposition.

    `x` maps each pair to the exponent X_{jk} = -log of the per-pair ratio
    (infinite when the swapped kernel vanishes).  `pair_probs` is the pair
    measure used by this report's mode.  Cumulants and their alternating
    partial sums refer to the distribution conditioned on finite X; the
    weight of that condition is `feasible_mass`.  `rt_area_estimate` is
    4 * <X> in the ground-state modes, where X prices the domain-wall cut,
    and None in exact mode.
    """

    z0: float
    z1: float
    purity: float
    s2: float
    x: Mapping[str, float]
    pair_probs: Mapping[str, float]
    cumulants: Tuple[float, ...]
    cumulant_partial_sums: Tuple[float, ...]
    feasible_mass: float
    rt_area_estimate: Optional[float]
    provenance: str
    distribution: SectorDistribution

    def to_json_dict(self) -> dict:
        def num(v: Optional[float]):
            if v is None or not math.isfinite(v):
                return None
            return v

        dist = {
            "p": dict(self.distribution.p),
            "pair_probs": dict(self.distribution.pair_probs),
            "pair_probs_factorized": dict(
                self.distribution.pair_probs_factorized
            ),
        }
        if self.distribution.c is not None:
            dist["c"] = dict(self.distribution.c)
        return {
            "Z_0": num(self.z0),
            "Z_1": num(self.z1),
            "purity": num(self.purity),
            "S_2": num(self.s2),
            "X": {pid: num(v) for pid, v in self.x.items()},
            "pair_probs": dict(self.pair_probs),
            "cumulants": [num(v) for v in self.cumulants],
            "cumulant_partial_sums": [
                num(v) for v in self.cumulant_partial_sums
            ],
            "feasible_mass": num(self.feasible_mass),
            "rt_area_estimate": num(self.rt_area_estimate),
            "provenance": self.provenance,
            "distribution": dist,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as handle:
            json.dump(self.to_json_dict(), handle, indent=2)


def average_purity(
    table: PartitionSumTable,
    mode: str = "exact",
    cumulant_order: int = 4,
    graph: Optional[OpenGraph] = None,
    family: Optional[SectorFamily] = None,
) -> PurityReport:
    """Assemble the average purity Z_1/Z_0 from a partition table.

    Modes select the per-pair kernels and the pair measure:

    * "exact": kernels are the full replica sums; the measure is
      K_j K_k Z_0^{(j,k)} / Z_0.  The assembled expectation then equals the
      raw ratio of totals identically.
    * "ground_state": the swapped kernel is replaced by its leading
      Boltzmann weight e^{-E_min} and the normalization kernel by 1 (the
      all-up configuration costs nothing), but the measure stays exact.
    * "high_spin": ground-state kernels under the factorized measure
      p_j p_k, i.e. Z_0 approximated by (sum K)^2.

    Cumulants are computed up to `cumulant_order` on the distribution
    conditioned on finite X.  Tables with signed pair weights (possible for
    boundary-to-boundary models with indefinite overlaps) are rejected:
    the expectation view needs a genuine probability measure.
    """
    if mode not in MODES:
        raise EntropyError(f"unknown mode {mode!r}; expected one of {MODES}")
    if cumulant_order < 1:
        raise EntropyError("cumulant_order must be at least 1")
    cells = _pair_cells(table)
    kmap = dict(table.k_factors)
    k_total = math.fsum(kmap.values())
    if k_total <= 0.0:
        raise EntropyError("table carries no sector weight")

    ratios: Dict[str, float] = {}
    base: Dict[str, float] = {}  # unnormalized pair weights
    for pid, cell in cells.items():
        kk = kmap[cell.label_j] * kmap[cell.label_k]
        if mode == "exact":
            z0, z1 = cell.z
            if z0 == 0.0:
                raise EntropyError(f"pair {pid!r} has Z_0^(j,k) = 0")
            ratios[pid] = z1 / z0
            base[pid] = kk * z0
        else:
            e1 = cell.e_min[1]
            ratios[pid] = math.exp(-e1) if math.isfinite(e1) else 0.0
            if mode == "ground_state":
                base[pid] = kk * cell.z[0]
            else:
                base[pid] = kk
    z0_rep = math.fsum(base.values())
    if z0_rep == 0.0:
        raise EntropyError("Z_0 = 0: purity undefined")
    z1_rep = math.fsum(base[pid] * ratios[pid] for pid in cells)

    probs = {pid: base[pid] / z0_rep for pid in cells}
    low = min(probs.values())
    if low < -_SIGN_TOL:
        raise EntropyError(
            "pair weights are signed; no probability-average decomposition"
        )
    probs = {pid: max(v, 0.0) for pid, v in probs.items()}

    x_vals: Dict[str, float] = {}
    for pid, r in ratios.items():
        if r > 0.0:
            x_vals[pid] = -math.log(r)
        elif r == 0.0:
            x_vals[pid] = math.inf
        else:
            x_vals[pid] = math.nan

    purity = z1_rep / z0_rep
    if purity <= 0.0:
        raise EntropyError(f"nonpositive purity {purity!r}")
    s2 = -math.log(purity)

    feasible = [pid for pid in cells if math.isfinite(x_vals[pid])]
    mass = math.fsum(probs[pid] for pid in feasible)
    if mass <= 0.0:
        raise EntropyError("no pair carries both weight and a finite exponent")
    xs = [x_vals[pid] for pid in feasible]
    ps = [probs[pid] / mass for pid in feasible]
    series = _cumulant_series(xs, ps, cumulant_order)

    provenance = {
        "exact": "exact",
        "ground_state": "ground-state",
        "high_spin": "high-spin",
    }[mode]
    rt_estimate = None
    if mode != "exact":
        rt_estimate = 4.0 * series.cumulants[0]

    return PurityReport(
        z0=z0_rep,
        z1=z1_rep,
        purity=purity,
        s2=s2,
        x=x_vals,
        pair_probs=probs,
        cumulants=series.cumulants,
        cumulant_partial_sums=series.partial_sums,
        feasible_mass=mass,
        rt_area_estimate=rt_estimate,
        provenance=provenance,
        distribution=sector_distribution(table, graph, family),
    )


# -- cumulant expansion --------------------------------------------------


@dataclass(frozen=True)
class CumulantSeries:
    """Cumulants kappa_1..kappa_n of X and the alternating partial sums
    sum_{m<=n} (-1)^{m-1} kappa_m / m! approximating -log <e^{-X}>."""

    cumulants: Tuple[float, ...]
    partial_sums: Tuple[float, ...]


def _normalized_weights(
    x_values: Sequence[float], probabilities: Sequence[float]
) -> Tuple[List[float], List[float]]:
    if len(x_values) != len(probabilities):
        raise EntropyError("X values and probabilities differ in length")
    total = math.fsum(probabilities)
    if total <= 0.0:
        raise EntropyError("probabilities carry no mass")
    xs: List[float] = []
    ps: List[float] = []
    for x, p in zip(x_values, probabilities):
        if p < -_SIGN_TOL:
            raise EntropyError(f"negative probability {p!r}")
        if p <= 0.0:
            continue
        if not math.isfinite(x):
            raise EntropyError(
                "non-finite X with positive weight; condition the "
                "distribution on feasible pairs first"
            )
        xs.append(float(x))
        ps.append(p / total)
    if not xs:
        raise EntropyError("empty distribution")
    return xs, ps


def _cumulant_series(
    xs: Sequence[float], ps: Sequence[float], order: int
) -> CumulantSeries:
    mean = math.fsum(p * x for x, p in zip(xs, ps))
    centered = [x - mean for x in xs]
    moments = [0.0] * (order + 1)
    moments[0] = 1.0
    for n in range(2, order + 1):
        moments[n] = math.fsum(p * y**n for y, p in zip(centered, ps))
    kappas = [0.0] * (order + 1)
    kappas[1] = mean
    for n in range(2, order + 1):
        tail = math.fsum(
            math.comb(n - 1, m - 1) * kappas[m] * moments[n - m]
            for m in range(2, n)
        )
        kappas[n] = moments[n] - tail
    partial = []
    acc = 0.0
    for n in range(1, order + 1):
        acc += (-1) ** (n - 1) * kappas[n] / math.factorial(n)
        partial.append(acc)
    return CumulantSeries(
        cumulants=tuple(kappas[1:]), partial_sums=tuple(partial)
    )


def cumulant_expansion(
    x_values: Union[Mapping[str, float], Sequence[float]],
    probabilities: Union[Mapping[str, float], Sequence[float]],
    order: int,
) -> CumulantSeries:
    """Exact cumulants of the finite (X, P) distribution and the partial
    sums of the alternating series for S_2 = -log <e^{-X}>_P.

    Inputs may be two mappings over the same keys or two parallel
    sequences.  Probabilities are renormalized; entries of weight zero are
    dropped, so an unreachable X = inf point is harmless.  Where the series
    converges (spread of X below pi, roughly), the partial sums approach
    -log <e^{-X}>_P; outside that range they are still the exact truncated
    cumulant data, reported as-is.
    """
    if order < 1:
        raise EntropyError("order must be at least 1")
    if isinstance(x_values, Mapping) != isinstance(probabilities, Mapping):
        raise EntropyError("pass two mappings or two sequences, not a mix")
    if isinstance(x_values, Mapping):
        if set(x_values) != set(probabilities):
            raise EntropyError("X values and probabilities differ in keys")
        keys = sorted(x_values)
        seq_x = [x_values[k] for k in keys]
        seq_p = [probabilities[k] for k in keys]
    else:
        seq_x = list(x_values)
        seq_p = list(probabilities)
    xs, ps = _normalized_weights(seq_x, seq_p)
    return _cumulant_series(xs, ps, order)


# -- averaged area form --------------------------------------------------


@dataclass(frozen=True)
class RTAverage:
    """Area statistics of the minimal surfaces and two entropy readings.

    `s2_cumulant` is 1/4 <A> - 1/32 Var A, the value of the second-order
    cumulant expansion under X = A/4.  `s2_area_formula` flips the variance
    sign to +; both conventions are in circulation for the area form, and
    the report carries both so either can be compared against.  They agree
    whenever the minimal areas are sharp (variance zero).
    """

    per_pair_area: Mapping[str, float]
    area_mean: float
    area_variance: float
    s2_cumulant: float
    s2_area_formula: float
    surfaces: Mapping[str, Tuple[str, ...]]
    distinct_surfaces: Tuple[Tuple[str, ...], ...]


def _surface_items(surface) -> List[Tuple[str, Spin]]:
    if isinstance(surface, Mapping):
        pairs = surface.items()
    else:
        pairs = list(surface)
    return [(str(lid), Spin.parse(sp)) for lid, sp in pairs]


def rt_average(
    surfaces: Mapping[str, object],
    probabilities: Mapping[str, float],
) -> RTAverage:
    """Average the minimal-surface areas A = 4 sum_{e in S} log d over P.

    `surfaces` maps each pair id to its minimal surface, given as
    {link id: spin} (or an iterable of such pairs); the spin fixes the
    crossed link's dimension.  Every pair with positive probability must
    have a surface.
    """
    total = math.fsum(probabilities.values())
    if total <= 0.0:
        raise EntropyError("probabilities carry no mass")
    areas: Dict[str, float] = {}
    links: Dict[str, Tuple[str, ...]] = {}
    weights: Dict[str, float] = {}
    for pid, prob in probabilities.items():
        if prob < -_SIGN_TOL:
            raise EntropyError(f"negative probability for pair {pid!r}")
        if prob <= 0.0:
            continue
        if pid not in surfaces:
            raise EntropyError(f"no minimal surface given for pair {pid!r}")
        items = _surface_items(surfaces[pid])
        areas[pid] = 4.0 * math.fsum(math.log(sp.dim) for _, sp in items)
        links[pid] = tuple(sorted(lid for lid, _ in items))
        weights[pid] = prob / total
    if not areas:
        raise EntropyError("empty distribution")
    mean = math.fsum(weights[pid] * areas[pid] for pid in areas)
    var = math.fsum(
        weights[pid] * (areas[pid] - mean) ** 2 for pid in areas
    )
    return RTAverage(
        per_pair_area=areas,
        area_mean=mean,
        area_variance=var,
        s2_cumulant=mean / 4.0 - var / 32.0,
        s2_area_formula=mean / 4.0 + var / 32.0,
        surfaces=links,
        distinct_surfaces=tuple(sorted(set(links.values()))),
    )


def lqg_area_match(j) -> float:
    """Spin s whose Casimir area matches the entropy weight of a link of
    spin j: solves s(s+1) = log^2(2j+1) for s >= 0.

    Accepts a Spin (or anything Spin.parse takes) as well as a plain
    non-negative real j, which need not be half-integer.
    """
    if isinstance(j, (int, float)) and not isinstance(j, bool):
        j_val = float(j)
    else:
        j_val = Spin.parse(j).j
    if j_val < 0.0:
        raise EntropyError(f"negative spin {j_val!r}")
    log_d = math.log(2.0 * j_val + 1.0)
    return (-1.0 + math.sqrt(1.0 + 4.0 * log_d**2)) / 2.0


# -- coarse averaging closed form ----------------------------------------


@dataclass(frozen=True)
class CoarseAverage:
    """Closed-form purity of the single-global-unitary average.

    `s2_limit` is the large-delta minimum of the two competing phases;
    `page_crossover` is the smallest region size at which the whole-region
    phase takes over (None when delta = 1 and every size gives S_2 = 0).
    """

    purity: float
    s2: float
    s2_limit: float
    page_crossover: Optional[int]


def coarse_average_purity(
    region_size: int,
    boundary_size: int,
    s2_core: float,
    delta: float,
) -> CoarseAverage:
    """Purity of a boundary region of `region_size` out of `boundary_size`
    output legs, each of truncated dimension `delta`, against a core of
    Renyi-2 entropy `s2_core`:

        purity = (delta^(n-a) + e^{-s2_core} delta^a)
                 / (delta^n + e^{-s2_core})

    evaluated in log domain, with the limiting form
    min{s2_core + (n-a) log delta, a log delta}.
    """
    if not 0 <= region_size <= boundary_size:
        raise EntropyError(
            f"region size {region_size} outside 0..{boundary_size}"
        )
    if delta < 1.0:
        raise EntropyError(f"truncated link dimension {delta!r} below 1")
    if s2_core < 0.0:
        raise EntropyError(f"negative core entropy {s2_core!r}")
    log_delta = math.log(delta)
    a = region_size
    comp = boundary_size - region_size
    log_num = np.logaddexp(comp * log_delta, a * log_delta - s2_core)
    log_den = np.logaddexp(boundary_size * log_delta, -s2_core)
    s2 = float(log_den - log_num)
    limit = min(s2_core + comp * log_delta, a * log_delta)
    crossover: Optional[int] = None
    if log_delta > 0.0:
        crossover = math.ceil((s2_core / log_delta + boundary_size) / 2.0)
    return CoarseAverage(
        purity=math.exp(-s2),
        s2=s2,
        s2_limit=limit,
        page_crossover=crossover,
    )


# -- fine averaging closed form ------------------------------------------


@dataclass(frozen=True)
class FineAverage:
    """Closed-form purity of the per-sector average with manual weights.

    `p_tilde` are the link-amplitude-reweighted, renormalized weights; the
    purity is sum p_tilde^2 / dim I.  `solving_weights` is the profile
    p_tilde = dim I / D_I that attains the lower bound 1/D_I, with
    D_I = `d_input` the summed intertwiner dimension of the considered
    sectors.  `single_boundary` records whether those sectors share their
    boundary spins (the case in which the bound is the isometry target).
    """

    purity: float
    p_tilde: Mapping[str, float]
    solving_weights: Mapping[str, float]
    d_input: int
    single_boundary: bool


def fine_average_purity(
    weights: Optional[Mapping],
    family: SectorFamily,
    graph: OpenGraph,
) -> FineAverage:
    """Average purity when each sector carries its own Haar unitary and a
    manual weight p_j:  purity = sum_j p_tilde_j^2 / dim I_j with
    p_tilde proportional to p_j prod_e |g_{j_e}|^2.

    `weights` maps sectors (as SpinSector, canonical key, or label) to
    probabilities summing to one; None means uniform over the family's
    admissible sectors.  Sectors with empty intertwiner space are ignored.
    """
    sectors = [
        sec
        for sec in enumerate_sectors(family, graph)
        if all(
            intertwiner_dim(sec.vertex_spins(x)) > 0 for x in graph.vertices
        )
    ]
    if not sectors:
        raise EntropyError("family admits no sector with intertwiners")
    by_label = {sec.label(): sec for sec in sectors}
    by_key = {sec.key(): sec for sec in sectors}

    if weights is None:
        probs = {sec.label(): 1.0 / len(sectors) for sec in sectors}
    else:
        probs = {}
        for key, value in weights.items():
            if isinstance(key, SpinSector):
                sec = by_key.get(key.key())
            elif isinstance(key, str):
                sec = by_label.get(key)
            else:
                sec = by_key.get(key)
            if sec is None:
                raise EntropyError(f"weight names unknown sector {key!r}")
            if value < 0.0:
                raise EntropyError(f"negative weight for sector {sec.label()}")
            label = sec.label()
            if label in probs:
                raise EntropyError(f"sector {label} weighted twice")
            probs[label] = float(value)
        if abs(math.fsum(probs.values()) - 1.0) > 1e-9:
            raise EntropyError("sector weights must sum to one")

    support = [by_label[label] for label in probs]
    inter_dims = {}
    for sec in support:
        inter_dims[sec.label()] = math.prod(
            intertwiner_dim(sec.vertex_spins(x)) for x in graph.vertices
        )
    d_input = sum(inter_dims.values())

    raw = {}
    for sec in support:
        amp = math.prod(
            abs(family.g(lid, sec.spin(lid))) ** 2
            for lid in graph.internal_ids()
        )
        raw[sec.label()] = probs[sec.label()] * amp
    norm = math.fsum(raw.values())
    if norm <= 0.0:
        raise EntropyError("all weighted sectors have vanishing amplitude")
    p_tilde = {label: v / norm for label, v in raw.items()}

    purity = math.fsum(
        p_tilde[label] ** 2 / inter_dims[label] for label in p_tilde
    )
    solving = {
        label: inter_dims[label] / d_input for label in inter_dims
    }
    boundaries = {sec.boundary_part() for sec in support}
    return FineAverage(
        purity=purity,
        p_tilde=p_tilde,
        solving_weights=solving,
        d_input=d_input,
        single_boundary=len(boundaries) == 1,
    )


# -- high-spin configuration energies ------------------------------------


def high_spin_energies(
    j: SpinSector,
    k: SpinSector,
    kind: Union[str, ModelKind] = ModelKind.BULK_TO_BOUNDARY,
    family: Optional[SectorFamily] = None,
) -> Dict[str, float]:
    """Rescaled energies of the competing configurations of the pair (j, k).

    All couplings are divided by beta = log D_O of sector j, so the
    boundary cut has unit cost.  With G the set of vertices on which j and
    k agree, the reported entries are

        H1_up   = sum of Lambda~ over G plus lambda~ over the internal
                  links cut by G ("up" means up on G, down elsewhere),
        H1_down = 1,
        H0_up   = 0,
        H0_down = 1 + s_j,       s_j = log(prod_x D_{j^x}) / log D_O,

    together with s_j and the input/output ratio r_E (computed within
    `family` when given, else from sector j alone).  These are formal
    evaluations of the coupling part of H at the named configurations: the
    up-on-G entry does not price boundary legs at vertices outside G, and
    for pairs with different boundary spins some configurations admit no
    delta-allowed realization at all.  H1_up is infinite when G is empty.
    """
    if j.graph != k.graph:
        raise EntropyError("sectors live on different graphs")
    if isinstance(kind, ModelKind):
        kind_obj = kind
    elif kind in (ModelKind.BULK_TO_BOUNDARY, ModelKind.BOUNDARY_TO_BOUNDARY):
        kind_obj = ModelKind(mode=kind)
    else:
        raise EntropyError(f"unknown model kind {kind!r}")
    graph = j.graph
    cs = couplings(j, kind_obj, 1)
    if cs.beta <= 0.0:
        raise EntropyError("D_O = 1: the rescaled couplings are undefined")
    lam_tilde = cs.lam_tilde
    big_tilde = cs.big_lam_tilde

    agree = {
        x for x in graph.vertices if j.vertex_spins(x) == k.vertex_spins(x)
    }
    if agree:
        cut = 0.0
        for link in graph.internal_links:
            inside = (link.source.vertex in agree) + (
                link.target.vertex in agree
            )
            if inside == 1:
                cut += lam_tilde[link.link_id]
        h1_up = cut + math.fsum(big_tilde[x] for x in agree)
    else:
        h1_up = math.inf
    s_j = math.fsum(big_tilde.values())

    if family is not None:
        r = sector_dims(j, graph, family).r
    else:
        inter = math.prod(
            intertwiner_dim(j.vertex_spins(x)) for x in graph.vertices
        )
        d_out = math.prod(
            j.spin(lid).dim for lid in graph.boundary_ids()
        )
        r = inter / d_out
    return {
        "H1_up": h1_up,
        "H1_down": 1.0,
        "H0_up": 0.0,
        "H0_down": 1.0 + s_j,
        "s_j": s_j,
        "r_E": r,
    }
