"""Exact-simulator tests: basis bookkeeping, replica traces, sampling.

The heart of the file is the engine-equivalence block: the exact pattern
sums must reproduce the Ising partition totals on instances small enough to
enumerate, for both map kinds, without sharing any code with the engine.
"""

import numpy as np
import pytest

from conftest import random_instance

from holoising.bulk import IntertwinerState
from holoising.graph import BoundaryPartition, build_graph
from holoising.ising import IsingModel, ModelKind
from holoising.oracle import (
    FrozenVertices,
    OracleError,
    _all_subsets,
    _component_pattern_sum,
    build_cmap,
    build_hilbert,
    choi_map,
    dim_cap,
    exact_replica_average,
    haar_sample,
    hs_isometry_defect,
    localisation_probe,
    mc_purity,
    reduced_density,
    replica_purity,
    resolve_region,
    sector_states,
    singlet_projector,
)
from holoising.spins import SectorFamily


def four_leg_graph():
    return build_graph(
        {
            "vertices": [{"id": "x", "valence": 4}],
            "links": [{"id": f"p{i}", "end": ["x", i - 1]} for i in range(1, 5)],
        }
    )


def two_sector_vertex_family(graph):
    """One free leg over {1/2, 3/2}, the rest pinned to 1/2: two sectors."""
    return SectorFamily.build(
        graph,
        "1/2",
        "3/2",
        allowed={
            "p1": ["1/2", "3/2"],
            "p2": ["1/2"],
            "p3": ["1/2"],
            "p4": ["1/2"],
        },
    )


def glued_graph():
    return build_graph(
        {
            "vertices": [{"id": "x", "valence": 3}, {"id": "y", "valence": 3}],
            "links": [
                {"id": "e", "ends": [["x", 0], ["y", 0]]},
                {"id": "a1", "end": ["x", 1]},
                {"id": "a2", "end": ["x", 2]},
                {"id": "b1", "end": ["y", 1]},
                {"id": "b2", "end": ["y", 2]},
            ],
        }
    )


def glued_family(graph):
    return SectorFamily.build(
        graph,
        "1/2",
        "3/2",
        allowed={
            "e": ["1/2", "3/2"],
            "a1": ["1/2", "1"],
            "a2": ["1/2"],
            "b1": ["1"],
            "b2": ["1/2"],
        },
        weights={"e": {"1/2": 0.8, "3/2": 0.6j}},
    )


class TestHilbertIndex:
    def test_four_valent_half_dimension(self):
        graph = four_leg_graph()
        family = SectorFamily.build(graph, "1/2", "1/2")
        index = build_hilbert(graph, family)
        # One block: intertwiner dim 2 times four spin-1/2 ports.
        assert index.dim == 2 * 2**4

    def test_empty_blocks_are_excluded(self):
        graph = build_graph(
            {
                "vertices": [{"id": "x", "valence": 3}],
                "links": [{"id": f"p{i}", "end": ["x", i]} for i in range(3)],
            }
        )
        family = SectorFamily.build(graph, "1/2", "1/2")
        index = build_hilbert(graph, family)
        assert index.dim == 0

    def test_two_vertex_dimension_is_product(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        assert index.vertex_dims == (36, 36)
        assert index.dim == 1296

    def test_block_order_and_intertwiner_fastest(self):
        graph = four_leg_graph()
        family = two_sector_vertex_family(graph)
        space = build_hilbert(graph, family).spaces[0]
        spins = [b.port_spins[0].twice for b in space.blocks]
        assert spins == sorted(spins)
        first = space.blocks[0]
        # Within a block the intertwiner index cycles fastest.
        idx = np.arange(first.size)
        assert np.array_equal(
            space.int_idx[: first.size], idx % first.intertwiner_dim
        )

    def test_cap_and_env_override(self, monkeypatch):
        graph = glued_graph()
        family = glued_family(graph)
        with pytest.raises(OracleError):
            build_hilbert(graph, family, cap=100)
        monkeypatch.setenv("HOLOISING_DIM_CAP", "50")
        assert dim_cap() == 50
        with pytest.raises(OracleError):
            build_hilbert(graph, family)
        monkeypatch.setenv("HOLOISING_DIM_CAP", "2000")
        assert build_hilbert(graph, family).dim == 1296

    def test_bad_env_value_rejected(self, monkeypatch):
        monkeypatch.setenv("HOLOISING_DIM_CAP", "many")
        with pytest.raises(OracleError):
            dim_cap()


class TestSingletProjector:
    def test_half_block_is_rank_one_singlet(self):
        graph = glued_graph()
        family = SectorFamily.build(
            graph, "1/2", "1/2", weights={"e": {"1/2": 0.5}}, normalize=False
        )
        index = build_hilbert(graph, family)
        op = singlet_projector(index, "e")
        assert op.shape == (4, 4)
        evals = np.linalg.eigvalsh(op)
        assert np.allclose(evals[:3], 0.0, atol=1e-12)
        assert abs(evals[-1] - 0.25) < 1e-12  # |g|^2 = 0.25
        vec = np.zeros(4, dtype=complex)
        vec[0 * 2 + 1] = 1 / np.sqrt(2)
        vec[1 * 2 + 0] = -1 / np.sqrt(2)
        assert abs(vec.conj() @ op @ vec - 0.25) < 1e-12

    def test_block_traces_are_weight_squares(self):
        graph = glued_graph()
        family = glued_family(graph)
        index = build_hilbert(graph, family)
        op = singlet_projector(index, "e")
        expect = sum(abs(family.g("e", s)) ** 2 for s in family.allowed["e"])
        assert abs(np.trace(op).real - expect) < 1e-12

    def test_square_rescales_each_block(self):
        graph = glued_graph()
        family = glued_family(graph)
        index = build_hilbert(graph, family)
        op = singlet_projector(index, "e")
        # Each spin block is |g|^2 times a rank-one projector, so squaring
        # turns the block weights |g|^2 into |g|^4 and nothing else moves.
        expect = sorted(
            [0.0] * (op.shape[0] - 2)
            + [abs(family.g("e", s)) ** 4 for s in family.allowed["e"]]
        )
        assert np.allclose(np.linalg.eigvalsh(op @ op), expect, atol=1e-12)

    def test_boundary_link_rejected(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        with pytest.raises(OracleError):
            singlet_projector(index, "a1")


class TestHaarSampling:
    def test_unit_norms(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        sec = index.family_sectors()[0]
        for grade, kw in [
            ("medium", {}),
            ("coarse", {}),
            ("fine", {"weights": {sec: 1.0}}),
        ]:
            v = haar_sample(index, grade, seed=1, shot=4, **kw)
            assert abs(np.linalg.norm(v) - 1.0) < 1e-12

    def test_counter_reproducibility(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        a = haar_sample(index, "medium", seed=9, shot=3)
        b = haar_sample(index, "medium", seed=9, shot=3)
        c = haar_sample(index, "medium", seed=9, shot=4)
        d = haar_sample(index, "medium", seed=8, shot=3)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert not np.array_equal(a, d)

    def test_second_moment(self):
        graph = four_leg_graph()
        family = SectorFamily.build(graph, "1/2", "1/2")
        index = build_hilbert(graph, family)
        shots = 500
        acc = np.zeros(index.dim)
        for s in range(shots):
            acc += np.abs(haar_sample(index, "medium", seed=2, shot=s)) ** 2
        mean = acc / shots
        # Each |psi_i|^2 has mean 1/n and variance below 1/n^2.
        sigma = 1.0 / index.dim / np.sqrt(shots)
        assert np.all(np.abs(mean - 1.0 / index.dim) < 4 * sigma)

    def test_fine_sample_supported_on_weighted_sectors(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        s1 = index.family_sectors()[0]
        v = haar_sample(index, "fine", seed=5, shot=0, weights={s1: 1.0})
        mask = np.zeros(index.dim, dtype=bool)
        mask[index.sector_columns(s1)] = True
        assert np.allclose(v[~mask], 0.0)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12


class TestEngineEquivalence:
    def test_single_vertex_totals(self):
        graph = four_leg_graph()
        family = two_sector_vertex_family(graph)
        index = build_hilbert(graph, family)
        kind = ModelKind.bulk_to_boundary()
        totals = IsingModel(graph, family, kind).partition_table().totals
        cmap = build_cmap(index, kind)
        z0 = exact_replica_average(index, (), cmap=cmap)
        z1 = exact_replica_average(index, "bulk", cmap=cmap)
        assert z0 == pytest.approx(totals[0], rel=1e-10)
        assert z1 == pytest.approx(totals[1], rel=1e-10)

    def test_glued_totals_keep_cross_sector_terms(self):
        graph = glued_graph()
        family = glued_family(graph)
        index = build_hilbert(graph, family)
        kind = ModelKind.bulk_to_boundary()
        totals = IsingModel(graph, family, kind).partition_table().totals
        cmap = build_cmap(index, kind)
        z0 = exact_replica_average(index, (), cmap=cmap)
        z1 = exact_replica_average(index, "bulk", cmap=cmap)
        assert z0 == pytest.approx(totals[0], rel=1e-10)
        assert z1 == pytest.approx(totals[1], rel=1e-10)
        # The sector-diagonal part alone undercounts: cross-sector terms with
        # matching boundary labels contribute to the swapped trace too.
        pb = cmap.pair_basis(resolve_region(index, "bulk"))
        per_sector = 0.0
        for sec in index.family_sectors():
            cols = index.sector_local_ranges(sec)
            per_sector += sum(
                _component_pattern_sum(
                    cmap,
                    pb,
                    [u],
                    colsel1=cols,
                    colsel2=cols,
                    colkey1=sec.key(),
                    colkey2=sec.key(),
                ).real
                for u in _all_subsets(2)
            )
        assert per_sector < z1 - 1.0

    def test_b2b_pure_state_totals(self):
        graph = glued_graph()
        family = glued_family(graph)
        index = build_hilbert(graph, family)
        s1, s2 = index.family_sectors()
        state = IntertwinerState.from_pure(graph, {s1: [0.6], s2: [0.8]})
        part = BoundaryPartition.from_input(graph, ["a1", "a2"])
        kind = ModelKind.boundary_to_boundary(part)
        totals = IsingModel(graph, family, kind, state=state).partition_table().totals
        cmap = build_cmap(index, kind, state=state)
        z0 = exact_replica_average(index, (), cmap=cmap)
        z1 = exact_replica_average(index, sorted(part.input_region), cmap=cmap)
        assert z0 == pytest.approx(totals[0], rel=1e-10)
        assert z1 == pytest.approx(totals[1], rel=1e-10)

    def test_b2b_mixed_state_totals(self):
        graph = glued_graph()
        family = SectorFamily.build(
            graph,
            "1/2",
            "2",
            allowed={
                "e": ["1"],
                "a1": ["1"],
                "a2": ["1"],
                "b1": ["1"],
                "b2": ["1", "2"],
            },
        )
        index = build_hilbert(graph, family)
        s1, s2 = index.family_sectors()
        state = IntertwinerState.from_blocks(
            graph,
            [s1, s2],
            {
                (s1, s1): np.array([[0.5]]),
                (s1, s2): np.array([[0.25 + 0.1j]]),
                (s2, s2): np.array([[0.5]]),
            },
        )
        part = BoundaryPartition.from_input(graph, ["a1", "b1"])
        kind = ModelKind.boundary_to_boundary(part)
        totals = IsingModel(graph, family, kind, state=state).partition_table().totals
        cmap = build_cmap(index, kind, state=state)
        assert len(cmap.components) == 2
        z0 = exact_replica_average(index, (), cmap=cmap)
        z1 = exact_replica_average(index, sorted(part.input_region), cmap=cmap)
        assert z0 == pytest.approx(totals[0], rel=1e-10)
        assert z1 == pytest.approx(totals[1], rel=1e-10)

    def test_random_instances_agree(self):
        rng = np.random.default_rng(20240817)
        for _ in range(6):
            graph, family, state, part = random_instance(rng, with_state=True)
            index = build_hilbert(graph, family, cap=600)
            kind = ModelKind.bulk_to_boundary()
            totals = IsingModel(graph, family, kind).partition_table().totals
            cmap = build_cmap(index, kind)
            z0 = exact_replica_average(index, (), cmap=cmap)
            z1 = exact_replica_average(index, "bulk", cmap=cmap)
            assert z0 == pytest.approx(totals[0], rel=1e-9)
            assert z1 == pytest.approx(totals[1], rel=1e-9)
            if part is None:
                continue
            kind = ModelKind.boundary_to_boundary(part)
            totals = (
                IsingModel(graph, family, kind, state=state)
                .partition_table()
                .totals
            )
            cmap = build_cmap(index, kind, state=state)
            z0 = exact_replica_average(index, (), cmap=cmap)
            z1 = exact_replica_average(index, sorted(part.input_region), cmap=cmap)
            assert z0 == pytest.approx(totals[0], rel=1e-9)
            assert z1 == pytest.approx(totals[1], rel=1e-9)


class TestGrades:
    def test_fine_peaked_equals_restricted_medium(self):
        graph = glued_graph()
        family = glued_family(graph)
        index = build_hilbert(graph, family)
        cmap = build_cmap(index, ModelKind.bulk_to_boundary())
        s1 = next(s for s in index.family_sectors() if s.spin("e").twice == 1)
        # A family restricted to the sector's spins, with the same internal
        # weight: the plain vertex average over it reproduces the peaked
        # fine average up to the per-vertex normalizations n(n+1).
        restricted = SectorFamily.build(
            graph,
            "1/2",
            "3/2",
            allowed={lid: [s1.spin(lid)] for lid in graph.link_ids()},
            weights={"e": {s1.spin("e"): family.g("e", s1.spin("e"))}},
            normalize=False,
        )
        rindex = build_hilbert(graph, restricted)
        rcmap = build_cmap(rindex, ModelKind.bulk_to_boundary())
        sizes = [r.size for r in index.sector_local_ranges(s1)]
        norm = float(np.prod([n * (n + 1.0) for n in sizes]))
        for region in [(), "bulk"]:
            fine = exact_replica_average(
                index, region, grade="fine", weights={s1: 1.0}, cmap=cmap
            )
            medium = exact_replica_average(rindex, region, cmap=rcmap)
            assert fine == pytest.approx(medium / norm, rel=1e-10)

    def test_fine_single_sector_ratio_formula(self):
        graph = four_leg_graph()
        family = SectorFamily.build(graph, "1/2", "1/2")
        index = build_hilbert(graph, family)
        cmap = build_cmap(index, ModelKind.bulk_to_boundary())
        z0 = exact_replica_average(index, (), grade="fine", cmap=cmap)
        z1 = exact_replica_average(index, "bulk", grade="fine", cmap=cmap)
        d_i, d_o = 2, 16
        assert z1 / z0 == pytest.approx((d_i + d_o) / (d_i * d_o + 1.0), rel=1e-12)

    def test_coarse_is_endpoint_pattern_sum(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        cmap = build_cmap(index, ModelKind.bulk_to_boundary())
        pb = cmap.pair_basis(resolve_region(index, "bulk"))
        expect = (
            _component_pattern_sum(cmap, pb, [()])
            + _component_pattern_sum(cmap, pb, [(0, 1)])
        ).real
        coarse = exact_replica_average(index, "bulk", grade="coarse", cmap=cmap)
        assert coarse == pytest.approx(expect, rel=1e-12)

    def test_fine_grades_match_explicit_assembly(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        cmap = build_cmap(index, ModelKind.bulk_to_boundary())
        secs = index.family_sectors()
        w = {secs[0]: 0.4, secs[1]: 0.6}
        pb = cmap.pair_basis(resolve_region(index, "bulk"))
        cols = {s: index.sector_local_ranges(s) for s in secs}
        size = {
            s: int(np.prod([r.size for r in cols[s]], dtype=np.int64)) for s in secs
        }

        def t_sum(sj, sk, subsets):
            return _component_pattern_sum(
                cmap,
                pb,
                subsets,
                colsel1=cols[sj],
                colsel2=cols[sk],
                colkey1=sj.key(),
                colkey2=sk.key(),
            ).real

        ident = sum(
            w[sj] * w[sk] * t_sum(sj, sk, [()]) / (size[sj] * size[sk])
            for sj in secs
            for sk in secs
        )
        fine = ident
        high = ident
        for s in secs:
            t_all = t_sum(s, s, _all_subsets(2))
            t_id = t_sum(s, s, [()])
            norm = float(np.prod([r.size * (r.size + 1.0) for r in cols[s]]))
            fine += w[s] ** 2 * (t_all / norm - t_id / size[s] ** 2)
            high += w[s] ** 2 * (t_all - t_id) / size[s] ** 2
        got_fine = exact_replica_average(
            index, "bulk", grade="fine", weights=w, cmap=cmap
        )
        got_high = exact_replica_average(
            index, "bulk", grade="fine-high", weights=w, cmap=cmap
        )
        assert got_fine == pytest.approx(fine, rel=1e-12)
        assert got_high == pytest.approx(high, rel=1e-12)

    def test_unknown_grade_rejected(self):
        graph = four_leg_graph()
        index = build_hilbert(graph, SectorFamily.build(graph, "1/2", "1/2"))
        with pytest.raises(OracleError):
            exact_replica_average(index, (), grade="smooth")

    def test_threads_are_bitwise_identical(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        cmap = build_cmap(index, ModelKind.bulk_to_boundary())
        a = exact_replica_average(index, "bulk", cmap=cmap, threads=1)
        b = exact_replica_average(index, "bulk", cmap=cmap, threads=4)
        assert a == b


class TestMonteCarlo:
    def test_within_three_sigma_of_exact(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        cmap = build_cmap(index, ModelKind.bulk_to_boundary())
        exact = replica_purity(index, "bulk", cmap=cmap)
        est = mc_purity(index, "bulk", cmap=cmap, shots=3000, seed=13)
        assert abs(est.value - exact) < 3 * est.sigma
        assert est.sigma < 0.05

    def test_b2b_within_three_sigma(self):
        graph = glued_graph()
        family = glued_family(graph)
        index = build_hilbert(graph, family)
        s1, s2 = index.family_sectors()
        state = IntertwinerState.from_pure(graph, {s1: [0.6], s2: [0.8]})
        part = BoundaryPartition.from_input(graph, ["a1", "a2"])
        kind = ModelKind.boundary_to_boundary(part)
        cmap = build_cmap(index, kind, state=state)
        region = sorted(part.input_region)
        exact = replica_purity(index, region, cmap=cmap)
        est = mc_purity(index, region, cmap=cmap, shots=3000, seed=5)
        assert abs(est.value - exact) < 3 * est.sigma

    def test_batching_does_not_change_the_estimate(self):
        graph = four_leg_graph()
        index = build_hilbert(graph, SectorFamily.build(graph, "1/2", "1/2"))
        cmap = build_cmap(index, ModelKind.bulk_to_boundary())
        a = mc_purity(index, "bulk", cmap=cmap, shots=300, seed=3, batch=17)
        b = mc_purity(index, "bulk", cmap=cmap, shots=300, seed=3, batch=256)
        assert a.value == b.value
        assert a.sigma == b.sigma


class TestReductions:
    def test_trace_and_purity_bounds(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        cmap = build_cmap(index, ModelKind.bulk_to_boundary())
        psi = haar_sample(index, "medium", seed=21, shot=0)
        phi = cmap.components[0][1] @ psi
        phi /= np.linalg.norm(phi)
        rho = reduced_density(cmap, phi, "bulk")
        assert abs(np.trace(rho).real - 1.0) < 1e-12
        purity = float(np.einsum("ab,ba->", rho, rho).real)
        assert 1.0 / rho.shape[0] - 1e-12 <= purity <= 1.0 + 1e-12

    def test_product_state_reduction_is_rank_one(self):
        graph = build_graph(
            {
                "vertices": [{"id": "x", "valence": 3}, {"id": "y", "valence": 3}],
                "links": [{"id": f"s{i}", "end": ["x", i]} for i in range(3)]
                + [{"id": f"t{i}", "end": ["y", i]} for i in range(3)],
            }
        )
        family = SectorFamily.build(
            graph, "1/2", "1", allowed={"s0": ["1"], "t0": ["1"]}
        )
        index = build_hilbert(graph, family)
        rng = np.random.default_rng(3)
        dx, dy = index.vertex_dims
        vx = rng.normal(size=dx) + 1j * rng.normal(size=dx)
        vy = rng.normal(size=dy) + 1j * rng.normal(size=dy)
        phi = np.kron(vx / np.linalg.norm(vx), vy / np.linalg.norm(vy))
        keep = [("I", "x"), ("L", "x", 0), ("L", "x", 1), ("L", "x", 2)]
        rho = reduced_density(index, phi, keep)
        evals = np.linalg.eigvalsh(rho)
        assert abs(evals[-1] - 1.0) < 1e-10
        assert np.all(np.abs(evals[:-1]) < 1e-10)

    def test_sector_states_weights_sum_to_one(self):
        graph = glued_graph()
        index = build_hilbert(graph, glued_family(graph))
        cmap = build_cmap(index, ModelKind.bulk_to_boundary())
        psi = haar_sample(index, "medium", seed=2, shot=7)
        phi = cmap.components[0][1] @ psi
        split = sector_states(cmap, phi)
        assert sum(w for w, _ in split.values()) == pytest.approx(1.0, abs=1e-12)
        for sec, (w, block) in split.items():
            d_i = int(
                np.prod(
                    [
                        space.blocks[b].intertwiner_dim
                        for space, b in zip(
                            index.spaces, index.sector_block_ids(sec)
                        )
                    ]
                )
            )
            assert block.shape[0] == d_i

    def test_region_resolution_errors(self):
        graph = glued_graph()
        family = glued_family(graph)
        index = build_hilbert(graph, family)
        s1 = index.family_sectors()[0]
        state = IntertwinerState.from_pure(graph, {s1: [1.0]})
        part = BoundaryPartition.from_input(graph, ["a1"])
        kind = ModelKind.boundary_to_boundary(part)
        cmap = build_cmap(index, kind, state=state)
        # A boundary-to-boundary map has no intertwiner slots to swap.
        with pytest.raises(OracleError):
            cmap.pair_basis(resolve_region(index, "bulk"))
        with pytest.raises(KeyError):
            resolve_region(index, ["nope"])


class TestChannelDiagnostics:
    @staticmethod
    def max_entangled_data(d_i=2, d_o=4):
        phi = np.zeros((d_i, d_o), dtype=complex)
        for a in range(d_i):
            phi[a, a] = 1.0 / np.sqrt(d_i)
        rho = np.outer(phi.reshape(-1), phi.reshape(-1).conj())
        key = (("only", 1),)
        return {key: rho}, {key: (d_i, d_o)}, {key: 1.0}, [key]

    def test_max_entangled_state_has_zero_defect(self):
        rhos, dims, cs, window = self.max_entangled_data()
        assert hs_isometry_defect(rhos, dims, cs, window) < 1e-12

    def test_choi_identity_has_trace_k(self):
        rhos, dims, cs, window = self.max_entangled_data()
        key = window[0]
        out = choi_map(rhos, {key: np.eye(2)}, dims, cs, window)
        assert abs(np.trace(out[key]).real - dims[key][0]) < 1e-12

    def test_choi_transposes_on_max_entangled(self):
        rhos, dims, cs, window = self.max_entangled_data()
        key = window[0]
        x = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
        out = choi_map(rhos, {key: x}, dims, cs, window)[key]
        # K c Tr_I[(X (x) 1) rho] embeds the transpose of X, so the trace and
        # the two-norm content of X survive unchanged.
        assert np.trace(out).real == pytest.approx(np.trace(x).real, abs=1e-12)
        assert np.sum(np.abs(out) ** 2) == pytest.approx(
            np.sum(np.abs(x) ** 2), abs=1e-12
        )

    def test_random_state_has_positive_defect(self):
        rng = np.random.default_rng(7)
        d_i, d_o = 2, 4
        vec = rng.normal(size=d_i * d_o) + 1j * rng.normal(size=d_i * d_o)
        vec /= np.linalg.norm(vec)
        rho = np.outer(vec, vec.conj())
        key = (("only", 1),)
        defect = hs_isometry_defect({key: rho}, {key: (d_i, d_o)}, {key: 1.0}, [key])
        assert defect > 1e-3

    def test_mixed_state_preserves_trace_but_fails_gram(self):
        d_i, d_o = 2, 3
        sigma = np.diag([0.5, 0.3, 0.2]).astype(complex)
        rho = np.kron(np.eye(d_i) / d_i, sigma)
        key = (("only", 1),)
        out = choi_map(
            {key: rho}, {key: np.eye(d_i)}, {key: (d_i, d_o)}, {key: 1.0}, [key]
        )
        # Trace preservation holds for the identity input...
        assert abs(np.trace(out[key]).real - d_i) < 1e-12
        # ...while the two-copy and Gram defects stay strictly positive.
        defect = hs_isometry_defect({key: rho}, {key: (d_i, d_o)}, {key: 1.0}, [key])
        assert defect > 1e-3

    def test_sector_mixing_rejected(self):
        rhos, dims, cs, window = self.max_entangled_data()
        with pytest.raises(OracleError):
            choi_map(rhos, {("other", 2): np.eye(2)}, dims, cs, window)


class TestLocalisation:
    def test_single_sector_probe_is_exactly_zero(self):
        graph = four_leg_graph()
        family = SectorFamily.build(graph, "1/2", "1/2")
        index = build_hilbert(graph, family)
        sec = index.family_sectors()[0]
        report = localisation_probe(index, sec, shots=40, seed=1)
        # The single sector carries everything, so the weight never moves.
        assert abs(report.covariance) < 1e-15
        assert report.mean_weight == pytest.approx(1.0, abs=1e-12)

    def test_two_sector_probe_reports_finite_statistics(self):
        graph = four_leg_graph()
        family = two_sector_vertex_family(graph)
        index = build_hilbert(graph, family)
        sec = index.family_sectors()[0]
        report = localisation_probe(index, sec, shots=60, seed=4)
        assert np.isfinite(report.covariance)
        assert report.sigma > 0.0
        assert 0.0 < report.mean_weight < 1.0


class TestFrozenVertices:
    def test_freezing_matches_explicit_contraction(self):
        graph = glued_graph()
        family = glued_family(graph)
        index = build_hilbert(graph, family)
        kind = ModelKind.bulk_to_boundary()
        cmap = build_cmap(index, kind)
        rng = np.random.default_rng(8)
        dx, dy = index.vertex_dims
        core = rng.normal(size=dy) + 1j * rng.normal(size=dy)
        frozen = build_cmap(
            index, kind, fixed=FrozenVertices(vertices=("y",), amplitudes=core)
        )
        assert frozen.in_vertices == ("x",)
        psi_x = rng.normal(size=dx) + 1j * rng.normal(size=dx)
        full = cmap.components[0][1] @ np.kron(psi_x, core)
        part = frozen.components[0][1] @ psi_x
        assert np.allclose(full, part, atol=1e-12)
