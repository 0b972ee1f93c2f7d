"""Tests for boundaries, brickwork drivers and closed-form references."""

import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from replica_tn import NumericDegeneracyError, ShapeMismatchError, UnsupportedParameterError
from replica_tn.channels import ChannelStack, depolarising_choi, identity_choi
from replica_tn.commutant import (
    Permutation,
    brauer_basis,
    clifford_basis,
    gram_matrix,
    irrep_projector,
    symmetric_basis,
)
from replica_tn.observables import (
    BoundarySpec,
    BrickworkNetwork,
    SweepConfig,
    annealed_renyi,
    bell_init_overlaps,
    brickwork_average,
    brickwork_contract,
    clifford_ipr_stat,
    coherent_information,
    diagonal_projector_vector,
    entanglement_velocity,
    fit_decay_rate,
    full_swap_boundary,
    haar_ipr,
    ipr_boundary,
    iter_brickwork,
    iter_coherent_information,
    noisy_brickwork_average,
    orthogonal_ipr_stat,
    page_purity,
    plateau_depth,
    purity_boundary,
    relative_coherence,
    relative_coherence_from,
    xeb,
    xeb_from,
    xeb_network,
)
from replica_tn.oracles import rw_purity
from replica_tn.types import ContractionResult, TruncationParams

TRUNC = TruncationParams(chi_max=64)


def _dep_stack(d, p, k=2):
    return ChannelStack.uniform(depolarising_choi(d, p), k)


class TestBoundaries:
    def test_ipr_amplitudes(self):
        boundary = ipr_boundary(symmetric_basis(3), 2, 4)
        assert len(boundary) == 4
        assert_allclose(boundary.per_site[0], np.full(6, 2.0))
        assert boundary.bra_keys == ("diag",) * 4

    def test_clifford_ipr_amplitudes_for_q3(self):
        amps = ipr_boundary(clifford_basis(3, 3), 3, 2).per_site[0]
        assert_allclose(amps[:6], 3.0)
        omega = diagonal_projector_vector(3, 3)
        assert omega.sum() == 3

    def test_purity_boundary_rows(self):
        basis = symmetric_basis(2)
        boundary = purity_boundary(basis, 2, 4, [0, 1])
        assert_allclose(boundary.per_site[0], [2.0, 4.0])
        assert_allclose(boundary.per_site[3], [4.0, 2.0])

    def test_purity_region_validated(self):
        with pytest.raises(UnsupportedParameterError):
            purity_boundary(symmetric_basis(2), 2, 4, [4])
        with pytest.raises(UnsupportedParameterError):
            purity_boundary(symmetric_basis(2), 2, 4, [])

    def test_rescaled_keeps_product(self):
        boundary = BoundarySpec((np.array([2.0, 8.0]), np.array([3.0, 1.0])))
        scaled = boundary.rescaled()
        assert_allclose(scaled.per_site[0], [0.25, 1.0])
        assert scaled.log_prefactor == pytest.approx(math.log(24.0))

    def test_mismatched_lengths(self):
        with pytest.raises(ShapeMismatchError):
            BoundarySpec((np.ones(2), np.ones(3)))

    @pytest.mark.parametrize("beta, expected", [(Permutation.identity(2), [1.0, 0.5]), (Permutation((1, 0)), [0.5, 1.0])])
    def test_bell_init_overlaps(self, beta, expected):
        assert_allclose(bell_init_overlaps(beta, 2, 2), expected)

    def test_bell_init_overlaps_needs_k2(self):
        with pytest.raises(UnsupportedParameterError):
            bell_init_overlaps(Permutation.identity(3), 3, 2)


class TestSingleGateLimits:
    @pytest.mark.parametrize("d", [2, 3])
    def test_ipr_is_haar_value(self, d):
        basis = symmetric_basis(2)
        value = brickwork_average(basis, d, 2, 1, ipr_boundary(basis, d, 2))
        assert value == pytest.approx(2.0 / (d * d + 1), rel=1e-12)

    @pytest.mark.parametrize("d", [2, 3])
    def test_purity_is_page_value(self, d):
        basis = symmetric_basis(2)
        value = brickwork_average(basis, d, 2, 1, purity_boundary(basis, d, 2, [0]))
        assert value == pytest.approx(page_purity(d, d), rel=1e-12)

    @pytest.mark.parametrize("k", [3, 4])
    def test_higher_moments(self, k):
        basis = symmetric_basis(k)
        value = brickwork_average(basis, 2, 2, 1, ipr_boundary(basis, 2, 2))
        assert value == pytest.approx(haar_ipr(4, k), rel=1e-10)

    def test_orthogonal_gate(self):
        basis = brauer_basis(2)
        value = brickwork_average(basis, 2, 2, 1, ipr_boundary(basis, 2, 2))
        assert value == pytest.approx(3.0 / 6.0, rel=1e-12)

    def test_clifford_qutrit_gate(self):
        basis = clifford_basis(3, 3)
        value = brickwork_average(basis, 3, 2, 1, ipr_boundary(basis, 3, 2))
        assert value == pytest.approx(clifford_ipr_stat(3, 2, 3), rel=1e-9)

    def test_full_swap_of_pure_state_is_one(self):
        basis = symmetric_basis(2)
        for t in (1, 2, 5):
            assert brickwork_average(basis, 2, 6, t, full_swap_boundary(basis, 2, 6)) == pytest.approx(1.0, rel=1e-10)


class TestBrickworkContract:
    def test_result_record(self):
        basis = symmetric_basis(2)
        seen = []
        result = brickwork_contract(basis, 2, 6, 4, ipr_boundary(basis, 2, 6), on_layer=seen.append)
        assert result.t == 4
        assert result.sign == 1.0
        assert result.chi_used >= 1
        assert result.discarded_weight_max < 1e-8
        assert [diag.layer for diag in seen] == [2, 3, 4]
        assert [diag.parity for diag in seen] == ["even", "odd", "even"]

    def test_iter_yields_every_depth_for_every_boundary(self):
        basis = symmetric_basis(2)
        network = BrickworkNetwork(basis, 2, 4)
        boundaries = [ipr_boundary(basis, 2, 4), purity_boundary(basis, 2, 4, [0, 1])]
        depths = [[r.t for r in results] for results in iter_brickwork(network, boundaries, 3)]
        assert depths == [[1, 1], [2, 2], [3, 3]]

    def test_network_validation(self):
        with pytest.raises(UnsupportedParameterError):
            BrickworkNetwork(symmetric_basis(2), 2, 5)
        with pytest.raises(ShapeMismatchError):
            BrickworkNetwork(symmetric_basis(2), 2, 4, ChannelStack.identity(3, 2))

    def test_gate_cache_by_pending_flags(self):
        network = BrickworkNetwork(symmetric_basis(2), 2, 4, _dep_stack(2, 0.1))
        assert network.gate(True, False) is network.gate(True, False)
        assert network.gate(True, False) is not network.gate(False, False)
        clean = BrickworkNetwork(symmetric_basis(2), 2, 4)
        assert clean.gate(True, True) is clean.gate(False, False)

    def test_clifford_k2_equals_unitary(self):
        for N, t in [(4, 3), (6, 5), (8, 6)]:
            u = brickwork_average(symmetric_basis(2), 3, N, t, ipr_boundary(symmetric_basis(2), 3, N))
            c_basis = clifford_basis(2, 3)
            c = brickwork_average(c_basis, 3, N, t, ipr_boundary(c_basis, 3, N))
            assert c == pytest.approx(u, rel=1e-10)


class TestMembrane:
    @pytest.mark.parametrize("N", [8, 16, 24, 32])
    def test_half_chain_purity_matches_random_walk(self, N):
        basis = symmetric_basis(2)
        network = BrickworkNetwork(basis, 2, N)
        boundary = purity_boundary(basis, 2, N, range(N // 2))
        for (result,) in iter_brickwork(network, [boundary], 64, TRUNC):
            assert result.value == pytest.approx(rw_purity(N, N // 2, 2, result.t), rel=1e-8)

    def test_off_center_cut(self):
        basis = symmetric_basis(2)
        network = BrickworkNetwork(basis, 2, 8)
        boundary = purity_boundary(basis, 2, 8, range(3))
        for (result,) in iter_brickwork(network, [boundary], 20, TRUNC):
            assert result.value == pytest.approx(rw_purity(8, 3, 2, result.t), rel=1e-8)


class TestAnticoncentration:
    def _relative_deviations(self, N, t_max):
        basis = symmetric_basis(2)
        network = BrickworkNetwork(basis, 2, N)
        log_ref = math.log(2.0) - math.log(2**N + 1)
        out = {}
        for (result,) in iter_brickwork(network, [ipr_boundary(basis, 2, N)], t_max, TRUNC):
            out[result.t] = math.expm1(result.log_value - log_ref)
        return out

    def test_decay_rate_is_size_independent(self):
        rates = []
        for N, t_max in [(32, 100), (64, 110), (128, 120)]:
            dev = self._relative_deviations(N, t_max)
            window = [(t, v) for t, v in dev.items() if t >= 3 and 1e-9 <= v <= 1e-3]
            assert len(window) >= 10
            ts, vals = zip(*window)
            rates.append(fit_decay_rate(ts, vals))
        mean = float(np.mean(rates))
        for rate in rates:
            assert abs(rate - mean) <= 0.05 * mean
        assert mean == pytest.approx(entanglement_velocity(2), rel=0.1)

    @pytest.mark.parametrize("N", [8, 16, 32])
    def test_plateau_reached(self, N):
        t = plateau_depth(N)
        dev = self._relative_deviations(N, t)
        assert abs(dev[t]) * 2.0 / (2**N + 1) < 1e-4
        assert all(dev[s + 2] < dev[s] for s in range(3, t - 1))


    def test_long_chain_with_default_truncation(self):
        N = 256
        basis = symmetric_basis(2)
        network = BrickworkNetwork(basis, 2, N)
        log_ref = math.log(2.0) - math.log(2.0**N + 1)
        plateau = plateau_depth(N)
        results = {}
        for (result,) in iter_brickwork(network, [ipr_boundary(basis, 2, N)], 100):
            if result.t in (plateau, 100):
                results[result.t] = result
        for result in results.values():
            assert result.sign == 1.0
            assert math.isfinite(result.log_value)
        assert abs(math.expm1(results[plateau].log_value - log_ref)) < 1e-4
        assert abs(math.expm1(results[100].log_value - log_ref)) < 1e-7


class TestTruncation:
    def test_single_state_cap_keeps_degenerate_pair(self, caplog):
        basis = symmetric_basis(2)
        boundary = ipr_boundary(basis, 2, 16)
        with caplog.at_level(logging.WARNING, logger="replica_tn._internal.linalg"):
            coarse = brickwork_contract(basis, 2, 16, 20, boundary, TruncationParams(chi_max=1))
        assert coarse.chi_used >= 2
        assert coarse.discarded_weight_max > 0.0
        assert any("degenerate multiplet" in record.getMessage() for record in caplog.records)
        converged = brickwork_contract(basis, 2, 16, 20, boundary, TRUNC)
        assert coarse.value == pytest.approx(converged.value, rel=0.5)

    def test_discarded_weight_shrinks_with_cutoff(self):
        basis = symmetric_basis(2)
        boundary = ipr_boundary(basis, 2, 16)
        weights = [
            brickwork_contract(basis, 2, 16, 12, boundary, TruncationParams(chi_max=64, cutoff=cutoff)).discarded_weight_max
            for cutoff in (1e-3, 1e-6, 1e-10, 0.0)
        ]
        for loose, tight in zip(weights, weights[1:]):
            assert tight <= loose * (1.0 + 1e-6) + 1e-28
        assert weights[0] > weights[-1]


class TestEnsemblePlateaus:
    @pytest.mark.parametrize("N", [8, 16])
    def test_orthogonal(self, N):
        basis = brauer_basis(2)
        value = brickwork_average(basis, 2, N, 100, ipr_boundary(basis, 2, N), TRUNC)
        assert value == pytest.approx(orthogonal_ipr_stat(2**N, 2), rel=1e-4)

    def test_clifford_qutrit_k3(self):
        basis = clifford_basis(3, 3)
        D = 3**6
        value = brickwork_average(basis, 3, 6, 60, ipr_boundary(basis, 3, 6))
        assert value == pytest.approx(8.0 / ((D + 1) * (D + 3)), rel=1e-3)


class TestIrrepReduction:
    @pytest.mark.parametrize("k, N, t", [(3, 6, 6), (4, 4, 4)])
    def test_reduced_contraction_equals_full(self, k, N, t):
        basis = symmetric_basis(k)
        projector = irrep_projector(gram_matrix(basis, 2))
        boundary = ipr_boundary(basis, 2, N)
        full = brickwork_average(basis, 2, N, t, boundary)
        reduced = brickwork_average(basis, 2, N, t, boundary, projector=projector)
        assert reduced == pytest.approx(full, rel=1e-9)

    def test_four_replica_qubit_chain_reduction(self):
        basis = symmetric_basis(4)
        projector = irrep_projector(gram_matrix(basis, 2))
        assert projector.d_red == 14
        boundary = ipr_boundary(basis, 2, 8)
        trunc = TruncationParams(chi_max=1024)
        runs = []
        for network in (BrickworkNetwork(basis, 2, 8), BrickworkNetwork(basis, 2, 8, projector=projector)):
            runs.append([result for (result,) in iter_brickwork(network, [boundary], 3, trunc)])
        full, reduced = runs
        for a, b in zip(full, reduced):
            assert b.value == pytest.approx(a.value, rel=1e-9)
        assert max(r.discarded_weight_max for r in reduced) < 1e-20
        assert full[-1].value > haar_ipr(2**8, 4)

    def test_reduced_noisy_purity_equals_full(self):
        basis = symmetric_basis(3)
        projector = irrep_projector(gram_matrix(basis, 2))
        stack = _dep_stack(2, 0.1, k=3)
        boundary = purity_boundary(basis, 2, 4, [0, 1])
        full = noisy_brickwork_average(basis, 2, 4, 3, boundary, stack)
        reduced = noisy_brickwork_average(basis, 2, 4, 3, boundary, stack, projector=projector)
        assert reduced == pytest.approx(full, rel=1e-9)


class TestNoise:
    @pytest.mark.parametrize("N", [4, 8])
    @pytest.mark.parametrize("t", [2, 3])
    def test_full_depolarising_limits(self, N, t):
        basis = symmetric_basis(2)
        stack = _dep_stack(2, 1.0)
        purity = noisy_brickwork_average(basis, 2, N, t, full_swap_boundary(basis, 2, N), stack)
        assert purity == pytest.approx(2.0**-N, rel=1e-10)
        assert relative_coherence(2, N, t, stack) == pytest.approx(0.0, abs=1e-10)

    def test_noise_lowers_purity(self):
        basis = symmetric_basis(2)
        boundary = full_swap_boundary(basis, 2, 6)
        values = [noisy_brickwork_average(basis, 2, 6, 4, boundary, _dep_stack(2, p)) for p in (0.0, 0.1, 0.3)]
        assert values[0] == pytest.approx(1.0, rel=1e-10)
        assert values[0] > values[1] > values[2] > 2.0**-6

    def test_clean_relative_coherence(self):
        assert relative_coherence(2, 2, 1, None) == pytest.approx(math.log(2.5), rel=1e-12)

    def test_relative_coherence_decays(self):
        stack = _dep_stack(2, 0.1)
        early = relative_coherence(2, 8, 2, stack)
        late = relative_coherence(2, 8, 6, stack)
        assert early > late > 0.0

    def test_negative_contraction_rejected(self):
        with pytest.raises(NumericDegeneracyError):
            relative_coherence_from(ContractionResult(1, 0.0, -1.0), ContractionResult(1, 0.0))


class TestCoherentInformation:
    def test_noiseless_is_one(self):
        for value, res_b, res_rb in iter_coherent_information(2, 8, 1, 20, 0.0):
            assert value == pytest.approx(1.0, abs=1e-9)
            assert res_b.value == pytest.approx(0.5, rel=1e-9)
            assert res_rb.value == pytest.approx(1.0, rel=1e-9)

    def test_normalizations(self):
        raw = coherent_information(2, 4, 1, 3, 0.0, normalization="none")
        assert raw == pytest.approx(math.log(2), rel=1e-9)
        assert coherent_information(2, 4, 2, 3, 0.0, normalization="K") == pytest.approx(math.log(2), rel=1e-9)

    def test_decohered_limit(self):
        assert coherent_information(2, 16, 1, 40, 0.1) < -0.9

    def test_K_validated(self):
        with pytest.raises(UnsupportedParameterError):
            coherent_information(2, 4, 3, 2, 0.0)


class TestXeb:
    def test_clean_plateau(self):
        D = 2**16
        assert xeb(2, 16, 120, identity_choi(2), TRUNC) == pytest.approx((D - 1) / (D + 1), abs=1e-6)

    @pytest.mark.parametrize("p", [0.1, 0.2])
    def test_noisy_decay_after_peak(self, p):
        basis = symmetric_basis(2)
        network = xeb_network(2, 8, depolarising_choi(2, p))
        values = [xeb_from(r, 2, 8) for (r,) in iter_brickwork(network, [ipr_boundary(basis, 2, 8)], 14)]
        peak = int(np.argmax(values))
        tail = [v for v in values[peak:] if v > 1e-8]
        assert len(tail) >= 3
        assert all(b < a for a, b in zip(tail, tail[1:]))
        assert values[-1] < 0.05 * values[peak]

    def test_more_noise_lower_xeb(self):
        values = [xeb(2, 8, 6, depolarising_choi(2, p)) for p in (0.0, 0.05, 0.1, 0.2)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] > 0.0


class TestClosedForms:
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_clifford_k2_telescopes_to_haar(self, d):
        for N in range(1, 11):
            assert clifford_ipr_stat(d, N, 2) == pytest.approx(haar_ipr(d**N, 2), rel=1e-12)

    @pytest.mark.parametrize("N", [1, 2, 4, 6])
    def test_clifford_qutrit_k3(self, N):
        D = 3**N
        assert clifford_ipr_stat(3, N, 3) == pytest.approx(8.0 / ((D + 1) * (D + 3)), rel=1e-12)

    def test_values(self):
        assert haar_ipr(4, 2) == pytest.approx(0.4)
        assert haar_ipr(10**40, 2) == pytest.approx(2e-40, rel=1e-12)
        assert page_purity(2, 2) == pytest.approx(0.8)
        assert orthogonal_ipr_stat(4, 2) == pytest.approx(0.5)
        assert orthogonal_ipr_stat(4, 3) == pytest.approx(15.0 / (6 * 8))
        assert entanglement_velocity(2) == pytest.approx(math.log(1.25))
        assert annealed_renyi(0.25, 2) == pytest.approx(math.log(4))
        assert plateau_depth(32) == 40

    def test_fit_decay_rate(self):
        ts = np.arange(10, 30)
        assert fit_decay_rate(ts, 3.0 * np.exp(-0.2 * ts)) == pytest.approx(0.2, rel=1e-10)
        with pytest.raises(NumericDegeneracyError):
            fit_decay_rate([1, 2], [1.0, -1.0])

    def test_rejects(self):
        with pytest.raises(UnsupportedParameterError):
            haar_ipr(1, 2)
        with pytest.raises(NumericDegeneracyError):
            annealed_renyi(0.0, 2)


class TestSweepConfig:
    def test_builds_basis_and_stack(self):
        config = SweepConfig(ensemble="orthogonal", k=2, d=2, N=4, channels=("dep:0.1",))
        assert len(config.basis()) == 3
        stack = config.stack()
        assert stack.k == 2
        assert stack.labels() == ["dep:0.1", "dep:0.1"]
        assert SweepConfig().stack() is None

    def test_validation(self):
        with pytest.raises(UnsupportedParameterError):
            SweepConfig(N=3)
        with pytest.raises(UnsupportedParameterError):
            SweepConfig(p=2.0)
