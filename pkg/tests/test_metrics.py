"""Distances, entropies, mutual informations, resource rates."""

import numpy as np
import pytest

from qsr.metrics import (
    ResourceRates,
    conditional_mutual_information,
    marginal_entropy,
    mutual_information,
    pure_trace_distance,
    purity,
    resource_rates,
    trace_distance,
    trace_norm,
    von_neumann_entropy,
)
from qsr.presets import PRESET_ROLES, preset_state
from qsr.qstate import (
    DensityOperator,
    LayoutError,
    SystemLayout,
    basis_state,
    maximally_entangled,
    maximally_mixed,
)
from qsr.sampling import SeededStream, random_density, random_pure_state

FOUR_QUBITS = SystemLayout.of(("C", 2), ("A", 2), ("B", 2), ("R", 2))

# Binary entropy of (0.9, 0.1), frozen from -0.9 log2 0.9 - 0.1 log2 0.1.
H_09 = 0.4689955935892812


class TestTraceDistance:
    def test_orthogonal_pure_states(self):
        lay = SystemLayout.of(("X", 2))
        a = basis_state(lay, [0]).projector()
        b = basis_state(lay, [1]).projector()
        assert abs(trace_distance(a, b) - 2.0) < 1e-12

    def test_identical_states(self):
        rho = random_density(SystemLayout.of(("X", 3)), 2, SeededStream(0))
        assert trace_distance(rho, rho) == 0.0

    def test_overlap_formula_matches_eigenvalue_route(self):
        lay = SystemLayout.of(("X", 4))
        for tag in range(20):
            mu = random_pure_state(lay, SeededStream(1).derive(tag))
            nu = random_pure_state(lay, SeededStream(2).derive(tag))
            via_eigs = trace_distance(mu.projector(), nu.projector())
            ov = abs(np.vdot(mu.amplitudes, nu.amplitudes)) ** 2
            assert abs(via_eigs - 2.0 * np.sqrt(1.0 - ov)) < 1e-9

    def test_pure_fast_path_matches_dense(self):
        lay = SystemLayout.of(("X", 5))
        rng = SeededStream(3).generator()
        for _ in range(10):
            u = rng.standard_normal(5) + 1j * rng.standard_normal(5)
            v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
            uptr = u / np.linalg.norm(u)
            v_sub = 0.7 * v / np.linalg.norm(v)  # subnormalized on purpose
            dense = np.abs(
                np.linalg.eigvalsh(np.outer(u, u.conj()) / np.vdot(u, u).real - np.outer(v_sub, v_sub.conj()))
            ).sum()
            fast = pure_trace_distance(u / np.linalg.norm(u), v_sub)
            assert abs(dense - fast) < 1e-10

    def test_triangle_inequality_on_sampled_triples(self):
        lay = SystemLayout.of(("X", 3))
        for tag in range(30):
            r = [random_density(lay, 2, SeededStream(4).derive(3 * tag + k)) for k in range(3)]
            d01 = trace_distance(r[0], r[1])
            d12 = trace_distance(r[1], r[2])
            d02 = trace_distance(r[0], r[2])
            assert d02 <= d01 + d12 + 1e-9

    def test_layout_mismatch(self):
        with pytest.raises(LayoutError):
            trace_distance(maximally_mixed(2, "X"), maximally_mixed(2, "Y"))

    def test_trace_norm_requires_square(self):
        with pytest.raises(ValueError):
            trace_norm(np.ones((2, 3)))


class TestPurityEntropy:
    def test_purity_of_maximally_mixed(self):
        for d in (2, 3, 4):
            assert abs(purity(maximally_mixed(d, "X")) - 1.0 / d) < 1e-12

    def test_purity_of_pure_projector(self):
        psi = random_pure_state(SystemLayout.of(("X", 4)), SeededStream(5))
        assert abs(purity(psi.projector()) - 1.0) < 1e-10

    def test_purity_skewed(self):
        rho = DensityOperator(SystemLayout.of(("X", 2)), np.diag([0.9, 0.1]))
        assert abs(purity(rho) - 0.82) < 1e-12

    def test_entropy_of_pure_state(self):
        psi = random_pure_state(SystemLayout.of(("X", 4)), SeededStream(6))
        assert abs(von_neumann_entropy(psi.projector())) < 1e-9

    def test_entropy_of_maximally_mixed(self):
        for d in (2, 3, 8):
            assert abs(von_neumann_entropy(maximally_mixed(d, "X")) - np.log2(d)) < 1e-12

    def test_binary_entropy_value(self):
        rho = DensityOperator(SystemLayout.of(("X", 2)), np.diag([0.9, 0.1]))
        s = von_neumann_entropy(rho)
        assert abs(s - 0.468996) < 1e-5
        assert abs(s - H_09) < 1e-12


class TestMutualInformation:
    def test_maximally_entangled_pair(self):
        bell = maximally_entangled(2, ("C", "A"))
        assert abs(mutual_information(bell, ["C"], ["A"]) - 2.0) < 1e-9

    def test_ghz_conditional(self):
        # GHZ over C, B, R with trivial A: S(CB) = S(RB) = S(B) = 1, S(CRB) = 0.
        ghz = preset_state("ghz-CBR")
        cmi = conditional_mutual_information(ghz, ["C"], ["R"], ["B"])
        assert abs(cmi - 1.0) < 1e-9

    def test_strong_subadditivity_sweep(self):
        for tag in range(50):
            phi = random_pure_state(FOUR_QUBITS, SeededStream(7).derive(tag))
            assert conditional_mutual_information(phi, ["C"], ["R"], ["B"]) >= -1e-9
            assert conditional_mutual_information(phi, ["A"], ["B"], ["C"]) >= -1e-9

    def test_overlapping_sets_rejected(self):
        phi = random_pure_state(FOUR_QUBITS, SeededStream(8))
        with pytest.raises(LayoutError):
            mutual_information(phi, ["C"], ["C"])
        with pytest.raises(LayoutError):
            conditional_mutual_information(phi, ["C"], ["A"], ["C"])


class TestResourceRates:
    @pytest.mark.parametrize(
        "preset,expected",
        [("bell-CA", (0.0, 1.0, 0.0)), ("bell-CR", (1.0, 0.0, 0.0)), ("bell-CB", (0.0, 0.0, 1.0))],
    )
    def test_preset_trio(self, preset, expected):
        rates = resource_rates(preset_state(preset), PRESET_ROLES)
        got = (rates.qubits, rates.ebits_consumed, rates.ebits_distilled)
        np.testing.assert_allclose(got, expected, atol=1e-9)

    def test_net_rate_identity_exact(self):
        for tag in range(20):
            phi = random_pure_state(FOUR_QUBITS, SeededStream(9).derive(tag))
            rates = resource_rates(phi, PRESET_ROLES)
            assert rates.net_ebits == rates.ebits_consumed - rates.ebits_distilled

    def test_missing_role_rejected(self):
        phi = random_pure_state(FOUR_QUBITS, SeededStream(10))
        with pytest.raises(LayoutError):
            resource_rates(phi, {"C": "C", "A": "A", "B": "B", "R": "A"})

    def test_rate_swap_under_ab_exchange(self):
        for tag in range(10):
            phi = random_pure_state(FOUR_QUBITS, SeededStream(11).derive(tag))
            fwd = resource_rates(phi, PRESET_ROLES)
            swapped = resource_rates(phi, {"C": "C", "A": "B", "B": "A", "R": "R"})
            assert abs(fwd.qubits - swapped.qubits) < 1e-9
            assert abs(fwd.ebits_consumed - swapped.ebits_distilled) < 1e-9
            assert abs(fwd.ebits_distilled - swapped.ebits_consumed) < 1e-9

    def test_negative_rate_rejected(self):
        with pytest.raises(Exception):
            ResourceRates(qubits=-1.0, ebits_consumed=0.0, ebits_distilled=0.0)


class TestGlobalPurityIdentities:
    def test_complement_symmetry(self):
        for tag in range(20):
            phi = random_pure_state(FOUR_QUBITS, SeededStream(12).derive(tag))
            for subset, complement in [(["C"], ["A", "B", "R"]), (["C", "B"], ["A", "R"])]:
                assert abs(marginal_entropy(phi, subset) - marginal_entropy(phi, complement)) < 1e-9

    def test_qubit_rate_exchange_symmetry(self):
        # I(C;R|B) = I(C;R|A) on globally pure states.
        for tag in range(20):
            phi = random_pure_state(FOUR_QUBITS, SeededStream(13).derive(tag))
            a = conditional_mutual_information(phi, ["C"], ["R"], ["B"])
            b = conditional_mutual_information(phi, ["C"], ["R"], ["A"])
            assert abs(a - b) < 1e-9

    def test_product_state_all_rates_zero(self):
        rates = resource_rates(preset_state("product"), PRESET_ROLES)
        np.testing.assert_allclose(
            [rates.qubits, rates.ebits_consumed, rates.ebits_distilled], [0, 0, 0], atol=1e-9
        )
