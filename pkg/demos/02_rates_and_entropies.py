"""Resource rates of redistribution: Q qubits, E1 consumed, E2 distilled.

The rates come from entropies of the shared pure state: Q = I(C;R|B)/2,
E1 = I(A;C)/2, E2 = I(B;C)/2, net E = E1 - E2.  The three Bell presets pin
the three corners; a random state lands in between.

Run:  python demos/02_rates_and_entropies.py
"""

from qsr import SeededStream, conditional_mutual_information, mutual_information, resource_rates
from qsr.presets import PRESET_ROLES, preset_state

print(f"{'preset':<14} {'Q':>8} {'E1':>8} {'E2':>8} {'net':>8}")
for name in ("bell-CA", "bell-CR", "bell-CB", "ghz-CBR", "product", "tilted-CR", "random"):
    phi = preset_state(name, stream=SeededStream(42))
    r = resource_rates(phi, PRESET_ROLES)
    print(f"{name:<14} {r.qubits:>8.4f} {r.ebits_consumed:>8.4f} "
          f"{r.ebits_distilled:>8.4f} {r.net_ebits:>8.4f}")

print("\nSymmetries on a random 4-qubit state:")
phi = preset_state("random", stream=SeededStream(7))
q_b = conditional_mutual_information(phi, ["C"], ["R"], ["B"])
q_a = conditional_mutual_information(phi, ["C"], ["R"], ["A"])
print(f"  I(C;R|B) = {q_b:.10f}")
print(f"  I(C;R|A) = {q_a:.10f}   (equal on globally pure states)")
print(f"  I(A;C)   = {mutual_information(phi, ['A'], ['C']):.10f}")

swapped = resource_rates(phi, {"C": "C", "A": "B", "B": "A", "R": "R"})
straight = resource_rates(phi, PRESET_ROLES)
print("\nSwapping the A and B roles swaps E1 and E2 and fixes Q:")
print(f"  straight: Q={straight.qubits:.4f} E1={straight.ebits_consumed:.4f} E2={straight.ebits_distilled:.4f}")
print(f"  swapped : Q={swapped.qubits:.4f} E1={swapped.ebits_consumed:.4f} E2={swapped.ebits_distilled:.4f}")
