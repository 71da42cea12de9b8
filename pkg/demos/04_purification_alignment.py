"""Aligning purifications: the isometry behind the protocol's encoder/decoder.

Two pure states sharing subsystem A whose marginals are eps-close in trace
distance can be mapped onto each other by an isometry on the purifying side,
with error at most 2 sqrt(eps).  The polar construction achieves the best
possible overlap, the Uhlmann fidelity of the marginals.

Run:  python demos/04_purification_alignment.py
"""

import numpy as np

from qsr import PureState, SeededStream, random_pure_state, uhlmann_isometry
from qsr.qstate import SystemLayout

mu = random_pure_state(SystemLayout.of(("A", 3), ("B", 2)), SeededStream(10))

print(f"{'noise':>7} {'eps_in':>10} {'overlap':>10} {'dist_out':>10} {'2 sqrt(eps)':>12}")
rng = SeededStream(11).generator()
for noise in (0.0, 0.02, 0.1, 0.3):
    embedded = np.zeros((3, 4), dtype=complex)
    embedded[:, :2] = mu.amplitudes.reshape(3, 2)
    vec = embedded.reshape(-1) + noise * (rng.standard_normal(12) + 1j * rng.standard_normal(12))
    nu = PureState(SystemLayout.of(("A", 3), ("C", 4)), vec / np.linalg.norm(vec))

    res = uhlmann_isometry(mu, nu, ["A"])
    print(f"{noise:>7.2f} {res.epsilon_in:>10.4f} {res.achieved_overlap:>10.6f} "
          f"{res.distance_out:>10.6f} {2 * np.sqrt(res.epsilon_in):>12.6f}")

print("\nThe achieved distance always satisfies dist = 2 sqrt(1 - overlap^2) and the")
print("guarantee dist <= 2 sqrt(eps); the isometry K obeys K^dag K = I exactly.")
