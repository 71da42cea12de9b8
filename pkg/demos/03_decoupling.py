"""The decoupling engine: bounds, Haar-averaged residuals, joint unitary search.

For omega on C (x) F with C = C1 C2 C3, a random unitary on C followed by
tracing C2 C3 leaves C1 nearly maximally mixed and uncorrelated with F, with
Haar-average squared error at most alpha = d_C d_F Tr(omega^2) / d_{C2 C3}^2.
Markov then says a single draw satisfies eps^2 <= 2 alpha more than half the
time, for two conditions at once some unitary satisfies both.

Run:  python demos/03_decoupling.py
"""

import numpy as np

from qsr import CutPartition, SeededStream, find_simultaneous_unitary, haar_average_check, random_density
from qsr.decoupling import KEEP_C1, KEEP_C2, residual, single_bound
from qsr.qstate import SystemLayout

p = CutPartition(2, 2, 2)
omega = random_density(SystemLayout.of(("C", 8), ("F", 2)), 2, SeededStream(1))
psi = random_density(SystemLayout.of(("C", 8), ("E", 2)), 2, SeededStream(2))

print("== Haar-average check (2000 samples) ==")
chk = haar_average_check(omega, p, KEEP_C1, 2000, SeededStream(3))
print(f"mean eps^2 = {chk.mean_square:.4f} +- {chk.std_error:.4f}   bound alpha = {chk.bound:.4f}"
      f"   -> {'PASS' if chk.passed else 'FAIL'}")

print("\n== acceptance frequency of a single draw ==")
alpha = single_bound(omega, p, KEEP_C1)
rng = SeededStream(4).generator()
hits = 0
n = 500
for _ in range(n):
    u = np.linalg.qr(rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))[0]
    hits += residual(omega, u, p, KEEP_C1) ** 2 <= 2 * alpha
print(f"eps^2 <= 2 alpha on {hits}/{n} draws ({hits / n:.1%}, Markov guarantees > 50%)")

print("\n== simultaneous search ==")
u_map, res, iters = find_simultaneous_unitary(omega, psi, p, max_iters=64, stream=SeededStream(5))
print(f"accepted={res.accepted} after {iters} draw(s): "
      f"eps1 = {res.eps1:.4f} (2 alpha = {2 * alpha:.4f}), "
      f"eps2 = {res.eps2:.4f} (2 beta = {2 * single_bound(psi, p, KEEP_C2):.4f})")
