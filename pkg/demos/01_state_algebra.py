"""Tour of the labeled state algebra: layouts, tensor products, marginals.

Run:  python demos/01_state_algebra.py
"""

import numpy as np

from qsr import (
    DensityOperator,
    SystemLayout,
    maximally_entangled,
    maximally_mixed,
    partial_trace,
    purify,
    split_subsystem,
    tensor,
)
from qsr.qstate import basis_state, reinterpret

print("== layouts and the index convention ==")
layout = SystemLayout.of(("C", 2), ("A", 3))
print(f"layout {layout.labels} dims {layout.dims} total {layout.total_dim}")
ket = tensor(basis_state(SystemLayout.of(("C", 2)), [1]),
             basis_state(SystemLayout.of(("A", 3)), [2]))
print(f"|1>_C (x) |2>_A sits at flat index {np.argmax(np.abs(ket.amplitudes))} "
      f"(mixed radix: 1*3 + 2 = 5, first subsystem most significant)")

print("\n== maximally entangled marginals ==")
bell = maximally_entangled(2, ("C", "A"))
marginal = partial_trace(bell, ["C"])
print("Tr_A |Phi><Phi| =")
print(np.round(marginal.matrix.real, 6))

print("\n== purification ==")
rho = DensityOperator(SystemLayout.of(("X", 2)), np.diag([0.9, 0.1]))
pure = purify(rho, "P")
print(f"purifier dimension = rank = {pure.layout.dim_of('P')}")
back = partial_trace(pure, ["X"])
print(f"marginal reproduces the input to {np.max(np.abs(back.matrix - rho.matrix)):.2e}")

print("\n== splitting a register is free ==")
reg = SystemLayout.of(("C", 8), ("S", 2))
split = split_subsystem(reg, "C", (("C1", 2), ("C2", 2), ("C3", 2)))
print(f"{reg.labels} {reg.dims}  ->  {split.labels} {split.dims}")
psi = tensor(maximally_entangled(2, ("Ca", "Cb")), basis_state(SystemLayout.of(("S", 2)), [0]))
print("amplitudes unchanged under reinterpretation:",
      np.array_equal(psi.amplitudes,
                     reinterpret(psi, split_subsystem(psi.layout, "Ca", (("u", 1), ("v", 2), ("w", 1)))).amplitudes))

print("\n== maximally mixed states compose ==")
print("purity of pi_2 (x) pi_2:",
      float(np.sum(np.abs(tensor(maximally_mixed(2, "X"), maximally_mixed(2, "Y")).matrix) ** 2)))
