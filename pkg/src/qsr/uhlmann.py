"""Alignment of two purifications sharing a subsystem.

Given pure states mu on S (x) B and nu on S (x) C with d_B <= d_C, the polar
factor of the cross operator X[c,b] = sum_s <s,c|nu>* <s,b|mu> is the isometry
K: B -> C maximizing |<nu|(I (x) K)|mu>|.  The maximum equals the Uhlmann
fidelity F(mu_S, nu_S), so when the shared marginals are eps-close in trace
distance the aligned states are within 2 sqrt(eps).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import hermitian_trace_distance, pure_trace_distance
from .qstate import (
    InvariantViolation,
    LayoutError,
    LinearMap,
    PureState,
    apply,
    permute,
    vector_partial_trace,
)

_NULL_SPACE_CUTOFF = 1e-12


def _shared_split(state: PureState, shared: list[str]) -> tuple[list[str], list[str]]:
    """(shared labels in this state's order, own labels in this state's order)."""
    labels = state.layout.labels
    missing = set(shared) - set(labels)
    if missing:
        raise LayoutError(f"shared labels {sorted(missing)} absent from layout {labels}")
    own = [lab for lab in labels if lab not in set(shared)]
    shared_in_order = [lab for lab in labels if lab in set(shared)]
    return shared_in_order, own


def cross_operator(mu: PureState, nu: PureState, shared: "list[str] | tuple[str, ...]") -> np.ndarray:
    """Cross operator X (d_C x d_B) with X[c,b] = sum_s <s,c|nu>* <s,b|mu>.

    ``s`` runs over the shared subsystems (taken in mu's layout order for both
    states), ``b`` over mu's remaining subsystems, ``c`` over nu's remaining
    subsystems.  Requires d_B <= d_C; larger mu-side purifiers must be
    embedded by the caller first.
    """
    shared = list(shared)
    mu_shared, mu_own = _shared_split(mu, shared)
    _, nu_own = _shared_split(nu, shared)
    for lab in mu_shared:
        if mu.layout.dim_of(lab) != nu.layout.dim_of(lab):
            raise LayoutError(
                f"shared label {lab!r} has dims {mu.layout.dim_of(lab)} vs {nu.layout.dim_of(lab)}"
            )
    d_b = mu.layout.dim_of_set(mu_own)
    d_c = nu.layout.dim_of_set(nu_own)
    if d_b > d_c:
        raise LayoutError(f"purifier dim {d_b} exceeds target dim {d_c}; embed first")

    mu_mat = permute(mu, mu_shared + mu_own).amplitudes.reshape(
        mu.layout.dim_of_set(mu_shared), d_b
    )
    nu_mat = permute(nu, mu_shared + nu_own).amplitudes.reshape(
        nu.layout.dim_of_set(mu_shared), d_c
    )
    return nu_mat.conj().T @ mu_mat


def _complete_columns(existing: np.ndarray, count: int) -> np.ndarray:
    """Orthonormal columns completing ``existing``, built from the standard basis.

    QR of [existing | selected basis columns], choosing the basis vectors
    least represented in the existing span; deterministic, and O(d (k+m)^2)
    instead of scanning the whole basis per column.  Falls back to pivoted
    Gram-Schmidt if the selection happens to be rank deficient.
    """
    d, k = existing.shape
    row_mass = np.sum(np.abs(existing) ** 2, axis=1)
    chosen = np.argsort(row_mass, kind="stable")[:count]
    m = np.zeros((d, k + count), dtype=complex)
    m[:, :k] = existing
    m[chosen, np.arange(k, k + count)] = 1.0
    q, r = np.linalg.qr(m)
    if k + count == 0 or np.abs(np.diagonal(r))[k:].min() > 1e-9:
        return q[:, k:]
    return _complete_columns_pivoted(existing, count)


def _complete_columns_pivoted(existing: np.ndarray, count: int) -> np.ndarray:
    """Slow exhaustive pivoted Gram-Schmidt; only reached on degenerate inputs."""
    d = existing.shape[0]
    cols = [existing[:, j] for j in range(existing.shape[1])]
    out = []
    for _ in range(count):
        best_vec = None
        best_norm = -1.0
        for j in range(d):
            v = np.zeros(d, dtype=complex)
            v[j] = 1.0
            for c in cols:
                v -= np.vdot(c, v) * c
            n = float(np.linalg.norm(v))
            if n > best_norm:
                best_norm, best_vec = n, v
        if best_vec is None or best_norm < 1e-7:
            raise InvariantViolation("failed to complete orthonormal columns")
        best_vec = best_vec / best_norm
        cols.append(best_vec)
        out.append(best_vec)
    return np.stack(out, axis=1)


@dataclass(frozen=True)
class UhlmannResult:
    """Constructed isometry plus the overlap/distance bookkeeping of one alignment."""

    isometry: LinearMap
    achieved_overlap: float
    epsilon_in: float
    distance_out: float

    def __post_init__(self) -> None:
        if not -1e-12 <= self.achieved_overlap <= 1.0 + 1e-9:
            raise InvariantViolation(f"overlap {self.achieved_overlap} outside [0, 1]")
        slack = 2.0 * np.sqrt(max(self.epsilon_in, 0.0)) + 1e-8
        if self.distance_out > slack:
            raise InvariantViolation(
                f"distance_out {self.distance_out} violates the 2*sqrt(eps) guarantee {slack}"
            )


def uhlmann_isometry(
    mu: PureState, nu: PureState, shared: "list[str] | tuple[str, ...]"
) -> UhlmannResult:
    """Construct the overlap-maximizing isometry from mu's purifier to nu's.

    The polar factor of the cross operator is completed deterministically on
    any null space; the global phase is fixed so the achieved overlap
    <nu|(I (x) K)|mu> is real nonnegative (it equals the Uhlmann fidelity of
    the shared marginals).
    """
    shared = list(shared)
    x = cross_operator(mu, nu, shared)
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    rank = int(np.sum(s > _NULL_SPACE_CUTOFF))
    d_c, d_b = x.shape
    if rank == d_b:
        k = (u @ vh).conj()
    else:
        head = u[:, :rank].conj()
        tail = _complete_columns(head, d_b - rank)
        k = np.hstack([head, tail]) @ vh.conj()
    overlap = float(s.sum())

    mu_shared, mu_own = _shared_split(mu, shared)
    _, nu_own = _shared_split(nu, shared)
    k_map = LinearMap(
        mu.layout.restrict(mu_own), nu.layout.restrict(nu_own), k, kind="isometry"
    )

    mu_marg = vector_partial_trace(mu.amplitudes, mu.layout.dims, mu.layout.axes(mu_shared))
    nu_marg = vector_partial_trace(nu.amplitudes, nu.layout.dims, nu.layout.axes(mu_shared))
    eps_in = hermitian_trace_distance(mu_marg, nu_marg)

    moved = apply(k_map, mu, targets=mu_own)
    nu_aligned = permute(nu, moved.layout.labels)
    dist_out = pure_trace_distance(moved.amplitudes, nu_aligned.amplitudes)
    return UhlmannResult(
        isometry=k_map,
        achieved_overlap=overlap,
        epsilon_in=eps_in,
        distance_out=dist_out,
    )
