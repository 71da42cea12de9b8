"""Generalized decoupling: bounds, residuals, Haar averages, unitary search.

The bound for keeping C1 of C = C1 C2 C3 while tracing C2 C3 out of U.rho is

    alpha = d_C * d_side * Tr(rho^2) / (d_C2 * d_C3)^2

and symmetrically for keeping C2 (denominator d_C1 * d_C3).  A Haar-averaged
squared residual never exceeds the bound, which Markov-translates into more
than half of all unitaries satisfying residual^2 <= 2 * bound; the search
below exploits exactly that.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .metrics import hermitian_trace_distance, purity
from .qstate import (
    DensityOperator,
    LayoutError,
    LinearMap,
    matrix_partial_trace,
)
from .sampling import SeededStream, as_generator, haar_unitary_matrix

DEFAULT_SEARCH_ITERS = 64

KEEP_C1 = "C1"
KEEP_C2 = "C2"


@dataclass(frozen=True)
class CutPartition:
    """Factorization d_C = d1 * d2 * d3 of the transfer register."""

    d1: int
    d2: int
    d3: int

    def __post_init__(self) -> None:
        for d in (self.d1, self.d2, self.d3):
            if d < 1:
                raise LayoutError(f"partition factors must be >= 1, got {self}")

    @property
    def total(self) -> int:
        return self.d1 * self.d2 * self.d3

    @property
    def d23(self) -> int:
        return self.d2 * self.d3

    @property
    def d13(self) -> int:
        return self.d1 * self.d3

    def check_total(self, d_c: int) -> None:
        if self.total != d_c:
            raise LayoutError(f"partition {self} does not factor d_C = {d_c}")


@dataclass(frozen=True)
class DecouplingBounds:
    alpha: float
    beta: float


@dataclass(frozen=True)
class DecouplingResiduals:
    """Measured trace-distance residuals for the two decoupling conditions."""

    eps1: float  # keep C1, trace C2 C3
    eps2: float  # keep C2, trace C1 C3
    accepted: bool

    def __post_init__(self) -> None:
        for eps in (self.eps1, self.eps2):
            if not -1e-12 <= eps <= 2.0 + 1e-9:
                raise ValueError(f"residual {eps} outside the trace-distance range [0, 2]")


def single_bound(rho: DensityOperator, p: CutPartition, keep: str) -> float:
    """The Haar-average bound for one decoupling condition on ``rho``.

    ``rho``'s first subsystem is the C register (dimension p.total); the rest
    is the side system that must stay intact.
    """
    d_c = rho.layout.dims[0]
    p.check_total(d_c)
    d_side = rho.layout.total_dim // d_c
    traced = p.d23 if keep == KEEP_C1 else p.d13 if keep == KEEP_C2 else None
    if traced is None:
        raise ValueError(f"keep must be {KEEP_C1!r} or {KEEP_C2!r}, got {keep!r}")
    return d_c * d_side * purity(rho) / traced**2


def bounds(omega: DensityOperator, psi: DensityOperator, p: CutPartition) -> DecouplingBounds:
    """Bounds (alpha, beta) for the keep-C1 condition on omega and keep-C2 on psi."""
    if omega.layout.dims[0] != psi.layout.dims[0]:
        raise LayoutError(
            f"C dimensions differ: {omega.layout.dims[0]} vs {psi.layout.dims[0]}"
        )
    return DecouplingBounds(
        alpha=single_bound(omega, p, KEEP_C1),
        beta=single_bound(psi, p, KEEP_C2),
    )


def _conjugate_first_axis(mat: np.ndarray, d_c: int, u: np.ndarray) -> np.ndarray:
    """U . rho on the first tensor factor of a (d_c * r) x (d_c * r) matrix."""
    r = mat.shape[0] // d_c
    four = mat.reshape(d_c, r, d_c, r)
    out = np.einsum("ab,bxdy,cd->axcy", u, four, u.conj(), optimize=True)
    return out.reshape(mat.shape)


def _u_matrix(u: "LinearMap | np.ndarray") -> np.ndarray:
    return u.matrix if isinstance(u, LinearMap) else np.asarray(u)


def residual(
    rho: DensityOperator, u: "LinearMap | np.ndarray", p: CutPartition, keep: str
) -> float:
    """Trace distance between the kept factor of U.rho and its decoupled target.

    keep C1: || Tr_{C2 C3}[U.rho] - pi_{C1} (x) rho_side ||_1, and symmetrically
    for C2.  ``rho`` lives on C (x) side with C first.
    """
    d_c = rho.layout.dims[0]
    p.check_total(d_c)
    u_mat = _u_matrix(u)
    if u_mat.shape != (d_c, d_c):
        raise LayoutError(f"unitary shape {u_mat.shape} does not match d_C = {d_c}")
    side_dims = rho.layout.dims[1:]
    rotated = _conjugate_first_axis(rho.matrix, d_c, u_mat)

    split_dims = (p.d1, p.d2, p.d3) + side_dims
    n_side = len(side_dims)
    keep_axis = {KEEP_C1: 0, KEEP_C2: 1}.get(keep)
    if keep_axis is None:
        raise ValueError(f"keep must be {KEEP_C1!r} or {KEEP_C2!r}, got {keep!r}")
    keep_axes = [keep_axis] + list(range(3, 3 + n_side))
    reduced = matrix_partial_trace(rotated, split_dims, keep_axes)

    d_kept = p.d1 if keep == KEEP_C1 else p.d2
    rho_side = matrix_partial_trace(rho.matrix, (d_c,) + side_dims, list(range(1, 1 + n_side)))
    target = np.kron(np.eye(d_kept) / d_kept, rho_side)
    return hermitian_trace_distance(reduced, target)


@dataclass(frozen=True)
class HaarAverageCheck:
    """Monte Carlo estimate of the averaged squared residual against its bound."""

    mean_square: float
    std_error: float
    bound: float
    passed: bool
    n_samples: int


def haar_average_check(
    rho: DensityOperator,
    p: CutPartition,
    keep: str,
    n_samples: int,
    stream: "SeededStream | np.random.Generator",
) -> HaarAverageCheck:
    """Estimate E_U[residual^2] over Haar unitaries and compare with the bound.

    Passes when mean <= bound + 3 * standard error.
    """
    if n_samples < 100:
        raise ValueError(f"need at least 100 samples, got {n_samples}")
    rng = as_generator(stream)
    d_c = rho.layout.dims[0]
    sq = np.empty(n_samples)
    for i in range(n_samples):
        u = haar_unitary_matrix(d_c, rng)
        sq[i] = residual(rho, u, p, keep) ** 2
    mean = float(sq.mean())
    se = float(sq.std(ddof=1) / np.sqrt(n_samples))
    bound_value = single_bound(rho, p, keep)
    return HaarAverageCheck(
        mean_square=mean,
        std_error=se,
        bound=bound_value,
        passed=mean <= bound_value + 3.0 * se,
        n_samples=n_samples,
    )


def condition_met(eps: float, bound: float) -> bool:
    """One decoupling condition: eps^2 <= 2 * bound.

    A vacuous bound (2 * bound >= 4) is always met because trace distances
    cannot exceed 2.
    """
    return eps * eps <= 2.0 * bound


def search_unitary(
    d_c: int,
    residuals_of: Callable[[np.ndarray], tuple[float, float]],
    alpha: float,
    beta: float,
    max_iters: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, DecouplingResiduals, int]:
    """Sample Haar unitaries until both conditions hold, else best-so-far.

    The best-so-far objective max(eps1^2/(2 alpha), eps2^2/(2 beta)) puts the
    two unlike bounds on the same scale.  Deterministic given ``rng``.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    best_u: np.ndarray | None = None
    best_res: DecouplingResiduals | None = None
    best_obj = np.inf
    for i in range(1, max_iters + 1):
        u = haar_unitary_matrix(d_c, rng)
        eps1, eps2 = residuals_of(u)
        if condition_met(eps1, alpha) and condition_met(eps2, beta):
            return u, DecouplingResiduals(eps1, eps2, accepted=True), i
        obj = max(eps1**2 / (2.0 * alpha), eps2**2 / (2.0 * beta))
        if obj < best_obj:
            best_u, best_res, best_obj = u, DecouplingResiduals(eps1, eps2, accepted=False), i
    assert best_u is not None and best_res is not None
    return best_u, best_res, max_iters


def find_simultaneous_unitary(
    omega: DensityOperator,
    psi: DensityOperator,
    p: CutPartition,
    max_iters: int = DEFAULT_SEARCH_ITERS,
    stream: "SeededStream | np.random.Generator | None" = None,
) -> tuple[LinearMap, DecouplingResiduals, int]:
    """Find one unitary on C satisfying both decoupling conditions at once.

    Condition 1 keeps C1 of ``omega`` (bound alpha); condition 2 keeps C2 of
    ``psi`` (bound beta).  Non-acceptance within the budget returns the
    best-so-far candidate with ``accepted=False``; downstream constructions
    only need the measured residuals.
    """
    if stream is None:
        stream = SeededStream(0)
    rng = as_generator(stream)
    b = bounds(omega, psi, p)
    d_c = omega.layout.dims[0]

    def residuals_of(u: np.ndarray) -> tuple[float, float]:
        return (residual(omega, u, p, KEEP_C1), residual(psi, u, p, KEEP_C2))

    u, res, iters = search_unitary(d_c, residuals_of, b.alpha, b.beta, max_iters, rng)
    from .qstate import SystemLayout

    layout = SystemLayout.of(("C", d_c))
    return LinearMap(layout, layout, u, kind="unitary"), res, iters
