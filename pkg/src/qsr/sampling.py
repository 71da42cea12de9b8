"""Reproducible randomness: Haar unitaries, random states, seeded streams.

Streams are counter based (Philox keyed by (seed, stream_index)), so the same
pair always reproduces identical draws bit-exactly and distinct stream indices
never share output.  The generator algorithm name is part of the report
format so archived experiments stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import LayoutError, LinearMap, PureState, SystemLayout

GENERATOR_VERSION = "philox4x64/qsr-1"

_DERIVE_MIX = 0x9E3779B97F4A7C15  # golden-ratio odd constant keeps derived indices spread out


@dataclass(frozen=True)
class SeededStream:
    """A named point in the global randomness space.

    Value-like: fork with :meth:`derive`, never share a live generator between
    logical uses.  ``generator()`` always restarts the stream from the top.
    """

    seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.seed & 0xFFFFFFFFFFFFFFFF, self.stream_index & 0xFFFFFFFFFFFFFFFF],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))

    def derive(self, tag: int) -> "SeededStream":
        """Deterministic child stream for sub-tasks/workers."""
        mixed = (self.stream_index * _DERIVE_MIX + tag + 1) & 0xFFFFFFFFFFFFFFFF
        return SeededStream(self.seed, mixed)


def as_generator(stream: "SeededStream | np.random.Generator") -> np.random.Generator:
    if isinstance(stream, SeededStream):
        return stream.generator()
    return stream


def ginibre(d_out: int, d_in: int, rng: np.random.Generator) -> np.ndarray:
    """Complex standard Gaussian matrix."""
    return (rng.standard_normal((d_out, d_in)) + 1j * rng.standard_normal((d_out, d_in))) / np.sqrt(2.0)


def haar_unitary_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed d x d unitary via QR of a Ginibre matrix.

    The columns of Q are rescaled by the phases of R's diagonal; without this
    correction the QR output is not Haar distributed.
    """
    if d < 1:
        raise LayoutError(f"dimension {d} < 1")
    z = ginibre(d, d, rng)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases


def haar_unitary(
    d: int, stream: "SeededStream | np.random.Generator", label: str = "U"
) -> LinearMap:
    """Sample one Haar unitary as a LinearMap on a single subsystem."""
    u = haar_unitary_matrix(d, as_generator(stream))
    layout = SystemLayout.of((label, d))
    return LinearMap(layout, layout, u, kind="unitary")


def random_pure_state(
    layout: SystemLayout, stream: "SeededStream | np.random.Generator"
) -> PureState:
    """Haar-random pure state over the layout (normalized Gaussian vector)."""
    rng = as_generator(stream)
    v = ginibre(layout.total_dim, 1, rng).reshape(-1)
    return PureState(layout, v / np.linalg.norm(v))


def random_density(
    layout: SystemLayout, rank: int, stream: "SeededStream | np.random.Generator"
) -> "DensityOperator":
    """Wishart-style random density operator of the given rank."""
    from .qstate import DensityOperator

    d = layout.total_dim
    if not 1 <= rank <= d:
        raise LayoutError(f"rank {rank} out of range [1, {d}]")
    rng = as_generator(stream)
    g = ginibre(d, rank, rng)
    m = g @ g.conj().T
    return DensityOperator(layout, m / m.trace().real)
