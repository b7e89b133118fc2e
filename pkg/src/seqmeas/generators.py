"""Random problem instances for stress tests and the equivalence verifier.

Observables are built from a Haar-random eigenbasis and well-separated
eigenvalues drawn from a small integer set, so degenerate blocks can be
forced deliberately and never arise by numerical accident.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .hilbert import Evolution, Observable, spectral_decompose
from .paths import Schedule


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (z + z.conj().T)


def _random_multiplicities(
    rng: np.random.Generator, dim: int, force_degenerate: bool
) -> list[int]:
    if dim == 1:
        return [1]
    if force_degenerate and dim >= 2:
        blocks = int(rng.integers(1, dim))  # < dim blocks => at least one repeat
    else:
        blocks = int(rng.integers(1, dim + 1))
    cuts = sorted(rng.choice(np.arange(1, dim), size=blocks - 1, replace=False))
    edges = [0, *cuts, dim]
    return [b - a for a, b in zip(edges[:-1], edges[1:])]


def random_observable(
    rng: np.random.Generator,
    dim: int,
    *,
    force_degenerate: bool = False,
    nondegenerate: bool = False,
) -> Observable:
    """Random Hermitian observable with integer-separated eigenvalues.

    ``force_degenerate`` guarantees at least one multiplicity above one
    (for dim >= 2); ``nondegenerate`` forces all multiplicities to one.
    """
    if nondegenerate and force_degenerate:
        raise ValidationError("cannot force both degenerate and non-degenerate")
    if nondegenerate:
        mults = [1] * dim
    else:
        mults = _random_multiplicities(rng, dim, force_degenerate)
    n_blocks = len(mults)
    values = np.sort(rng.choice(np.arange(-4, 5), size=n_blocks, replace=False))
    basis = random_unitary(rng, dim)
    diag = np.concatenate([[v] * m for v, m in zip(values, mults)])
    matrix = (basis * diag) @ basis.conj().T
    return spectral_decompose(matrix)


def random_schedule(
    rng: np.random.Generator,
    dim: int,
    levels: int,
    *,
    hamiltonian_scale: float = 1.0,
    force_degenerate: bool = True,
) -> Schedule:
    """Random schedule with L = ``levels`` intervals.

    The preparing observable is non-degenerate; later ones carry forced
    degeneracies (where the dimension allows) so that interference inside
    merged blocks is actually exercised.
    """
    if levels < 1:
        raise ValidationError("levels must be >= 1")
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.3, 1.0, size=levels))])
    observables = [random_observable(rng, dim, nondegenerate=True)]
    for _ in range(levels):
        observables.append(
            random_observable(
                rng, dim, force_degenerate=force_degenerate and dim >= 2
            )
        )
    evolution = Evolution(random_hermitian(rng, dim, scale=hamiltonian_scale))
    prep = int(rng.integers(0, dim))
    return Schedule(
        times=tuple(times),
        observables=tuple(observables),
        evolution=evolution,
        prep_index=prep,
    )
