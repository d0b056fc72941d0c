"""Seeded random algebra elements for audits and tests."""

from __future__ import annotations

import numpy as np

from .core import Observable, PseudoObservable


def random_matrix(rng: np.random.Generator, dim: int) -> PseudoObservable:
    e = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return PseudoObservable(e)


def random_hermitian(rng: np.random.Generator, dim: int) -> Observable:
    e = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return Observable((e + e.conj().T) / 2)


def random_unitary(rng: np.random.Generator, dim: int) -> PseudoObservable:
    """Haar-distributed unitary via QR of a Ginibre matrix."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return PseudoObservable(q)


def random_hermitian_with_spectrum(rng: np.random.Generator, dim: int,
                                   low: float, high: float) -> Observable:
    """Random Hermitian with eigenvalues drawn uniformly from [low, high]."""
    u = random_unitary(rng, dim).entries
    w = rng.uniform(low, high, size=dim)
    return Observable((u * w) @ u.conj().T)


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> Observable:
    """Random mixed state: convex mix of random pure states."""
    rank = dim if rank is None else rank
    weights = rng.uniform(0.1, 1.0, size=rank)
    weights /= weights.sum()
    acc = np.zeros((dim, dim), dtype=complex)
    for w in weights:
        v = random_state(rng, dim)
        acc += w * np.outer(v, v.conj())
    return Observable(acc)
