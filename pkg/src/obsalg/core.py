"""Value types and primitive operations of the pseudo-observable algebra.

Elements are dense complex square matrices.  Observables are the Hermitian
elements; projector bases carry spectral decompositions; functions of
observables are evaluated by spectral calculus.  Every type is an immutable
value and every operation a pure function, so unrestricted concurrent use is
safe.

Tolerances are stated once here and reused by all other modules:

* ``TOL_HERM``   -- Hermiticity, relative to the largest entry magnitude.
* ``TOL_RECON``  -- reconstruction, closure and product residuals.
* ``GROUPING_TOL`` -- eigenvalue clustering, relative to max(1, spectral radius).
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence, Union

import numpy as np

TOL_HERM = 1e-10
TOL_RECON = 1e-9
GROUPING_TOL = 1e-9

Scalar = Union[int, float, complex]


class AlgebraError(ValueError):
    """A precondition or invariant of the algebra is violated."""


class DimensionMismatch(AlgebraError):
    """Operands live in different dimensions."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _coerce_entries(entries) -> np.ndarray:
    arr = np.array(getattr(entries, "entries", entries), dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise AlgebraError(f"entries must form a square matrix, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise AlgebraError(f"dimension must be at least 2, got {arr.shape[0]}")
    return _frozen(arr)


def opnorm(m) -> float:
    """Spectral norm; accepts raw arrays and algebra elements."""
    return float(np.linalg.norm(np.asarray(getattr(m, "entries", m)), 2))


def _check_same_dim(a, b) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension mismatch: {a.dim} vs {b.dim}")


def _merge_tags(a: str | None, b: str | None) -> str | None:
    return a if a == b else None


def _coerce_labels(labels, count: int):
    if labels is None:
        return None
    labels = tuple(float(x) for x in labels)
    if len(labels) != count:
        raise AlgebraError("labels must match projectors one to one")
    return labels


class PseudoObservable:
    """Generic element of the algebra: an immutable complex d x d matrix.

    ``+``/``-`` are elementwise, ``*`` takes a scalar, ``@`` is the algebra
    product.  ``unit_tag`` is advisory metadata only; arithmetic never blocks
    on it (sums keep a tag only when both operands carry the same one,
    products drop it).
    """

    __slots__ = ("entries", "unit_tag")

    def __init__(self, entries, unit_tag: str | None = None):
        object.__setattr__(self, "entries", _coerce_entries(entries))
        object.__setattr__(self, "unit_tag", unit_tag)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int, unit_tag: str | None = None):
        return cls(np.eye(dim, dtype=complex), unit_tag)

    @classmethod
    def zeros(cls, dim: int, unit_tag: str | None = None):
        return cls(np.zeros((dim, dim), dtype=complex), unit_tag)

    def dagger(self) -> "PseudoObservable":
        return PseudoObservable(self.entries.conj().T, self.unit_tag)

    def is_hermitian(self, tol: float = TOL_HERM) -> bool:
        return hermiticity_defect(self.entries) <= tol

    def norm(self) -> float:
        return opnorm(self.entries)

    def distance(self, other: "PseudoObservable") -> float:
        _check_same_dim(self, other)
        return opnorm(self.entries - other.entries)

    def __add__(self, other):
        _check_same_dim(self, other)
        return PseudoObservable(self.entries + other.entries,
                                _merge_tags(self.unit_tag, other.unit_tag))

    def __sub__(self, other):
        _check_same_dim(self, other)
        return PseudoObservable(self.entries - other.entries,
                                _merge_tags(self.unit_tag, other.unit_tag))

    def __neg__(self):
        return PseudoObservable(-self.entries, self.unit_tag)

    def __mul__(self, scalar: Scalar):
        return PseudoObservable(self.entries * complex(scalar), self.unit_tag)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Scalar):
        return PseudoObservable(self.entries / complex(scalar), self.unit_tag)

    def __matmul__(self, other):
        _check_same_dim(self, other)
        return PseudoObservable(self.entries @ other.entries)

    def __repr__(self):
        tag = f", unit_tag={self.unit_tag!r}" if self.unit_tag else ""
        return f"{type(self).__name__}(dim={self.dim}{tag})"


def hermiticity_defect(entries: np.ndarray) -> float:
    """max |E - E^dagger| relative to max(1, max |E|)."""
    arr = np.asarray(entries)
    scale = max(1.0, float(np.max(np.abs(arr))) if arr.size else 0.0)
    return float(np.max(np.abs(arr - arr.conj().T))) / scale


class Observable(PseudoObservable):
    """Hermitian element; construction validates Hermiticity at ``TOL_HERM``."""

    __slots__ = ()

    def __init__(self, entries, unit_tag: str | None = None, tol: float = TOL_HERM):
        super().__init__(entries, unit_tag)
        defect = hermiticity_defect(self.entries)
        if defect > tol:
            raise AlgebraError(
                f"matrix is not Hermitian: relative defect {defect:.3e} > {tol:.1e}")

    def dagger(self) -> "Observable":
        return Observable(self.entries.conj().T, self.unit_tag)


def as_observable(p: PseudoObservable, tol: float = TOL_HERM) -> Observable:
    """View an algebra element as an Observable, validating Hermiticity."""
    if isinstance(p, Observable):
        return p
    return Observable(p.entries, p.unit_tag, tol=tol)


def _wrap_like(entries: np.ndarray, template: PseudoObservable) -> PseudoObservable:
    """Return an Observable when the result is Hermitian, else a plain element."""
    if hermiticity_defect(entries) <= TOL_HERM:
        return Observable(entries, template.unit_tag)
    return PseudoObservable(entries, template.unit_tag)


# ---------------------------------------------------------------------------
# primitive operations
# ---------------------------------------------------------------------------

def dagger(p: PseudoObservable) -> PseudoObservable:
    """Hermitian transposition; an exact involution."""
    return p.dagger()


def real_part(p: PseudoObservable) -> Observable:
    """(P + P^dagger)/2, the Hermitian real part."""
    e = p.entries
    return Observable((e + e.conj().T) / 2, p.unit_tag)


def imag_part(p: PseudoObservable) -> Observable:
    """(P - P^dagger)/(2i), the Hermitian imaginary part; P = R + iI."""
    e = p.entries
    return Observable((e - e.conj().T) / 2j, p.unit_tag)


def trace(p: PseudoObservable) -> complex:
    return complex(np.trace(p.entries))


def inner_product(x: PseudoObservable, y: PseudoObservable) -> complex:
    """<X|Y> = tr(X^dagger Y); conjugate-symmetric, positive on X = Y != 0."""
    _check_same_dim(x, y)
    return complex(np.vdot(x.entries, y.entries))


def commutator(a: PseudoObservable, b: PseudoObservable) -> PseudoObservable:
    _check_same_dim(a, b)
    return PseudoObservable(a.entries @ b.entries - b.entries @ a.entries)


def is_compatible(a: PseudoObservable, b: PseudoObservable,
                  tol: float = TOL_RECON) -> bool:
    """True iff ||[A,B]|| <= tol * ||A|| * ||B||."""
    return opnorm(commutator(a, b)) <= tol * a.norm() * b.norm()


# ---------------------------------------------------------------------------
# projector and dyad bases
# ---------------------------------------------------------------------------

class ProjectorBasis:
    """Complete family of mutually exclusive orthogonal projectors.

    Validates on construction: each element Hermitian and idempotent, pairwise
    products vanish, and the family sums to the identity.  Builders that hold
    an orthonormal frame (eigenvector columns, Fourier columns) should use
    :meth:`from_frame`, where one Gram check certifies all invariants without
    the O(m^2 d^3) product sweep.
    """

    __slots__ = ("projectors", "labels")

    def __init__(self, projectors: Sequence[PseudoObservable],
                 labels: Sequence[float] | None = None):
        projs = tuple(p if isinstance(p, PseudoObservable) else PseudoObservable(p)
                      for p in projectors)
        if not projs:
            raise AlgebraError("a projector basis needs at least one projector")
        labels = _coerce_labels(labels, len(projs))
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "labels", labels)
        self._validate(projs[0].dim)

    def __setattr__(self, name, value):
        raise AttributeError("ProjectorBasis is immutable")

    @classmethod
    def from_frame(cls, frame: np.ndarray, block_sizes: Sequence[int],
                   labels: Sequence[float] | None = None) -> "ProjectorBasis":
        """Build projectors from consecutive column blocks of a unitary frame.

        ``||frame^dagger frame - 1||`` bounds every basis residual (products,
        idempotence, closure), so only that one check is run.
        """
        frame = np.asarray(frame, dtype=complex)
        d = frame.shape[0]
        if frame.shape != (d, d) or sum(block_sizes) != d:
            raise AlgebraError("frame must be square with blocks covering all columns")
        gram = opnorm(frame.conj().T @ frame - np.eye(d))
        if gram > TOL_RECON:
            raise AlgebraError(f"frame is not orthonormal: residual {gram:.3e}")
        projs = []
        start = 0
        for size in block_sizes:
            block = frame[:, start:start + size]
            projs.append(Observable(block @ block.conj().T))
            start += size
        self = object.__new__(cls)
        object.__setattr__(self, "projectors", tuple(projs))
        object.__setattr__(self, "labels", _coerce_labels(labels, len(projs)))
        return self

    def _validate(self, dim: int) -> None:
        stack = np.stack([p.entries for p in self.projectors])
        if any(p.dim != dim for p in self.projectors):
            raise DimensionMismatch("projectors of mixed dimensions")
        herm = max(hermiticity_defect(e) for e in stack)
        if herm > TOL_HERM:
            raise AlgebraError(f"projector not Hermitian: defect {herm:.3e}")
        idem = max(opnorm(e @ e - e) for e in stack)
        if idem > TOL_RECON:
            raise AlgebraError(f"projector not idempotent: residual {idem:.3e}")
        closure = opnorm(stack.sum(axis=0) - np.eye(dim))
        if closure > TOL_RECON:
            raise AlgebraError(f"projectors do not close to identity: {closure:.3e}")
        excl = 0.0
        for j in range(len(stack)):  # chunked pairwise products, one j at a time
            prods = stack[j] @ stack
            prods[j] = 0.0
            excl = max(excl, float(np.max(np.linalg.norm(prods, axis=(1, 2)))))
        if excl > TOL_RECON:
            raise AlgebraError(f"projectors not mutually exclusive: {excl:.3e}")

    def __len__(self) -> int:
        return len(self.projectors)

    def __iter__(self):
        return iter(self.projectors)

    def __getitem__(self, j: int) -> PseudoObservable:
        return self.projectors[j]

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    def ranks(self) -> tuple[int, ...]:
        return tuple(int(round(trace(p).real)) for p in self.projectors)

    def is_elementary(self, tol: float = TOL_RECON) -> bool:
        """All projectors rank one."""
        return all(abs(trace(p) - 1.0) <= tol for p in self.projectors)


class SpectralDecomposition:
    """A = sum_j a_j I_j with strictly increasing distinct eigenvalues."""

    __slots__ = ("eigenvalues", "basis", "multiplicities")

    def __init__(self, eigenvalues: Sequence[float], basis: ProjectorBasis,
                 multiplicities: Sequence[int]):
        eigs = tuple(float(x) for x in eigenvalues)
        mults = tuple(int(m) for m in multiplicities)
        if not (len(eigs) == len(basis) == len(mults)):
            raise AlgebraError("eigenvalues, projectors and multiplicities must align")
        if any(b <= a for a, b in zip(eigs, eigs[1:])):
            raise AlgebraError("eigenvalues must be strictly increasing")
        if sum(mults) != basis.dim:
            raise AlgebraError("multiplicities must sum to the dimension")
        object.__setattr__(self, "eigenvalues", eigs)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "multiplicities", mults)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralDecomposition is immutable")

    def reconstruct(self) -> Observable:
        acc = sum(a * p.entries for a, p in zip(self.eigenvalues, self.basis))
        return Observable(acc)


def spectral_decompose(a: PseudoObservable,
                       grouping_tol: float = GROUPING_TOL) -> SpectralDecomposition:
    """Eigendecompose a Hermitian element into distinct spectral terms.

    Eigenvalues within ``grouping_tol * max(1, spectral radius)`` of each other
    belong to one term; the projector of a multiple eigenvalue spans its whole
    eigenvector cluster.
    """
    obs = as_observable(a)
    try:
        w, v = np.linalg.eigh(obs.entries)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise AlgebraError(f"eigensolver failed: {exc}") from exc
    radius = float(np.max(np.abs(w))) if w.size else 0.0
    gap = grouping_tol * max(1.0, radius)
    clusters: list[list[int]] = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[clusters[-1][-1]] <= gap:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    eigs = [float(np.mean(w[idx])) for idx in clusters]
    mults = [len(idx) for idx in clusters]
    basis = ProjectorBasis.from_frame(v, mults, labels=eigs)
    decomp = SpectralDecomposition(eigs, basis, mults)
    recon = decomp.reconstruct().distance(obs)
    if recon > TOL_RECON * max(1.0, radius):
        raise AlgebraError(f"spectral reconstruction residual {recon:.3e}")
    return decomp


FunctionLike = Union[Callable[[float], complex], Mapping[float, complex],
                     Sequence[tuple[float, complex]]]


def _function_values(f: FunctionLike, eigenvalues: Sequence[float],
                     tol: float) -> list[complex]:
    if callable(f):
        values = []
        for lam in eigenvalues:
            try:
                values.append(complex(f(lam)))
            except Exception as exc:
                raise AlgebraError(
                    f"function undefined at spectrum point {lam!r}: {exc}") from exc
        return values
    table = list(f.items()) if isinstance(f, Mapping) else [tuple(p) for p in f]
    values = []
    for lam in eigenvalues:
        hits = [y for x, y in table if abs(float(x) - lam) <= tol]
        if not hits:
            raise AlgebraError(f"function undefined at spectrum point {lam!r}")
        values.append(complex(hits[0]))
    return values


def apply_function(f: FunctionLike, a: PseudoObservable,
                   grouping_tol: float = GROUPING_TOL) -> PseudoObservable:
    """f(A) = sum_j f(a_j) I_j via the spectral decomposition of A.

    ``f`` may be a callable on reals or tabulated (eigenvalue, value) pairs.
    Returns an :class:`Observable` when the result is Hermitian (real-valued
    ``f``), otherwise a plain element (e.g. complex phases).
    """
    decomp = spectral_decompose(a, grouping_tol)
    radius = max((abs(x) for x in decomp.eigenvalues), default=0.0)
    values = _function_values(f, decomp.eigenvalues, grouping_tol * max(1.0, radius))
    acc = np.zeros((a.dim, a.dim), dtype=complex)
    for val, proj in zip(values, decomp.basis):
        acc += val * proj.entries
    return _wrap_like(acc, a)


class DyadBasis:
    """Family Gamma_jk bridging an elementary projector basis.

    Validation checks the defining identities: Gamma_jj = I_j, the Hermitian
    pairing Gamma_jk^dagger = Gamma_kj, flanking (Gamma_jk = I_j Gamma_jk I_k)
    and the chain rule Gamma_jl Gamma_lk = Gamma_jk.  Together with the mutual
    exclusivity of the base these imply the full matrix-unit rule
    Gamma_jl Gamma_l'k = delta_{l,l'} Gamma_jk at tolerance.
    """

    __slots__ = ("dyads", "base")

    def __init__(self, dyads: Sequence[Sequence[PseudoObservable]],
                 base: ProjectorBasis):
        grid = tuple(tuple(row) for row in dyads)
        m = len(base)
        if len(grid) != m or any(len(row) != m for row in grid):
            raise AlgebraError("dyads must form an m x m family over the base")
        object.__setattr__(self, "dyads", grid)
        object.__setattr__(self, "base", base)
        self._validate()

    def __setattr__(self, name, value):
        raise AttributeError("DyadBasis is immutable")

    def __getitem__(self, jk: tuple[int, int]) -> PseudoObservable:
        j, k = jk
        return self.dyads[j][k]

    @property
    def dim(self) -> int:
        return self.base.dim

    def _validate(self) -> None:
        m = len(self.base)
        scale = max(1.0, max(d.norm() for row in self.dyads for d in row))
        for j in range(m):
            if self.dyads[j][j].distance(self.base[j]) > TOL_RECON * scale:
                raise AlgebraError(f"Gamma[{j}][{j}] differs from base projector")
        for j in range(m):
            for k in range(m):
                g = self.dyads[j][k]
                if g.dagger().distance(self.dyads[k][j]) > TOL_RECON * scale:
                    raise AlgebraError(f"Gamma[{j}][{k}]^dagger != Gamma[{k}][{j}]")
                flank = self.base[j].entries @ g.entries @ self.base[k].entries
                if opnorm(flank - g.entries) > TOL_RECON * scale:
                    raise AlgebraError(f"Gamma[{j}][{k}] not flanked by its projectors")
        for j in range(m):
            for l in range(m):
                left = self.dyads[j][l].entries
                for k in range(m):
                    prod = left @ self.dyads[l][k].entries
                    if opnorm(prod - self.dyads[j][k].entries) > TOL_RECON * scale:
                        raise AlgebraError(
                            f"Gamma[{j}][{l}] Gamma[{l}][{k}] != Gamma[{j}][{k}]")


CoresLike = Union[PseudoObservable, np.ndarray,
                  Mapping[tuple[int, int], PseudoObservable],
                  Sequence[Sequence[PseudoObservable]]]


def dyad_basis_from(base: ProjectorBasis, cores: CoresLike) -> DyadBasis:
    """Build the dyad family Gamma_jk = I_j C_jk I_k over an elementary basis.

    ``cores`` is a single element shared by every pair or a (j, k)-indexed
    family.  Each sandwiched core is normalized to Frobenius norm one; cores
    must be phase-consistent for the result to satisfy the dyad identities
    (any rank-one core C = v v^dagger with v non-orthogonal to every basis
    vector works, e.g. the all-ones matrix in the basis frame).
    """
    if not base.is_elementary():
        raise AlgebraError("dyad bases require an elementary (rank-1) projector basis")
    m = len(base)

    def core_at(j: int, k: int) -> np.ndarray:
        if isinstance(cores, PseudoObservable):
            return cores.entries
        if isinstance(cores, np.ndarray):
            return cores
        if isinstance(cores, Mapping):
            return np.asarray(getattr(cores[(j, k)], "entries", cores[(j, k)]))
        return np.asarray(getattr(cores[j][k], "entries", cores[j][k]))

    rows = []
    for j in range(m):
        row = []
        for k in range(m):
            sandwich = base[j].entries @ core_at(j, k) @ base[k].entries
            nrm = float(np.linalg.norm(sandwich))
            if nrm <= 1e-12 * max(1.0, float(np.linalg.norm(core_at(j, k)))):
                raise AlgebraError(
                    f"core for pair ({j}, {k}) is annihilated by the flanking projectors")
            row.append(PseudoObservable(sandwich / nrm))
        rows.append(row)
    return DyadBasis(rows, base)
