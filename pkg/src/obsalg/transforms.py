"""Transformations as unitary conjugations, with generatrix extraction.

A transformation acts as tau(P) = W P W^dagger for a unitary W = e^{iG}.
The Hermitian generatrix G is canonicalized to the principal branch: every
eigenvalue in (-pi, pi], an eigenvalue at exactly -pi folds to +pi.

Extraction path: the real and imaginary parts of a unitary commute, so they
are diagonalized in a simultaneous eigenbasis -- first the real part, then,
inside each of its eigenvalue clusters, the compressed imaginary part.  (A
single linear combination R + c I is not used: c-weighted phase collisions
cos t + c sin t = cos t' + c sin t' would merge distinct phases.)  The phase
of each joint eigenvector is atan2(sin, cos); phases are then re-clustered by
angular distance on the unit circle to honour degenerate unitaries.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .core import (
    GROUPING_TOL,
    TOL_RECON,
    AlgebraError,
    DyadBasis,
    Observable,
    ProjectorBasis,
    PseudoObservable,
    apply_function,
    as_observable,
    commutator,
    inner_product,
    opnorm,
    spectral_decompose,
    trace,
)
from .report import CheckReport


def unitary_defect(w: PseudoObservable) -> float:
    """||W^dagger W - 1||, zero for unitaries."""
    return opnorm(w.entries.conj().T @ w.entries - np.eye(w.dim))


def unitary_exponential(g: PseudoObservable) -> PseudoObservable:
    """e^{iG} = cos(G) + i sin(G), evaluated by spectral calculus."""
    return apply_function(lambda x: cmath.exp(1j * x), as_observable(g))


def _fold_phase(theta: float) -> float:
    """Fold into the principal branch (-pi, pi]."""
    folded = math.remainder(theta, 2 * math.pi)  # in [-pi, pi]
    return math.pi if folded <= -math.pi else folded


def _joint_phases(w: PseudoObservable, grouping_tol: float):
    """Phases and simultaneous eigenvectors of a unitary.

    Returns (thetas, vectors) with one entry per dimension, thetas in the
    principal branch.
    """
    e = w.entries
    re = (e + e.conj().T) / 2
    im = (e - e.conj().T) / 2j
    wr, vr = np.linalg.eigh(re)
    gap = grouping_tol * max(1.0, float(np.max(np.abs(wr))))
    thetas: list[float] = []
    vectors: list[np.ndarray] = []
    start = 0
    while start < len(wr):
        stop = start + 1
        while stop < len(wr) and wr[stop] - wr[stop - 1] <= gap:
            stop += 1
        block = vr[:, start:stop]
        compressed = block.conj().T @ im @ block
        wi, vi = np.linalg.eigh((compressed + compressed.conj().T) / 2)
        joint = block @ vi
        for col, beta in zip(joint.T, wi):
            alpha = float(np.real(col.conj() @ re @ col))
            unit_residual = abs(alpha ** 2 + float(beta) ** 2 - 1.0)
            if unit_residual > 1e3 * TOL_RECON:
                raise AlgebraError(
                    f"coefficient relation cos^2+sin^2=1 violated by {unit_residual:.3e}")
            thetas.append(_fold_phase(math.atan2(float(beta), alpha)))
            vectors.append(col)
        start = stop
    return np.array(thetas), np.column_stack(vectors)


def _cluster_phases(thetas: np.ndarray, grouping_tol: float) -> list[list[int]]:
    """Cluster phases by angular distance, merging across the +/-pi seam."""
    order = np.argsort(thetas)
    clusters: list[list[int]] = [[int(order[0])]]
    for idx in order[1:]:
        prev = clusters[-1][-1]
        if thetas[idx] - thetas[prev] <= grouping_tol:
            clusters[-1].append(int(idx))
        else:
            clusters.append([int(idx)])
    if len(clusters) > 1:
        seam = 2 * math.pi - (thetas[clusters[-1][-1]] - thetas[clusters[0][0]])
        if seam <= grouping_tol:
            clusters[0] = clusters.pop() + clusters[0]
    return clusters


class Transformation:
    """Ring automorphism of the algebra, induced by a unitary W = e^{iG}."""

    __slots__ = ("w", "generatrix")

    def __init__(self, w: PseudoObservable, generatrix: Observable):
        defect = unitary_defect(w)
        if defect > TOL_RECON:
            raise AlgebraError(f"inducing element is not unitary: {defect:.3e}")
        spectrum = np.linalg.eigvalsh(generatrix.entries)
        if spectrum.size and (spectrum[0] <= -math.pi - 1e-12
                              or spectrum[-1] > math.pi + 1e-12):
            raise AlgebraError("generatrix spectrum must lie in (-pi, pi]")
        recon = opnorm(unitary_exponential(generatrix).entries - w.entries)
        if recon > TOL_RECON:
            raise AlgebraError(f"e^(iG) does not reproduce W: residual {recon:.3e}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "generatrix", generatrix)

    def __setattr__(self, name, value):
        raise AttributeError("Transformation is immutable")

    @property
    def dim(self) -> int:
        return self.w.dim

    @classmethod
    def identity(cls, dim: int) -> "Transformation":
        return cls(PseudoObservable.identity(dim), Observable(np.zeros((dim, dim))))

    def __repr__(self):
        return f"Transformation(dim={self.dim})"


def from_unitary(w: PseudoObservable,
                 grouping_tol: float = GROUPING_TOL) -> Transformation:
    """Wrap a unitary, extracting its principal-branch generatrix."""
    defect = unitary_defect(w)
    if defect > TOL_RECON:
        raise AlgebraError(f"not unitary: ||W^dagger W - 1|| = {defect:.3e}")
    thetas, vectors = _joint_phases(w, grouping_tol)
    g = np.zeros((w.dim, w.dim), dtype=complex)
    for cluster in _cluster_phases(thetas, grouping_tol):
        block = vectors[:, cluster]
        rep = _fold_phase(float(np.angle(np.mean(np.exp(1j * thetas[cluster])))))
        g += rep * (block @ block.conj().T)
    return Transformation(w, Observable(g))


def from_generatrix(g: PseudoObservable) -> Transformation:
    """Build the transformation e^{iG} from a Hermitian generatrix.

    Spectrum outside the principal branch is folded into (-pi, pi]; the
    induced unitary is unchanged by the fold.
    """
    obs = as_observable(g)
    decomp = spectral_decompose(obs)
    folded = np.zeros((obs.dim, obs.dim), dtype=complex)
    w = np.zeros((obs.dim, obs.dim), dtype=complex)
    for lam, proj in zip(decomp.eigenvalues, decomp.basis):
        folded += _fold_phase(lam) * proj.entries
        w += cmath.exp(1j * lam) * proj.entries
    return Transformation(PseudoObservable(w), Observable(folded))


def apply(t: Transformation, p: PseudoObservable) -> PseudoObservable:
    """tau(P) = W P W^dagger; Observables stay Observables."""
    out = t.w.entries @ p.entries @ t.w.entries.conj().T
    if isinstance(p, Observable):
        return Observable(out, p.unit_tag)
    return PseudoObservable(out, p.unit_tag)


def inverse(t: Transformation) -> Transformation:
    """tau^{-1}, induced by W^dagger."""
    return from_unitary(t.w.dagger())


def compose(t1: Transformation, t2: Transformation) -> Transformation:
    """Apply t2 first, then t1: the transformation induced by W1 W2."""
    return from_unitary(t1.w @ t2.w)


def transform_basis(t: Transformation, basis):
    """Transport a projector or dyad basis; output revalidates all invariants."""
    if isinstance(basis, ProjectorBasis):
        return ProjectorBasis([apply(t, p) for p in basis], labels=basis.labels)
    if isinstance(basis, DyadBasis):
        new_base = ProjectorBasis([apply(t, p) for p in basis.base],
                                  labels=basis.base.labels)
        rows = [[apply(t, basis[j, k]) for k in range(len(new_base))]
                for j in range(len(new_base))]
        return DyadBasis(rows, new_base)
    raise AlgebraError(f"cannot transform {type(basis).__name__}")


def is_invariant(t: Transformation, a: Observable, tol: float = TOL_RECON) -> bool:
    """||tau(A) - A|| <= tol * ||A||."""
    return apply(t, a).distance(a) <= tol * a.norm()


def invariance_characterization(t: Transformation, a: Observable,
                                tol: float = TOL_RECON) -> CheckReport:
    """Evaluate both sides of: invariant under tau  iff  compatible with G.

    Passes when the two criteria agree (both true or both false).
    """
    a = as_observable(a)
    g = t.generatrix
    transform_residual = apply(t, a).distance(a)
    commutator_residual = opnorm(commutator(a, g).entries)
    invariant = transform_residual <= tol * a.norm()
    compatible = commutator_residual <= tol * a.norm() * g.norm()
    return CheckReport(
        name="invariance_biconditional",
        passed=invariant == compatible,
        residuals={
            "transform_residual": transform_residual,
            "commutator_residual": commutator_residual,
        },
        details={"invariant": invariant, "compatible_with_generatrix": compatible},
    )


def spectrum_preservation_check(t: Transformation, a: Observable,
                                grouping_tol: float = GROUPING_TOL) -> CheckReport:
    """tau(A) has the spectrum of A, same multiplicities, transported projectors."""
    a = as_observable(a)
    before = spectral_decompose(a, grouping_tol)
    after = spectral_decompose(apply(t, a), grouping_tol)
    scale = max(1.0, a.norm())
    if len(before.eigenvalues) != len(after.eigenvalues):
        return CheckReport(
            name="spectrum_preservation", passed=False,
            residuals={"spectrum_residual": float("inf")},
            details={"len_before": len(before.eigenvalues),
                     "len_after": len(after.eigenvalues)})
    spectrum_residual = float(np.max(np.abs(
        np.array(before.eigenvalues) - np.array(after.eigenvalues))))
    projector_residual = max(
        apply(t, p).distance(q) for p, q in zip(before.basis, after.basis))
    passed = (spectrum_residual <= grouping_tol * scale
              and before.multiplicities == after.multiplicities
              and projector_residual <= TOL_RECON)
    return CheckReport(
        name="spectrum_preservation",
        passed=passed,
        residuals={"spectrum_residual": spectrum_residual,
                   "projector_residual": projector_residual},
        details={"multiplicities_before": before.multiplicities,
                 "multiplicities_after": after.multiplicities},
    )


def trace_invariance_check(t: Transformation, p: PseudoObservable) -> CheckReport:
    tr_before = trace(p)
    tr_after = trace(apply(t, p))
    residual = abs(tr_after - tr_before)
    return CheckReport(
        name="trace_invariance",
        passed=residual <= 1e-10 * (1.0 + abs(tr_before)),
        residuals={"trace_residual": residual},
    )


def inner_product_invariance_check(t: Transformation, x: PseudoObservable,
                                   y: PseudoObservable) -> CheckReport:
    before = inner_product(x, y)
    after = inner_product(apply(t, x), apply(t, y))
    residual = abs(after - before)
    return CheckReport(
        name="inner_product_invariance",
        passed=residual <= 1e-10 * (1.0 + abs(before)),
        residuals={"inner_product_residual": residual},
    )
