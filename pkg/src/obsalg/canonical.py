"""Linear-spectrum coordinates, modular translations, and conjugate momenta.

A coordinate with resolution ``epsilon`` carries exactly ``2n`` levels
``{j epsilon : j = -n..n-1}``, so the cyclic shift group is Z_{2n} and
``S^{2n} = 1`` holds exactly.  The conjugate momentum lives on the discrete
Fourier vectors ``f_k(j) = (2n)^{-1/2} exp(i pi k j / n)`` with eigenvalues
``p_k = k pi hbar / (n epsilon)``, ``k = -n..n-1``.

Finite dimension obstructs the canonical commutator: ``tr [Q, P] = 0`` while
``tr 1 = 2n``.  The diagonal of ``[Q, P]/(i hbar)`` in the coordinate basis
is identically zero (the diagonal of any commutator with a diagonal matrix
vanishes), so position eigenstates never witness the continuum value.  The
interior-band deviation reported here is therefore measured on periodic
Gaussian probes: minimum-uncertainty wavepackets centred in the middle half
of the coordinate window, whose commutator expectation does converge to one
as ``n`` grows.  Same honesty for time reversal: entrywise conjugation flips
the momentum only up to a single unpaired edge mode ``k = -n``, and all
parity claims carry that exact rank-one defect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    TOL_RECON,
    AlgebraError,
    Observable,
    ProjectorBasis,
    PseudoObservable,
    opnorm,
)
from .report import CheckReport


def _shift_matrix(dim: int) -> np.ndarray:
    """Cyclic down-shift: e_j -> e_{j-1} (index j modulo dim)."""
    return np.roll(np.eye(dim, dtype=complex), -1, axis=0)


def _fourier_matrix(n: int) -> np.ndarray:
    """Columns f_k, k = -n..n-1, over coordinate indices j = -n..n-1."""
    j = np.arange(-n, n)
    return np.exp(1j * np.pi * np.outer(j, j) / n) / math.sqrt(2 * n)


def frame_conjugate(entries: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Entrywise complex conjugation taken in the given orthonormal frame.

    This is the concrete antiunitary used by the time-reversal checks.
    """
    return frame @ np.conj(frame.conj().T @ entries @ frame) @ frame.conj().T


class LinearSpectrumObservable:
    """Observable with spectrum exactly {j epsilon : j = -n..n-1}, rank-1 basis."""

    __slots__ = ("n", "epsilon", "observable", "basis", "frame")

    def __init__(self, n: int, epsilon: float, observable: Observable,
                 basis: ProjectorBasis, frame: np.ndarray):
        n = int(n)
        epsilon = float(epsilon)
        if n < 2:
            raise AlgebraError(f"need n >= 2, got {n}")
        if epsilon <= 0:
            raise AlgebraError(f"resolution must be positive, got {epsilon}")
        if observable.dim != 2 * n or len(basis) != 2 * n:
            raise AlgebraError("dimension must equal the level count 2n")
        labels = tuple(j * epsilon for j in range(-n, n))
        if basis.labels != labels:
            raise AlgebraError("basis labels must be exactly {j*epsilon}, ordered by j")
        if not basis.is_elementary():
            raise AlgebraError("all projectors must be rank one")
        frame = np.asarray(frame, dtype=complex)
        rebuilt = (frame * np.array(labels)) @ frame.conj().T
        if opnorm(rebuilt - observable.entries) > TOL_RECON * max(1.0, observable.norm()):
            raise AlgebraError("observable does not match sum_j (j epsilon) I_j")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "epsilon", epsilon)
        object.__setattr__(self, "observable", observable)
        object.__setattr__(self, "basis", basis)
        frame.setflags(write=False)
        object.__setattr__(self, "frame", frame)

    def __setattr__(self, name, value):
        raise AttributeError("LinearSpectrumObservable is immutable")

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def spectrum(self) -> tuple[float, ...]:
        return self.basis.labels

    def __repr__(self):
        return (f"LinearSpectrumObservable(n={self.n}, epsilon={self.epsilon}, "
                f"dim={self.dim})")


def make_position(n: int, epsilon: float) -> LinearSpectrumObservable:
    """diag(-n eps, ..., (n-1) eps) in the coordinate basis."""
    n = int(n)
    if n < 2:
        raise AlgebraError(f"need n >= 2, got {n}")
    if not epsilon > 0:
        raise AlgebraError(f"resolution must be positive, got {epsilon}")
    d = 2 * n
    labels = [j * float(epsilon) for j in range(-n, n)]
    frame = np.eye(d, dtype=complex)
    obs = Observable(np.diag(np.array(labels, dtype=complex)))
    basis = ProjectorBasis.from_frame(frame, [1] * d, labels=labels)
    return LinearSpectrumObservable(n, epsilon, obs, basis, frame)


class CanonicalPair:
    """Coordinate Q, minimal-shift unitary S, and conjugate momentum P.

    S is stored as the exact cyclic permutation in Q's frame; construction
    verifies it against the spectral route exp(i (epsilon/hbar) P).
    """

    __slots__ = ("q", "s", "p", "hbar", "momentum_basis", "fourier_frame")

    def __init__(self, q: LinearSpectrumObservable, s: PseudoObservable,
                 p: Observable, hbar: float, momentum_basis: ProjectorBasis,
                 fourier_frame: np.ndarray):
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "hbar", float(hbar))
        object.__setattr__(self, "momentum_basis", momentum_basis)
        fourier_frame.setflags(write=False)
        object.__setattr__(self, "fourier_frame", fourier_frame)

    def __setattr__(self, name, value):
        raise AttributeError("CanonicalPair is immutable")

    @property
    def n(self) -> int:
        return self.q.n

    @property
    def dim(self) -> int:
        return self.q.dim

    @property
    def epsilon(self) -> float:
        return self.q.epsilon

    @property
    def momentum_spectrum(self) -> tuple[float, ...]:
        return self.momentum_basis.labels

    def momentum_resolution(self) -> float:
        return math.pi * self.hbar / (self.n * self.epsilon)

    def exponential_consistency(self) -> float:
        """||exp(i (epsilon/hbar) P) - S||; small by construction."""
        from .transforms import unitary_exponential
        exp_route = unitary_exponential((self.epsilon / self.hbar) * self.p)
        return exp_route.distance(self.s)

    def momentum_from_shift_eigenphases(self) -> np.ndarray:
        """Recover the sorted momentum spectrum from S's eigenphases.

        Phases are folded into [-pi, pi) to match the asymmetric momentum
        window: k = -n..n-1 includes -pi*hbar/epsilon, never +pi*hbar/epsilon.
        """
        phases = np.angle(np.linalg.eigvals(self.s.entries))
        phases = np.where(phases >= math.pi - 1e-12, phases - 2 * math.pi, phases)
        return np.sort(phases) * self.hbar / self.epsilon

    def __repr__(self):
        return (f"CanonicalPair(n={self.n}, epsilon={self.epsilon}, "
                f"hbar={self.hbar})")


def make_canonical_pair(q: LinearSpectrumObservable, hbar: float = 1.0) -> CanonicalPair:
    """Construct S and P for a coordinate from its discrete Fourier vectors."""
    if not hbar > 0:
        raise AlgebraError(f"hbar must be positive, got {hbar}")
    n, d, eps = q.n, q.dim, q.epsilon
    fourier = q.frame @ _fourier_matrix(n)
    p_values = [k * math.pi * hbar / (n * eps) for k in range(-n, n)]
    momentum_basis = ProjectorBasis.from_frame(fourier, [1] * d, labels=p_values)
    p = Observable((fourier * np.array(p_values)) @ fourier.conj().T)
    s = PseudoObservable(q.frame @ _shift_matrix(d) @ q.frame.conj().T)
    pair = CanonicalPair(q, s, p, hbar, momentum_basis, fourier)
    consistency = pair.exponential_consistency()
    if consistency > TOL_RECON:
        raise AlgebraError(f"exp(i eps P / hbar) != S: residual {consistency:.3e}")
    cyclic = opnorm(np.linalg.matrix_power(s.entries, d) - np.eye(d))
    if cyclic > TOL_RECON:
        raise AlgebraError(f"S^(2n) != 1: residual {cyclic:.3e}")
    return pair


# ---------------------------------------------------------------------------
# translations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TranslationSpec:
    """Unique decomposition delta = xi + s_steps * epsilon with xi in [0, epsilon)."""

    delta: float
    s_steps: int
    xi: float


def decompose_displacement(delta: float, epsilon: float) -> TranslationSpec:
    if not epsilon > 0:
        raise AlgebraError(f"resolution must be positive, got {epsilon}")
    s = math.floor(delta / epsilon)
    xi = delta - s * epsilon
    if xi >= epsilon:  # float fencepost
        s += 1
        xi -= epsilon
    return TranslationSpec(float(delta), int(s), max(0.0, float(xi)))


def translate_steps(pair: CanonicalPair, delta: float) -> int:
    """Whole-step count for a displacement; rejects fractional remainders.

    A translation preserves the spectrum {j epsilon}, which forces the
    remainder xi of delta = xi + s*epsilon to vanish: fractional
    displacements have no representation on a discrete spectrum.
    """
    spec = decompose_displacement(delta, pair.epsilon)
    snap = 1e-9 * pair.epsilon * max(1.0, abs(delta / pair.epsilon))
    if spec.xi <= snap:
        return spec.s_steps
    if pair.epsilon - spec.xi <= snap:
        return spec.s_steps + 1
    raise AlgebraError(
        f"displacement {delta!r} is not a multiple of the resolution "
        f"{pair.epsilon!r}: remainder xi={spec.xi!r} (steps={spec.s_steps}); "
        f"spectrum preservation forces xi = 0, so only whole multiples of "
        f"epsilon are representable")


def translate_labels(pair: CanonicalPair, steps: int) -> tuple[float, ...]:
    """Eigenvalue carried by each projector slot after s steps, label-exact.

    Conjugation by S^s sends I_j -> I_{j-s}; equivalently the slot at index j
    picks up the label of index j+s, wrapped modulo 2n.
    """
    labels = np.array(pair.q.spectrum)
    return tuple(np.roll(labels, -int(steps)))


def translate(pair: CanonicalPair, delta: float) -> Observable:
    """tau_delta(Q) = Q + delta, the sum taken modulo 2n epsilon.

    ``delta`` must be an integer multiple of the resolution (see
    :func:`translate_steps`).  The result is built label-exactly in the
    pair's frame and equals the conjugation S^s Q S^{-s} to float precision.
    """
    steps = translate_steps(pair, delta)
    new_labels = np.array(translate_labels(pair, steps))
    frame = pair.q.frame
    return Observable((frame * new_labels) @ frame.conj().T)


# ---------------------------------------------------------------------------
# Weyl obstruction diagnostics
# ---------------------------------------------------------------------------

def _interior_band(n: int) -> list[int]:
    """Indices j with -n/2 <= j < n/2."""
    return [j for j in range(-n, n) if -n <= 2 * j < n]


def _interior_probe_deviation(pair: CanonicalPair, comm_over_ihbar: np.ndarray) -> float:
    """max_j |<g_j| [Q,P]/(i hbar) |g_j> - 1| over interior Gaussian probes.

    Probes are periodic discrete Gaussians of index width sqrt(n/pi), centred
    at the coordinates of the interior band and at momentum zero.
    """
    n = pair.n
    width = math.sqrt(n / math.pi)
    idx = np.arange(-n, n)
    frame = pair.q.frame
    worst = 0.0
    for centre in _interior_band(n):
        dist = (idx - centre + n) % (2 * n) - n
        g = np.exp(-dist.astype(float) ** 2 / (4 * width ** 2)).astype(complex)
        g /= np.linalg.norm(g)
        g = frame @ g
        value = float(np.real(g.conj() @ comm_over_ihbar @ g))
        worst = max(worst, abs(value - 1.0))
    return worst


def weyl_residual(pair: CanonicalPair) -> CheckReport:
    """Quantify the finite-dimension obstruction tr [Q,P] = 0 vs tr 1 = 2n.

    Reports the raw commutator trace, the coordinate-basis diagonal of
    [Q,P]/(i hbar) (identically zero, reported for honesty), and the
    interior-band deviation from one measured on Gaussian probes.
    """
    q, p, hbar = pair.q.observable, pair.p, pair.hbar
    comm = q.entries @ p.entries - p.entries @ q.entries
    comm_over_ihbar = comm / (1j * hbar)
    trace_residual = abs(complex(np.trace(comm)))
    trace_scale = q.norm() * p.norm()
    frame = pair.q.frame
    diagonal = np.real(np.diag(frame.conj().T @ comm_over_ihbar @ frame))
    interior = _interior_probe_deviation(pair, comm_over_ihbar)
    return CheckReport(
        name="weyl_residual",
        passed=trace_residual <= 1e-9 * trace_scale,
        residuals={
            "trace_residual": trace_residual,
            "diag_max_abs": float(np.max(np.abs(diagonal))),
            "interior_max_dev": interior,
        },
        details={
            "trace_scale": trace_scale,
            "identity_trace": float(pair.dim),
            "coordinate_diagonal": diagonal.tolist(),
            "interior_band": _interior_band(pair.n),
            "probe_width": math.sqrt(pair.n / math.pi),
        },
    )


def conjugation_parity_check(pair: CanonicalPair) -> CheckReport:
    """Entrywise conjugation in the coordinate frame as concrete time reversal.

    conj(Q) = Q exactly; conj(P) + P = 2 p_{-n} Itilde_{-n}, a single
    unpaired edge mode of norm 2 pi hbar / epsilon whose relative trace-norm
    weight (2/n) vanishes as n grows.
    """
    frame = pair.q.frame
    q_e, p_e = pair.q.observable.entries, pair.p.entries
    coordinate_defect = opnorm(frame_conjugate(q_e, frame) - q_e)
    defect = frame_conjugate(p_e, frame) + p_e
    defect_norm = opnorm(defect)
    expected_norm = 2 * math.pi * pair.hbar / pair.epsilon
    edge_mode = pair.momentum_basis[0]  # k = -n
    edge_value = pair.momentum_spectrum[0]
    rank_one_residual = opnorm(defect - 2 * edge_value * edge_mode.entries)
    trace_weight = (float(np.sum(np.abs(np.linalg.eigvalsh(defect))))
                    / float(np.sum(np.abs(pair.momentum_spectrum))))
    scale = max(1.0, pair.p.norm())
    passed = (coordinate_defect <= 1e-12 * max(1.0, pair.q.observable.norm())
              and abs(defect_norm - expected_norm) <= TOL_RECON * scale
              and rank_one_residual <= TOL_RECON * scale)
    return CheckReport(
        name="conjugation_parity",
        passed=passed,
        residuals={
            "coordinate_defect": coordinate_defect,
            "defect_norm_error": abs(defect_norm - expected_norm),
            "rank_one_residual": rank_one_residual,
            "edge_defect_weight": trace_weight,
        },
        details={"defect_norm": defect_norm, "expected_defect_norm": expected_norm},
    )


def momentum_as_linear_spectrum(pair: CanonicalPair) -> LinearSpectrumObservable:
    """The momentum itself, as a coordinate with resolution pi hbar/(n epsilon)."""
    return LinearSpectrumObservable(pair.n, pair.momentum_resolution(), pair.p,
                                    pair.momentum_basis,
                                    np.array(pair.fourier_frame))


@dataclass(frozen=True)
class SweepRow:
    """One row of the commutator-limit table (the CSV sweep schema)."""

    n: int
    epsilon: float
    trace_residual: float
    interior_max_dev: float
    edge_defect_weight: float


def commutator_limit_probe(n_list: Sequence[int],
                           epsilon_rule: Callable[[int], float] | None = None,
                           hbar: float = 1.0) -> tuple[SweepRow, ...]:
    """Weyl metrics across level counts, rows sorted by n.

    The default rule epsilon = 1/sqrt(n) drives both required limits at once:
    the resolution shrinks while the coordinate window n*epsilon grows.
    """
    rule = epsilon_rule or (lambda n: 1.0 / math.sqrt(n))
    rows = []
    for n in sorted(int(x) for x in n_list):
        eps = float(rule(n))
        pair = make_canonical_pair(make_position(n, eps), hbar)
        report = weyl_residual(pair)
        parity = conjugation_parity_check(pair)
        rows.append(SweepRow(
            n=n,
            epsilon=eps,
            trace_residual=(report.residuals["trace_residual"]
                            / report.details["trace_scale"]),
            interior_max_dev=report.residuals["interior_max_dev"],
            edge_defect_weight=parity.residuals["edge_defect_weight"],
        ))
    return tuple(rows)
