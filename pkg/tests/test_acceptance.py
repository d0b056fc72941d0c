"""Acceptance suite: each numbered criterion runs at its stated tolerance
and prints one pass/fail line.  Run with ``pytest tests/test_acceptance.py -s``
to see the lines as they pass."""

import json
import math

import numpy as np
import pytest

from obsalg.audit import automorphism_suite, generatrix_suite
from obsalg.canonical import (
    commutator_limit_probe,
    conjugation_parity_check,
    make_canonical_pair,
    make_position,
    translate_labels,
)
from obsalg.cli import main
from obsalg.core import Observable, apply_function, commutator, opnorm
from obsalg.evolution import (
    EvolutionEngine,
    Hamiltonian,
    TimeGrid,
    heisenberg_residual,
    heisenberg_step,
    reverse_step,
    schrodinger_residual,
    symmetry_check,
    temporal_abscissa_check,
    von_neumann_residual,
)
from obsalg.expr import EvalContext, evaluate, parse, time_reverse
from obsalg.rand import (
    random_density,
    random_hermitian,
    random_matrix,
    random_unitary,
)
from obsalg.states import (
    DensityObservable,
    StateVector,
    expectation,
    pure_density,
    transform_density,
)
from obsalg.transforms import apply, from_unitary, invariance_characterization

SEED = 90210
DIMS = (4, 8, 16)


def report(number: int, label: str) -> None:
    print(f"[acceptance] criterion {number:2d} PASS  {label}")


def test_criterion_01_automorphism_suite():
    for dim in DIMS:
        rng = np.random.default_rng([SEED, 1, dim])
        suite = automorphism_suite(rng, dim, cases=100)
        assert suite.passed, suite.residuals
        assert all(v < 1e-10 for v in suite.residuals.values())
    report(1, "automorphism laws: 100 random (W, A, B, gamma) per dim, < 1e-10")


def test_criterion_02_generatrix_round_trip():
    for dim in DIMS:
        rng = np.random.default_rng([SEED, 2, dim])
        suite = generatrix_suite(rng, dim, cases=100)
        assert suite.passed, suite.residuals
        assert suite.residuals["round_trip_residual"] < 1e-9
    report(2, "generatrix round trip ||extract(exp(iG)) - G|| < 1e-9")


def test_criterion_03_invariance_biconditional():
    for dim in DIMS:
        rng = np.random.default_rng([SEED, 3, dim])
        for case in range(100):
            t = from_unitary(random_unitary(rng, dim))
            if case % 2 == 0:
                a = random_hermitian(rng, dim)
            else:
                a = apply_function(lambda x: x ** 3 - 0.25 * x, t.generatrix)
            rep = invariance_characterization(t, a, tol=1e-9)
            assert rep.passed, (dim, case, rep.residuals)
    report(3, "invariance <=> compatibility with G: 100 cases per dim, 0 disagreements")


def test_criterion_04_canonical_pair_exactness():
    for n in (2, 4, 8, 32):
        eps, hbar = 0.5, 1.0
        pair = make_canonical_pair(make_position(n, eps), hbar)
        d = 2 * n
        cyclic = opnorm(np.linalg.matrix_power(pair.s.entries, d) - np.eye(d))
        assert cyclic < 1e-10
        expected = tuple(k * math.pi * hbar / (n * eps) for k in range(-n, n))
        assert pair.momentum_spectrum == expected  # exact, as constructed
        recovered = pair.momentum_from_shift_eigenphases()
        assert np.max(np.abs(recovered - np.array(expected))) < 1e-10
        assert pair.exponential_consistency() < 1e-10
    report(4, "canonical pairs: S^2n = 1, p_k = k*pi*hbar/(n*eps), exp(i eps P/hbar) = S")


def test_criterion_05_weyl_obstruction():
    rows = commutator_limit_probe([8, 16, 32, 64])
    for row in rows:
        assert row.trace_residual < 1e-9, row
    devs = [row.interior_max_dev for row in rows]
    for previous, doubled in zip(devs, devs[1:]):
        assert doubled <= 0.6 * previous, devs
    report(5, "Weyl obstruction: tr[Q,P] ~ 0 while interior deviation "
              f"falls {devs[0]:.2e} -> {devs[-1]:.2e} over n = 8 -> 64")


def test_criterion_06_picture_equivalence():
    for dim in DIMS:
        rng = np.random.default_rng([SEED, 6, dim])
        for _ in range(100):
            t = from_unitary(random_unitary(rng, dim))
            d = DensityObservable(random_density(rng, dim))
            p = random_matrix(rng, dim)
            lhs = expectation(d, apply(t, p))
            rhs = expectation(transform_density(t, d), p)
            assert abs(lhs - rhs) < 1e-10
    report(6, "picture equivalence: 100 random (tau, D, P) per dim agree to 1e-10")


def _rabi_engine(tau):
    sx = Observable(np.array([[0.0, 1.0], [1.0, 0.0]]))
    sz = Observable(np.diag([1.0, -1.0]))
    ctx = EvalContext(dim=2, operators={"SX": sx, "SZ": sz}, constants={"omega": 1.0})
    return EvolutionEngine(Hamiltonian("(omega/2)*SX", ctx), TimeGrid(tau=tau, steps=1))


def _oscillator_engine(tau):
    pair = make_canonical_pair(make_position(16, 0.25))
    ctx = EvalContext(dim=pair.dim, operators={"Q": pair.q.observable, "P": pair.p},
                      constants={"m": 1.0, "omega": 1.0})
    h = Hamiltonian("P^2/(2*m) + (m*omega^2/2)*Q^2", ctx)
    return EvolutionEngine(h, TimeGrid(tau=tau, steps=1))


def test_criterion_07_equation_residual_convergence():
    rng = np.random.default_rng([SEED, 7])
    cases = [("rabi", _rabi_engine, "SZ", 2 * math.pi / 100),
             ("oscillator", _oscillator_engine, "Q", 0.002)]
    for name, factory, probe, tau0 in cases:
        taus = [tau0 / 2 ** k for k in range(4)]
        engines = [factory(tau) for tau in taus]
        dim = engines[0].dim
        psi = StateVector(
            (lambda v: v / np.linalg.norm(v))(
                rng.normal(size=dim) + 1j * rng.normal(size=dim)))
        dens = pure_density(psi)
        heis = [heisenberg_residual(e, probe, 0.0).residuals["residual_tau"]
                for e in engines]
        schr = [schrodinger_residual(e, psi, 0.0).residuals["residual_tau"]
                for e in engines]
        vn = [von_neumann_residual(e, dens, 0.0).residuals["residual_tau"]
              for e in engines]
        for series in (heis, schr, vn):
            for a, b in zip(series, series[1:]):
                assert 0.4 <= b / a <= 0.6, (name, series)
    report(7, "Heisenberg/Schroedinger/von Neumann residuals halve "
              "(ratio in [0.4, 0.6]) over 3 tau halvings")


def test_criterion_08_rabi_closed_form():
    omega = 1.0
    period = 2 * math.pi / omega
    engine = _rabi_engine(period / 1000)
    sz = Observable(np.diag([1.0, -1.0]))
    psi = StateVector.basis_vector(2, 0)
    u_dag = engine.unitary(0.0).entries.conj().T
    worst = 0.0
    amplitudes = psi.amplitudes
    for m in range(1001):
        value = float(np.real(amplitudes.conj() @ sz.entries @ amplitudes))
        worst = max(worst, abs(value - math.cos(omega * m * period / 1000)))
        amplitudes = u_dag @ amplitudes
    assert worst < 1e-3
    report(8, f"Rabi trace vs closed form over one period: max error {worst:.2e} < 1e-3")


def test_criterion_09_reversibility():
    rng = np.random.default_rng([SEED, 9])
    h = random_hermitian(rng, 8)
    ctx = EvalContext(dim=8, operators={"H0": h})
    engine = EvolutionEngine(Hamiltonian("H0", ctx), TimeGrid(tau=0.05, steps=100))
    for _ in range(5):
        o = random_hermitian(rng, 8)
        current = o
        for _ in range(100):
            current = heisenberg_step(engine, current, 0.0)
        for _ in range(100):
            current = reverse_step(engine, current, 0.0)
        assert current.distance(o) < 1e-8
    report(9, "reversibility: forward 100 + reverse 100 recovers observables < 1e-8")


def test_criterion_10_time_reversal_calculus():
    pair = make_canonical_pair(make_position(8, 0.5))
    ctx = EvalContext(dim=pair.dim,
                      operators={"Q": pair.q.observable, "P": pair.p},
                      constants={"m": 1.0, "omega": 1.0})
    # substitution route
    q_rev = evaluate(time_reverse(parse("Q")), ctx)
    assert np.array_equal(q_rev.entries, pair.q.observable.entries)  # exact
    p_rev = evaluate(time_reverse(parse("P")), ctx)
    assert p_rev.distance(-1.0 * pair.p) < 1e-12 * pair.p.norm()
    osc = parse("P^2/(2*m) + (m*omega^2/2)*Q^2")
    h = evaluate(osc, ctx)
    h_rev = evaluate(time_reverse(osc), ctx)
    assert h_rev.distance(h) <= 1e-12 * max(1.0, h.norm())
    assert time_reverse(time_reverse(osc)) == osc  # double reversal, structurally
    # conjugation route: exact edge defect
    rep32 = conjugation_parity_check(make_canonical_pair(make_position(32, 0.5)))
    rep64 = conjugation_parity_check(make_canonical_pair(make_position(64, 0.5)))
    for rep in (rep32, rep64):
        assert rep.passed, rep.residuals
        assert rep.details["expected_defect_norm"] == pytest.approx(2 * math.pi / 0.5)
    w32 = rep32.residuals["edge_defect_weight"]
    w64 = rep64.residuals["edge_defect_weight"]
    assert w64 <= 0.5 * w32 * (1 + 1e-9)
    report(10, "time reversal: T(Q)=Q exact, T(P)=-P with 2*pi*hbar/eps edge "
               "defect halving in weight, T(H_osc)=H, double reversal = id")


def test_criterion_11_constants_of_motion():
    rng = np.random.default_rng([SEED, 11])
    h = random_hermitian(rng, 8)
    ctx = EvalContext(dim=8, operators={"H0": h})
    engine = EvolutionEngine(Hamiltonian("H0", ctx), TimeGrid(tau=0.02, steps=1000))
    f = apply_function(lambda x: x ** 2 - 3.0 * x, h)
    current = f
    for t in engine.grid.times()[:-1]:
        current = heisenberg_step(engine, current, float(t))
    assert current.distance(f) < 1e-9 * f.norm()
    short = EvolutionEngine(engine.hamiltonian, TimeGrid(tau=0.02, steps=20))
    for case in range(50):
        if case % 2 == 0:
            probe = apply_function(lambda x: np.sin(x) + 0.5 * x, h)
        else:
            probe = random_hermitian(rng, 8)
        rep = symmetry_check(short, probe)
        assert rep.passed, (case, rep.residuals)
    report(11, "constants of motion: drift < 1e-9 over 1000 steps; symmetry "
               "triple criterion agrees on 50 randomized cases")


def test_criterion_12_temporal_abscissa():
    for n, tau in ((4, 0.5), (8, 0.25)):
        rep = temporal_abscissa_check(n, tau)
        assert rep.passed, rep.residuals
        pair = make_canonical_pair(make_position(n, tau))
        labels = translate_labels(pair, 1)
        expected = tuple((j + 1) * tau if j + 1 < n else -n * tau
                         for j in range(-n, n))
        assert labels == expected  # label-level, exact
    report(12, "temporal abscissa: modular translation exact at projector-label level")


def test_criterion_13_cli_determinism(tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["run", "rabi", "--out", str(out1)]) == 0
    assert main(["run", "rabi", "--out", str(out2)]) == 0
    assert (out1 / "rabi_trace.csv").read_bytes() == (out2 / "rabi_trace.csv").read_bytes()
    assert (out1 / "rabi_audit.json").read_bytes() == (out2 / "rabi_audit.json").read_bytes()
    audit_out = tmp_path / "audit.json"
    assert main(["audit", "--dims", "4,8", "--seed", "5", "--out", str(audit_out)]) == 0
    assert json.loads(audit_out.read_text())["all_pass"] is True
    assert main(["audit", "--dims", "4", "--seed", "5", "--self-test-fail"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{\"name\": \"x\", \"hamiltonian\": \"((\", "
                   "\"grid\": {\"tau\": 0.1, \"steps\": 1}}")
    assert main(["run", str(bad)]) == 2
    report(13, "CLI: byte-identical outputs for identical config+seed; exit-code "
               "contract verified by negative control")
