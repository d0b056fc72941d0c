import json
import math
import subprocess
import sys

import pytest

from obsalg.audit import run_audit
from obsalg.cli import main
from obsalg.scenarios import config_from_doc, run_scenario
from obsalg.serialize import SchemaError


def minimal_doc(**overrides):
    doc = {
        "name": "trivial",
        "operators": {"Z": {"dim": 2, "entries": [[1, 0], [0, 0], [0, 0], [-1, 0]]}},
        "hamiltonian": "0*Z",
        "initial_state": 0,
        "grid": {"tau": 0.1, "steps": 10},
        "observables_to_trace": {"z": "Z"},
        "picture": "schrodinger",
        "seed": 1,
    }
    doc.update(overrides)
    return doc


def rabi_doc(**overrides):
    doc = {
        "name": "rabi_test",
        "operators": {
            "SX": {"dim": 2, "entries": [[0, 0], [1, 0], [1, 0], [0, 0]]},
            "SZ": {"dim": 2, "entries": [[1, 0], [0, 0], [0, 0], [-1, 0]]},
        },
        "constants": {"omega": 1.0},
        "hamiltonian": "(omega/2)*SX",
        "initial_state": 0,
        "grid": {"tau": 2 * math.pi / 1000, "steps": 1000},
        "observables_to_trace": {"sz": "SZ"},
        "picture": "schrodinger",
        "seed": 2,
    }
    doc.update(overrides)
    return doc


# --- config validation -----------------------------------------------------------

def test_validation_reports_field_paths():
    with pytest.raises(SchemaError, match="config.hamiltonian"):
        config_from_doc(minimal_doc(hamiltonian="Q +"))
    with pytest.raises(SchemaError, match="config.grid.tau"):
        config_from_doc(minimal_doc(grid={"steps": 5}))
    with pytest.raises(SchemaError, match="config.picture"):
        config_from_doc(minimal_doc(picture="both"))
    with pytest.raises(SchemaError, match="config.n"):
        config_from_doc(minimal_doc(n=4))
    with pytest.raises(SchemaError, match=r"config.observables_to_trace.bad"):
        config_from_doc(minimal_doc(observables_to_trace={"bad": "(("}))


def test_initial_state_out_of_range():
    config = config_from_doc(minimal_doc(initial_state=5))
    with pytest.raises(SchemaError, match="out of range"):
        run_scenario(config)


# --- trivial scenario ---------------------------------------------------------------

def test_trivial_config_constant_trace():
    result = run_scenario(config_from_doc(minimal_doc()))
    assert result.all_pass
    z = result.column("z")
    assert len(z) == 11
    assert all(v == pytest.approx(1.0, abs=1e-12) for v in z)
    assert max(result.column("state_drift")) < 1e-12


# --- bundled-style scenarios -----------------------------------------------------------

def test_rabi_matches_closed_form_oracle():
    result = run_scenario(config_from_doc(rabi_doc()))
    assert result.all_pass
    ts = result.column("t")
    sz = result.column("sz")
    worst = max(abs(v - math.cos(t)) for v, t in zip(sz, ts))
    assert worst < 1e-3


def test_oscillator_energy_constant():
    doc = {
        "name": "osc_test",
        "n": 16, "epsilon": 0.25,
        "constants": {"m": 1.0, "omega": 1.0},
        "hamiltonian": "P^2/(2*m) + (m*omega^2/2)*Q^2",
        "initial_state": 16,
        "grid": {"tau": 0.002, "steps": 100},
        "observables_to_trace": {"energy": "P^2/(2*m) + (m*omega^2/2)*Q^2"},
        "picture": "schrodinger",
        "seed": 4,
    }
    result = run_scenario(config_from_doc(doc))
    assert result.all_pass
    energy = result.column("energy")
    assert max(abs(e - energy[0]) for e in energy) < 1e-10 * max(1.0, abs(energy[0]))


def test_heisenberg_picture_equivalent_trace():
    schr = run_scenario(config_from_doc(rabi_doc(grid={"tau": 0.05, "steps": 40})))
    heis = run_scenario(config_from_doc(
        rabi_doc(picture="heisenberg", grid={"tau": 0.05, "steps": 40})))
    for a, b in zip(schr.column("sz"), heis.column("sz")):
        assert a == pytest.approx(b, abs=1e-10)


def test_abscissa_demo_translates_by_tau_each_step():
    doc = {
        "name": "abscissa_test",
        "n": 8, "epsilon": 0.5,
        "hamiltonian": "P",
        "initial_state": 12,  # j = +4, so no wrap for the first few steps
        "grid": {"tau": 0.5, "steps": 4},
        "observables_to_trace": {"t_event": "Q"},
        "picture": "heisenberg",
        "seed": 0,
    }
    result = run_scenario(config_from_doc(doc))
    t_event = result.column("t_event")
    assert t_event == pytest.approx([2.0, 2.5, 3.0, 3.5, -4.0], abs=1e-9)  # wraps at top


# --- determinism -------------------------------------------------------------------------

def test_run_determinism_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "rabi", "--out", str(out1)]) == 0
    assert main(["run", "rabi", "--out", str(out2)]) == 0
    assert (out1 / "rabi_trace.csv").read_bytes() == (out2 / "rabi_trace.csv").read_bytes()
    assert (out1 / "rabi_audit.json").read_bytes() == (out2 / "rabi_audit.json").read_bytes()


def test_audit_determinism():
    a = run_audit([4], seed=123)
    b = run_audit([4], seed=123)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    c = run_audit([4], seed=124)
    assert json.dumps(a, sort_keys=True) != json.dumps(c, sort_keys=True)


# --- CLI exit codes -------------------------------------------------------------------------

def test_audit_exit_codes(tmp_path):
    assert main(["audit", "--dims", "4", "--seed", "0",
                 "--out", str(tmp_path / "audit.json")]) == 0
    assert main(["audit", "--dims", "4", "--seed", "0", "--self-test-fail"]) == 1


def test_validation_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(minimal_doc(hamiltonian="(((")))
    assert main(["run", str(bad)]) == 2
    missing = tmp_path / "missing.json"
    assert main(["run", str(missing)]) == 2


def test_runtime_exit_code(tmp_path):
    # valid syntax, unbound identifier at evaluation time
    bad = tmp_path / "unbound.json"
    bad.write_text(json.dumps(minimal_doc(hamiltonian="ghost")))
    assert main(["run", str(bad)]) == 3


def test_cli_subprocess_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "obsalg.cli", "sweep", "weyl", "--n-list", "8",
         "--out", str(tmp_path / "w.csv")],
        capture_output=True, text=True)
    assert proc.returncode == 0
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines[0] == "n,epsilon,trace_residual,interior_max_dev,edge_defect_weight"
    assert len(lines) == 2


def test_sweep_convergence_table(tmp_path):
    out = tmp_path / "conv.csv"
    assert main(["sweep", "convergence", "--halvings", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("scenario,halving,tau")
    assert len(lines) == 1 + 2 * 3  # two scenarios, base + 2 halvings
    # residuals halve down each scenario block
    import csv
    rows = list(csv.DictReader(lines))
    for name in ("rabi", "oscillator"):
        rs = [float(r["heisenberg_residual"]) for r in rows if r["scenario"] == name]
        for a, b in zip(rs, rs[1:]):
            assert 0.4 <= b / a <= 0.6


def test_outdir_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("OBSALG_OUTDIR", str(tmp_path / "envout"))
    assert main(["run", "rabi"]) == 0
    assert (tmp_path / "envout" / "rabi_trace.csv").exists()
