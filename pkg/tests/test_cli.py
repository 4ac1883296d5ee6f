import json

import numpy as np

from vortexlab.cli import main


def test_kernel_table_writes_csv(tmp_path):
    out = tmp_path / "kern.csv"
    rc = main(["kernel-table", "--variant", "mollified", "--grid-n", "256",
               "--epsilon", "0.02", "--out", str(out)])
    assert rc == 0
    header = out.read_text().splitlines()[0]
    assert header == "x1,x2,k1,k2"
    assert sum(1 for _ in out.open()) == 256 * 256 + 1


def test_solve_pde_outputs(tmp_path):
    rc = main(["solve-pde", "--rho0", "default", "--T", "0.02", "--dt", "0.005",
               "--n", "64", "--report-every", "0.01", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "norms.csv").exists()
    assert (tmp_path / "meta.json").exists()
    field = np.load(tmp_path / "field_t0.02.npy")
    assert field.shape == (64, 64)
    # closed-form decay of the separable initial profile
    amp = 0.5 * np.exp(-8 * np.pi ** 2 * 0.02)
    assert abs(field.max() - (1 + amp)) < 1e-4


def test_simulate_then_estimate(tmp_path):
    sim = tmp_path / "sim"
    pde = tmp_path / "pde"
    rc = main(["simulate", "--N", "64", "--T", "0.02", "--dt", "0.005",
               "--kernel", "mollified:0.02", "--replicas", "4",
               "--master-seed", "5", "--snap-times", "0.02", "--out", str(sim)])
    assert rc == 0
    rc = main(["solve-pde", "--T", "0.02", "--dt", "0.005", "--n", "64",
               "--report-every", "0.02", "--out", str(pde)])
    assert rc == 0
    est = tmp_path / "est"
    rc = main(["estimate", "--snapshots", str(sim), "--pde", str(pde),
               "--k", "1", "--w2", "exact", "--out", str(est)])
    assert rc == 0
    rows = (est / "report.csv").read_text().splitlines()
    assert rows[0].startswith("t,N,k,")
    assert len(rows) == 2


def test_bad_config_exit_code(tmp_path):
    assert main(["simulate", "--N", "64", "--T", "0.02", "--dt", "0.005",
                 "--kernel", "no-such-kernel", "--snap-times", "0.02",
                 "--out", str(tmp_path)]) == 2


def test_selftest_command(tmp_path, capsys):
    rc = main(["selftest", "--out", str(tmp_path)])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["passed"] is True
    assert len(payload["hash"]) == 64
