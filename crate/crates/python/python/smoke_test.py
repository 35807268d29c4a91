"""Builds the extension with cargo, imports it and exercises the main calls."""

import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[3]


def build() -> pathlib.Path:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "amest-python"], cwd=ROOT, check=True
    )
    lib = ROOT / "target" / "release" / "libpyamest.so"
    out = pathlib.Path(tempfile.mkdtemp()) / "pyamest.so"
    shutil.copy(lib, out)
    return out.parent


def main() -> None:
    sys.path.insert(0, str(build()))
    import pyamest

    consts = pyamest.ModelConstants()
    params = pyamest.unknown_params(0.5, 0.16)
    assert math.isclose(params[1], 0.08)

    q = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -math.pi / 2, 0.0]
    qd = [0.0] * 8
    mass, cor, grav = pyamest.dynamics_matrices(q, qd, list(params), consts)
    assert len(mass) == 8 and all(len(r) == 8 for r in mass)
    assert all(abs(mass[i][j] - mass[j][i]) < 1e-12 for i in range(8) for j in range(8))

    qdd = pyamest.forward_dynamics(q, qd, grav, list(params))
    assert max(abs(a) for a in qdd) < 1e-9

    phi_d, theta_d = pyamest.attitude_allocation([0.1, 0.0, 16.0, 0, 0, 0, 0, 0], 0.0)
    assert abs(phi_d) < 1e-12 and theta_d > 0.0

    try:
        pyamest.forward_dynamics(q[:7], qd, grav, list(params))
    except ValueError:
        pass
    else:
        raise AssertionError("short vector accepted")

    log = pyamest.Scenario(duration=0.5).run()
    cols = log.columns()
    assert len(log) == 500 and len(cols["m_hat"]) == 500
    print("summary:", log.summary())

    try:
        pyamest.Scenario(duration=5.0, dt=5e-3).run()
    except pyamest.DivergenceError as e:
        print("divergence reported:", e)

    results = pyamest.compare(
        [pyamest.Scenario(duration=0.5), pyamest.Scenario(controller="asmc", duration=0.5)]
    )
    print("compare:", [r["controller"] for r in results])
    print("ok")


if __name__ == "__main__":
    main()
