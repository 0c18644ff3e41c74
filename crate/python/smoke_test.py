"""Smoke test for the qreduce_py extension module.

Build and install first:  pip install --no-build-isolation -e crates/py
"""

import math

import qreduce_py


def main():
    r = qreduce_py.reduce("aklt-alternating", 10, 7)
    assert r["passed"], r["trace"]
    assert r["fidelity_original"] > 1 - 1e-9
    assert r["consumed"] + len(r["surviving"]) == 10

    f = qreduce_py.reduce("fnw", 10, 3, theta=math.pi / 4)
    assert f["passed"], f["trace"]
    th = qreduce_py.fnw_theta_hat(math.pi / 4)
    assert abs(math.tan(th) - math.sqrt(2)) < 1e-12

    w = qreduce_py.reduce("wire-filter", 6, 1, gamma=0.7854)
    assert w["passed"] and w["retries"] == 0

    csv = qreduce_py.cost("aklt-alternating", [8, 12], 200, 3)
    header, *rows = csv.strip().splitlines()
    assert header.startswith("protocol,n,trials,cost")
    assert len(rows) == 2
    assert csv == qreduce_py.cost("aklt-alternating", [8, 12], 200, 3)

    sync = qreduce_py.sync_simulate(3, 1000, 100, 5).strip().splitlines()[1].split(",")
    assert sync[9] == "0"

    t = qreduce_py.tricluster(2, 2, 2)
    assert t["fidelity"] > 1 - 1e-9

    try:
        qreduce_py.reduce("fnw", 10, 0, theta=1.9)
    except ValueError:
        pass
    else:
        raise AssertionError("theta outside (0, pi/2) accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
