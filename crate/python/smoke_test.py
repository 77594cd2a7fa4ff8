"""Smoke test for the hawkesflock_py extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/hawkesflock-*.whl
"""

import math
import random
import tempfile
from pathlib import Path

import hawkesflock_py as hf


def main():
    p = hf.Params.benchmark(1)
    assert len(hf.Params.names()) == 12
    assert hf.Params.from_dict(p.to_dict()) == p
    assert 0.0 < p.spectral_radius() < 1.0

    s = hf.simulate(p, horizon=3000.0, seed=7)
    assert len(s) > 1000 and sum(s.counts()) == len(s)
    again = hf.simulate(p, horizon=3000.0, seed=7)
    assert again.times == s.times and again.marks == s.marks

    ll, grad = hf.loglik_grad(s, p)
    assert math.isclose(ll, hf.loglik(s, p), rel_tol=1e-12)
    assert len(grad) == 12

    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "events.csv"
        s.write(str(path))
        back = hf.EventStream.read(str(path))
        assert back.times == s.times

    f = hf.fit(s)
    assert f["converged"], f
    assert f["loglik"] >= ll - 1e-6
    fitted = hf.Params.from_dict(f["params"])
    r = hf.risk_summary(fitted, s)
    assert abs(r["rho"] - fitted.spectral_radius()) < 1e-12
    assert 0.0 <= r["p"] <= 1.0

    assert abs(hf.copula_cdf("gaussian", 0.0, 0.3, 0.6) - 0.18) < 1e-12
    assert abs(hf.copula_h_inv("clayton", 2.0, hf.copula_h("clayton", 2.0, 0.4, 0.7), 0.7) - 0.4) < 1e-9

    rng = random.Random(3)
    r1, r2 = [], []
    for _ in range(300):
        z, e = rng.gauss(0, 1), rng.gauss(0, 1)
        r1.append(0.01 * z)
        r2.append(0.01 * (0.7 * z + 0.71 * e))
    row = hf.covar_window(r1, r2, families=["gaussian", "t"])
    assert row["covar12"]["covar"] < row["var1"]
    rows = hf.rolling_covar([f"d{i}" for i in range(300)], r1, r2, window=250, families=["gaussian"])
    assert len(rows) == 51 and rows[0]["date"] == "d249"

    try:
        hf.Params.from_list([0.1] * 11)
    except ValueError:
        pass
    else:
        raise AssertionError("11 values accepted")

    print("smoke test ok:", len(s), "events, rho", round(r["rho"], 4))


if __name__ == "__main__":
    main()
