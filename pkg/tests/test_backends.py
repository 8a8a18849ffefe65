import json
import os
import subprocess
import sys

import numpy as np
import pytest

from momenteq import _kernels as nb
from momenteq import _kernels_np as vec
from momenteq.enums import Family
from momenteq.kernels import oracle_grid

CASES = [(Family.AGG.code, 0.0, 0.37, 0.5, 2), (Family.IND.code, 0.0, 0.3, 0.55, 2),
         (Family.AGG.code, -1.0, 0.2, 1.5, 4), (Family.IND.code, 0.9, 1.0, 1.3, 7)]


@pytest.mark.parametrize("case", CASES)
def test_bid_and_inverse_agree(case):
    fam, l, mom, u, n = case
    values = np.linspace(l, u + (u - l), 301)
    out = np.empty_like(values)
    nb.bid_batch(fam, l, mom, u, n, values, out)
    np.testing.assert_allclose(vec.bid_batch(fam, l, mom, u, n, values), out, atol=1e-12)
    bids = np.linspace(l, u, 101)[:-1]
    out = np.empty_like(bids)
    nb.inverse_batch(fam, l, mom, u, n, bids, out)
    np.testing.assert_allclose(vec.inverse_batch(fam, l, mom, u, n, bids), out, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("case", CASES)
@pytest.mark.parametrize("procurement", [False, True])
def test_oracle_agrees(case, procurement):
    fam, l, mom, u, n = case
    b = l + 0.4 * (u - l)
    v = b + 0.3 if not procurement else b - 0.3
    x1s, x2s = oracle_grid(l, mom, u, 300, b)
    a = nb.oracle_max_loss(fam, procurement, mom, n, v, b, x1s, x2s)
    c = vec.oracle_max_loss(fam, procurement, mom, n, v, b, x1s, x2s)
    assert a == pytest.approx(c, abs=1e-13)


def test_triweight_agrees():
    rng = np.random.default_rng(0)
    data = np.sort(rng.normal(size=500))
    pts = np.linspace(-3, 3, 200)
    out = np.empty_like(pts)
    nb.triweight_density(data, pts, 0.4, out)
    np.testing.assert_allclose(vec.triweight_density(data, pts, 0.4), out, atol=1e-13)


SCRIPT = """
import json, numpy as np
from momenteq import BACKEND
from momenteq.distributions import Uniform
from momenteq.equilibrium import solve_equilibrium
sol = solve_equilibrium(Uniform(0, 1), 3, "ind")
print(json.dumps({"backend": BACKEND, "beliefs": [sol.l, sol.moment, sol.u],
                  "bids": sol.bid(np.linspace(0, 1, 11)).tolist()}))
"""


def _run(backend):
    env = dict(os.environ, MOMENTEQ_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_env_flag_switches_backend():
    a, b = _run("numba"), _run("numpy")
    assert (a["backend"], b["backend"]) == ("numba", "numpy")
    np.testing.assert_allclose(a["beliefs"], b["beliefs"], atol=1e-10)
    np.testing.assert_allclose(a["bids"], b["bids"], atol=1e-10)
