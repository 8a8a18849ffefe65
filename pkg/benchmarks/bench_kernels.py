"""Time the hot kernels under both backends.

Each backend runs in its own interpreter because the switch is read at import:

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, time
import numpy as np
from momenteq import BACKEND
from momenteq.distributions import Uniform
from momenteq.equilibrium import solve_equilibrium
from momenteq.kernels import bid_values, oracle_max_loss, triweight_density

def best(f, repeat):
    f()  # warm-up, includes compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        f()
        times.append(time.perf_counter() - t)
    return min(times)

repeat = {repeat}
values = np.linspace(0, 1.5, 200_000)
rng = np.random.default_rng(0)
data = np.sort(rng.normal(size=20_000))
pts = np.linspace(-3, 3, 5_000)
res = {{
    "backend": BACKEND,
    "bid_batch_200k": best(lambda: bid_values("ind", "buyer", 0.0, 0.3, 0.55, 3, values), repeat),
    "oracle_grid_2000": best(lambda: oracle_max_loss("agg", "buyer", 0.0, 0.37, 0.5, 2, 0.4, 0.2, 2000), repeat),
    "triweight_20k_x_5k": best(lambda: triweight_density(data, pts, 0.1), repeat),
    "solve_ind_uniform": best(lambda: solve_equilibrium(Uniform(0, 1), 3, "ind"), repeat),
}}
print(json.dumps(res))
"""


def run(backend, repeat):
    env = dict(os.environ, MOMENTEQ_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", WORKLOAD.format(repeat=repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast, slow = run("numba", args.repeat), run("numpy", args.repeat)
    print(f"{'kernel':<22}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:<22}{fast[key]:>12.4f}{slow[key]:>12.4f}{slow[key] / fast[key]:>10.1f}")


if __name__ == "__main__":
    main()
