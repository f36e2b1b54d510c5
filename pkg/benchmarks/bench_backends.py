"""Compare the compiled and pure-numpy case generators.

Runs the same batch workload through both backends, times them, and checks
agreement: truth labels must be bitwise identical, continuous outputs must
agree to near machine precision (vectorized transcendentals round the last
bit differently, so bitwise equality across backends is not expected).

    python3 benchmarks/bench_backends.py [n_cases]
"""

import sys
import time

import numpy as np

from lrsim.genmodel import (
    NoiseModel,
    PopulationModel,
    ScenarioKind,
    ScoreKind,
    WorldConfig,
)
from lrsim.kernels import available_backends, get_impl, stream_keys


def bench(n_cases: int) -> None:
    world = WorldConfig(
        pop_c=PopulationModel(0.0, 1.0),
        pop_d=PopulationModel(0.0, 1.0),
        pop_t=PopulationModel(1.0, 1.0),
        noise=NoiseModel(0.5),
        prior_h1=0.5,
        scenario=ScenarioKind.ReferenceCrimeRelevant,
        score_kind=ScoreKind.SignedDifference,
        n_trace=3,
        n_ref=3,
    )
    keys = stream_keys(0, np.arange(n_cases, dtype=np.uint64))
    args = (keys, world.n_trace, world.n_ref,
            world.pop_c.mu, world.pop_c.tau,
            world.pop_d.mu, world.pop_d.tau,
            world.pop_t.mu, world.pop_t.tau,
            world.noise.sigma, world.prior_h1, -1)

    results = {}
    for name in available_backends():
        impl = get_impl(name)
        impl.case_batch(*args)  # warm-up (jit compile, page in)
        times = []
        for _ in range(5):
            t0 = time.perf_counter()
            out = impl.case_batch(*args)
            times.append(time.perf_counter() - t0)
        results[name] = out
        best = min(times)
        print(f"{name:6s} {best * 1e3:8.1f} ms   "
              f"{n_cases / best / 1e6:6.2f} Mcases/s")

    if len(results) < 2:
        print("numba backend unavailable; nothing to compare")
        return

    a, b = results["numba"], results["numpy"]
    labels = ("truth", "theta_r", "theta_trace", "x", "y")
    worst = 0.0
    for name, va, vb in zip(labels, a, b):
        if name == "truth":
            same = np.array_equal(va, vb)
            print(f"truth bitwise identical: {same}")
            assert same
            continue
        err = float(np.max(np.abs(va - vb)))
        worst = max(worst, err)
        print(f"{name:12s} max abs diff {err:.3e}")
    assert worst < 1e-9, worst
    print("backends agree")


if __name__ == "__main__":
    bench(int(sys.argv[1]) if len(sys.argv) > 1 else 500_000)
