"""Compare numba kernels with their numpy fallbacks.

Run: python3 benchmarks/bench_kernels.py [--repeat N]
Each kernel is run once to trigger compilation, then timed.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from precession import _backend
from precession.angles import ProbingAngles, brute_force_max_score, random_interior, theta3
from precession.entanglement import SdpProblem, q_total_spin, sdp_ppt_max
from precession.linalg import jacobi_raw
from precession.robustness import SearchConfig, classical_coarse_max, uniform_scheme


def _cases():
    rng = np.random.default_rng(0)
    herm = rng.standard_normal((96, 96)) + 1j * rng.standard_normal((96, 96))
    herm = herm + herm.conj().T
    k7 = ProbingAngles(tuple(np.sort(rng.uniform(0, 2 * np.pi, 7))))
    scheme = uniform_scheme(1.0, 0.3, 2000)
    interior = random_interior(rng)
    sdp = SdpProblem(q_total_spin("1/2", "3/2", theta3()), 2, 4)
    return {
        "jacobi 96x96": lambda: jacobi_raw(herm),
        "classical grid K=7": lambda: brute_force_max_score(k7, grid=200_000),
        "coarse search": lambda: classical_coarse_max(interior, scheme, SearchConfig(phi_points=4000)),
        "admm 8x8": lambda: sdp_ppt_max(sdp),
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    cases = _cases()
    print(f"{'kernel':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fn in cases.items():
        times = {}
        for backend in ("numba", "numpy"):
            _backend.set_backend(backend)
            fn()  # warm-up / compile
            t0 = time.perf_counter()
            for _ in range(args.repeat):
                fn()
            times[backend] = (time.perf_counter() - t0) / args.repeat
        print(f"{name:<22}{times['numba']:>12.4f}{times['numpy']:>12.4f}{times['numpy'] / times['numba']:>10.1f}")
    _backend.set_backend("numba")


if __name__ == "__main__":
    main()
