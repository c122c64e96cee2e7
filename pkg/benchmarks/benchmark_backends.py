"""Compare the compiled and pure-Python iteration kernels.

Runs the same seeded configurations through both backends, checks they
agree to near machine precision, and reports steps/second.

Usage: python3 benchmarks/benchmark_backends.py [--T 200000] [--repeats 3]
"""

import argparse
import time

import numpy as np

from smdlab import backend
from smdlab.geometry import L1_PAIR, L2_PAIR, ConstraintSet, Geometry, MirrorMap
from smdlab.oracle import BiasModel, NoiseModel
from smdlab.problems import make_problem
from smdlab.smd import StepSchedule, run


def configurations():
    box = ConstraintSet.box([-1.0, -1.0], [1.0, 1.0])
    simp = ConstraintSet.simplex(8)
    ball = ConstraintSet.l2_ball(np.zeros(4), 1.0)
    yield ("quadratic/box/euclidean",
           make_problem("quadratic", box, L2_PAIR, a_diag=np.ones(2),
                        b_lin=np.array([0.5, 0.3])),
           Geometry(MirrorMap("euclidean"), box),
           BiasModel(), NoiseModel(sigma=0.3))
    yield ("linear/simplex/neg_entropy",
           make_problem("linear_simplex", simp, L1_PAIR,
                        c_lin=np.linspace(0.1, 0.8, 8)),
           Geometry(MirrorMap("neg_entropy"), simp),
           BiasModel(kind="fixed_direction", B0=0.1, q=1.5,
                     direction=np.eye(8)[0]),
           NoiseModel(sigma=0.2))
    yield ("l1/ball/euclidean",
           make_problem("l1", ball, L2_PAIR),
           Geometry(MirrorMap("euclidean"), ball),
           BiasModel(kind="adversarial", B0=0.2, q=1.0),
           NoiseModel(kind="bounded_uniform", radius=0.4))


def time_backend(name, prob, geom, bias, noise, sched, T, repeats):
    best = np.inf
    trace = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        trace = run(prob, geom, bias, noise, sched, T=T, seed=7,
                    backend_name=name)
        best = min(best, time.perf_counter() - t0)
    return best, trace


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=int, default=200_000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    names = backend.available_backends()
    print(f"backends available: {', '.join(names)}")
    sched = StepSchedule(0.5, 0.75)
    for label, prob, geom, bias, noise in configurations():
        print(f"\n{label} (dim={prob.dim}, T={args.T}):")
        traces = {}
        for name in names:
            secs, tr = time_backend(name, prob, geom, bias, noise, sched,
                                    args.T, args.repeats)
            traces[name] = tr
            print(f"  {name:<8} {secs:8.3f} s   {args.T / secs:12.0f} steps/s")
        if len(names) == 2:
            a, b = (traces[n] for n in names)
            dev = float(np.max(np.abs(a.gap_z - b.gap_z)))
            print(f"  max |gap_z| deviation between backends: {dev:.3e}")
            assert dev < 1e-12, "backends disagree"
    print("\nok")


if __name__ == "__main__":
    main()
