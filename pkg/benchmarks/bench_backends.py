#!/usr/bin/env python3
"""Benchmark the compiled rotation kernels against the pure-numpy fallback.

Runs the raw chain kernel over representative batch shapes, then an
end-to-end equilibrium solve and a small classification sweep with each
backend forced via MORSECR_BACKEND in a subprocess.

Usage: python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

KERNEL_CASES = [
    ("single chain, N=50", (50, 3)),
    ("single chain, N=400", (400, 3)),
    ("jacobian batch, B=72 N=12", (72, 12, 3)),
    ("sweep batch, B=256 N=20", (256, 20, 3)),
]

CHILD_SNIPPET = r"""
import json, time
import numpy as np
import morsecr as mc

rng = np.random.default_rng(0)
out = {"backend": mc.BACKEND, "kernel": {}}

from morsecr import _backend
for label, shape in %(cases)s:
    thetas = 0.3 * rng.standard_normal(shape)
    _backend.rotation_chains(thetas)  # warm up
    reps = %(repeats)d
    t0 = time.perf_counter()
    for _ in range(reps):
        _backend.rotation_chains(thetas)
    out["kernel"][label] = (time.perf_counter() - t0) / reps * 1e6

model = mc.straight_model(12, actuators=[
    mc.ActuatorElement.magnet(joint=3, moment=[0, 0, 1.0]),
    mc.ActuatorElement.magnet(joint=7, moment=[0, 0, 1.0]),
    mc.ActuatorElement.magnet(joint=11, moment=[0, 0, -0.8]),
])
u = mc.ActuationCommand.magnet([0.4, 0.0, 0.3])
t0 = time.perf_counter()
report = mc.solve_equilibrium(model, u)
out["equilibrium_ms"] = (time.perf_counter() - t0) * 1e3
assert report.converged

t0 = time.perf_counter()
warm = model.theta_bar
for b0 in np.linspace(0.0, 1.0, 81):
    rep = mc.solve_equilibrium(
        model, mc.ActuationCommand.magnet([b0 * 0.6, 0.0, b0 * 0.8]),
        theta_init=warm,
    )
    warm = rep.theta
    shape = mc.forward_kinematics(model, rep.theta)
    mc.direction_max_search(shape, n_samples=128)
out["sweep_81pt_s"] = time.perf_counter() - t0
print(json.dumps(out))
"""


def run_backend(name: str, repeats: int) -> dict:
    env = dict(os.environ, MORSECR_BACKEND=name)
    code = CHILD_SNIPPET % {"cases": repr(KERNEL_CASES), "repeats": repeats}
    proc = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise RuntimeError(f"{name} backend failed:\n{proc.stderr}")
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    results = {}
    for backend in ("python", "compiled"):
        try:
            results[backend] = run_backend(backend, args.repeats)
        except RuntimeError as err:
            print(f"skipping {backend}: {err}", file=sys.stderr)
    if not results:
        return 1

    width = max(len(label) for label, _ in KERNEL_CASES)
    print(f"{'rotation_chains case':<{width}}  " +
          "  ".join(f"{b:>12}" for b in results))
    for label, _ in KERNEL_CASES:
        cells = "  ".join(
            f"{results[b]['kernel'][label]:>10.1f}us" for b in results
        )
        print(f"{label:<{width}}  {cells}")
    print()
    for key, unit in (("equilibrium_ms", "ms"), ("sweep_81pt_s", "s")):
        cells = "  ".join(f"{results[b][key]:>10.2f}{unit}" for b in results)
        print(f"{key:<{width}}  {cells}")
    if len(results) == 2:
        speedups = [
            results["python"]["kernel"][label] / results["compiled"]["kernel"][label]
            for label, _ in KERNEL_CASES
        ]
        print(f"\nkernel speedup (python/compiled): "
              f"{min(speedups):.1f}x .. {max(speedups):.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
