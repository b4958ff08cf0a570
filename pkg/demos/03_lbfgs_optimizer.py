#!/usr/bin/env python3
"""The optimizer on classic test problems, with its trace opened up."""

import numpy as np

from patchsynth import lbfgs


def rosenbrock(x):
    a, b = x
    val = (1 - a) ** 2 + 100.0 * (b - a * a) ** 2
    grad = np.array([
        -2.0 * (1 - a) - 400.0 * a * (b - a * a),
        200.0 * (b - a * a),
    ])
    return val, grad


x, trace = lbfgs.minimize(rosenbrock, np.array([-1.2, 1.0]),
                          lbfgs.OptimizerOptions(max_iters=200, grad_tol=1e-10))
print(f"rosenbrock: reached {x.round(8).tolist()} in {trace.iterations} iterations "
      f"({trace.status})")
print(f"strong-Wolfe conditions held at every accepted step: "
      f"{trace.wolfe_satisfied(1e-4, 0.9)}")
print("first iterations:")
for r in trace.records[:6]:
    print(f"   k={r.iteration:2d}  f={r.value:12.6f}  |g|={r.grad_norm:10.4f}  "
          f"step={r.step:.4f}  evals={r.evals}")

print()
print("objective switch mid-run (the driver does this when it re-matches patches):")
state = {"center": np.array([5.0, 5.0])}


def moving_quadratic(x):
    d = x - state["center"]
    return float(d @ d), 2.0 * d


def refresh(k, x):
    if not state.get("moved"):
        state["center"] = np.array([-2.0, 1.0])
        state["moved"] = True
        print(f"   refresh after k={k}: target moves, curvature history drops")
        return True
    return False


x, trace = lbfgs.minimize(moving_quadratic, np.zeros(2),
                          lbfgs.OptimizerOptions(max_iters=50), refresh=refresh)
print(f"   final point {x.round(6).tolist()} (target was [-2, 1])")
