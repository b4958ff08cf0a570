#!/usr/bin/env python3
"""Nearest-neighbor patch matching, fast route vs brute force.

The fast search expands ||q - p||^2 = ||q||^2 - 2<q,p> + ||p||^2 and batches
the inner products as a cross-correlation of the feature map with the query
patches.  It must agree with brute force index for index.
"""

import time

import numpy as np

from patchsynth import patches as P

rng = np.random.default_rng(1)

fm = rng.standard_normal((1, 8, 40, 40)).astype(np.float32)
hole = P.HoleRegion(12, 12, 12, 12)
feat = P.map_hole_to_feature(hole, stride=1, patch_size=3, map_hw=(40, 40))
print(f"pixel hole {hole.top, hole.left, hole.height, hole.width} -> "
      f"feature rect {feat.top, feat.left, feat.height, feat.width} (dilated by 1)")

t0 = time.monotonic()
fast = P.nn_search_fast(fm, feat, 3)
t_fast = time.monotonic() - t0

t0 = time.monotonic()
brute = P.assign_bruteforce(fm, feat, 3)
t_brute = time.monotonic() - t0

agree = (fast.indices == brute.indices).all()
print(f"queries: {len(fast.query_centers)}, candidates: {len(fast.candidate_centers)}")
print(f"fast {t_fast * 1e3:.1f} ms vs brute {t_brute * 1e3:.1f} ms, "
      f"identical assignments: {agree}")

print("matches never overlap the hole region:")
overlaps = sum(feat.contains(y, x) for y, x in fast.matched_centers())
print(f"   {overlaps} of {len(fast.indices)} matched centers inside the hole")

scaled = P.nn_search_fast(fm * 10.0, feat, 3)
print(f"scaling the map leaves assignments unchanged: "
      f"{(scaled.indices == fast.indices).all()}")
