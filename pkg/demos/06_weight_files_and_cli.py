#!/usr/bin/env python3
"""The NPSW weight container and the command-line front end.

Builds a workspace under demos/out/, writes fixture weights plus a striped
test image, and drives the installed `inpaint` CLI end to end.
"""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from patchsynth import fixtures, imageio, npsw

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

print("== NPSW round trip")
weights = fixtures.make_tiny_texture_weights()
path = OUT / "tinytex.npsw"
npsw.write_weights(path, weights)
back = npsw.load_weights(path)
same = all(np.array_equal(back[k], weights[k]) for k in weights)
print(f"   {len(back)} tensors, {path.stat().st_size} bytes, bit-exact reload: {same}")

print("== test image + mask")
xs = np.arange(96)
stripe = ((xs // 6) % 2).astype(np.uint8) * 150 + 50
img = np.stack([np.tile(stripe, (96, 1))] * 3, axis=2)
imageio.write_image(OUT / "cli_in.ppm", img)
mask = np.zeros((96, 96), dtype=np.uint8)
mask[32:64, 32:64] = 255
imageio.write_pgm(OUT / "cli_mask.pgm", mask)

print("== running the CLI")
cmd = [
    sys.executable, "-m", "patchsynth.cli",
    "--image", str(OUT / "cli_in.ppm"),
    "--mask", str(OUT / "cli_mask.pgm"),
    "--vgg-weights", str(path),
    "--out", str(OUT / "cli_out.ppm"),
    "--scales", "1", "--iters", "80",
    "--metrics-gt", str(OUT / "cli_in.ppm"),
    "--report", str(OUT / "cli_report.json"),
]
proc = subprocess.run(cmd, capture_output=True, text=True)
print("   " + "\n   ".join(proc.stdout.strip().splitlines()))
print(f"   exit code {proc.returncode}")

report = json.loads((OUT / "cli_report.json").read_text())
print(f"   report: {report['scales_used']} scale(s), "
      f"final objective {report['scales'][0]['final']['total']:.1f}, "
      f"hole PSNR {report['metrics']['psnr_db']}")
