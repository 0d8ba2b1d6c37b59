"""Equicontinuous hyperspace, sensitive points: both at once.

On the circle system the Hutchinson operator is equicontinuous on compact
sets, while the repelling pole of the north-south map is a sensitive point
of the semigroup action. The prepend/shift pair on sequences shows the two
extremes exactly.

Run: python demos/equicontinuity_and_sensitivity.py [output-dir]
"""
import sys
from pathlib import Path

import numpy as np

from hyperifs.corpus import load_system
from hyperifs.hutchinson import hyperspace_equicontinuity_probe
from hyperifs.maps import eval_word
from hyperifs.pointwise import classify_point, sensitivity_probe
from hyperifs.report import heatmap_strip, write_svg
from hyperifs.symbolic import verify_prepend_equicontinuous, verify_shift_sensitive

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-out")
out.mkdir(parents=True, exist_ok=True)

ns = load_system("circle_ns_rot")
probe = hyperspace_equicontinuity_probe(ns, 0.05, 100, 68, seed=1)
print("hyperspace probe at eps=0.05 (delta, pairs, violations):")
for row in probe.ladder:
    print("   ", row)
print(f"delta found: {probe.delta_found}")

# Pointwise picture: sweep the circle and record the delta each point admits.
# Rotations carry any small arc onto the repelling pole, so expect none.
xs = np.linspace(0, 1, 40, endpoint=False)
deltas = []
for x in xs:
    v = classify_point(ns, x, 0.2, 48, beam=512)
    deltas.append(v.delta_found)
print(f"\npoints with a delta at eps=0.2: {sum(d is not None for d in deltas)} of {len(xs)}")
write_svg(out / "north_south_pointwise.svg", heatmap_strip(xs, deltas, "delta_found over the circle", "delta"))

q = ns.generators[0].q
v = classify_point(ns, q, 0.2, 48)
w = v.witness
print(f"repelling pole q={q}: witness y={w.y:.6f}, word {w.word}, "
      f"separation {float(ns.space.metric(eval_word(w.word, ns, q), eval_word(w.word, ns, w.y))):.3f}")

quasi = load_system("circle_quasisym")
rep = sensitivity_probe(quasi, 0.05, 30)
print(f"circle_quasisym: every small ball stretched to diameter >= {rep.min_open_diameter:.4f} (sensitive: {rep.sensitive})")

# Sequences over {1, 2}: prepending a symbol halves distances, the shift doubles them.
equi = verify_prepend_equicontinuous(8, 0.25)
print(f"\nprepend maps: delta = eps = {equi.delta}, worst ratio {equi.max_ratio} over {equi.pairs_checked} pairs")
sens = verify_shift_sensitive(8)
print(f"shift map: sensitivity constant {sens.sensitivity_constant} with {len(sens.witnesses)} cylinder witnesses")
for wit in sens.witnesses[:4]:
    print("   ", wit.to_row())

inv = load_system("shift2_inverse")
wit = hyperspace_equicontinuity_probe(inv, 0.5, 60, 16, seed=1).witness_pairs[0]
print(f"shift on compact sets: pair at distance {wit.initial_distance} separated to {wit.d_F} after {wit.index} steps")
