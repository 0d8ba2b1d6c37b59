"""Watching the Hutchinson operator fill the phase space.

Run: python demos/attractor_convergence.py [output-dir]
"""
import sys
from pathlib import Path

import numpy as np

from hyperifs.corpus import load_system
from hyperifs.hutchinson import attractor_convergence, iterate
from hyperifs.minimality import certificate_dict, convergence_time_bound, find_attracting_fixed_points, verify_certificate
from hyperifs.report import circle_rings, filmstrip, line_chart, write_json, write_svg
from hyperifs.spaces import hausdorff_distance

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-out")
out.mkdir(parents=True, exist_ok=True)

# Two halving maps on [0, 1]. Starting from {0}, the j-th iterate is the
# dyadic grid of mesh 2^-j, so its distance to [0, 1] halves every step.
psi = load_system("psi_interval")
orbit = iterate(psi, psi.space.singleton(0.0), 10)
for j, a in enumerate(orbit.sets):
    print(f"psi  j={j:2d}  |F^j({{0}})| = {a.cardinality:5d}  d_H to [0,1] = {hausdorff_distance(a, psi.space.full()):.6f}")
write_svg(out / "psi_filmstrip.svg", filmstrip(psi.space, [a.mask for a in orbit.sets[:8]], [f"j={j}" for j in range(8)], "F^j({0})"))

# A north-south map plus an irrational rotation on the circle. Nothing here
# contracts globally, yet every compact set still converges to the circle.
# The constructive bound comes from an attracting fixed point p, a preimage
# cover of a small neighborhood U of p, and a funnel from U back to a net.
ns = load_system("circle_ns_rot")
afp = find_attracting_fixed_points(ns)[0]
print(f"\nattracting fixed point p = {afp.p:.4f} of generator {afp.generator_index + 1}, multiplier {afp.multiplier:.3f}")
for eps in (0.1, 0.05):
    bound = convergence_time_bound(ns, afp, eps, 24)
    print(f"eps={eps}: N = k_U + n0 + s_eps = {bound.k_U} + {bound.n0} + {bound.s_eps} = {bound.N}")

bound = convergence_time_bound(ns, afp, 0.05, 24)
rng = np.random.default_rng(0)
seeds = [ns.space.singleton(x) for x in rng.random(20)]
rep = attractor_convergence(ns, ns.space.full(), seeds, 0.05, 4 * bound.N)
print(f"measured first hits for 20 random points: max {max(rep.first_hits)}, bound {bound.N}")
write_svg(
    out / "north_south_convergence.svg",
    line_chart({f"seed {k}": s.distances for k, s in enumerate(rep.seeds[:6])},
               "d_H(F^j(seed), circle)", "j", "d_H", {"eps": 0.05}),
)
write_svg(out / "north_south_rings.svg", circle_rings(ns.space, [a.mask for a in iterate(ns, seeds[0], 8).sets], "F^j of one point"))

# The certificate is plain JSON and can be re-checked on a finer grid.
cert = certificate_dict(ns, bound)
write_json(out / "certificate.json", cert)
check = verify_certificate(cert, resolution=2 * ns.space.resolution, slack=ns.space.cell_diameter)
print(f"certificate re-verified at doubled resolution: {check.ok}")
