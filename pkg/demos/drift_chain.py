"""
Climbing in angular momentum by alternating two maps
=====================================================

Either scattering map alone keeps I close to where it started: orbits
wander over a narrow band and come back.  Choosing at each step the
map that raises I most produces a pseudo-orbit that climbs steadily.
This script builds such a chain, compares it with the single-map
controls and saves it in the portable JSON format.

Run with  python3 demos/drift_chain.py  (about 20 seconds).
"""
import numpy as np

from rpe3bp import diffusion as dif
from rpe3bp import svg
from rpe3bp.scattering import CylinderPoint

mu, eps = 0.3, 0.05
model = dif.model_for_window(mu, eps, 2.5, 4.0, n_i=32)
start = CylinderPoint(0.0, 3.0)

chain = dif.plan_drift(start, 3.05, model, 10 ** 7)
print(f"status {chain.status}: {len(chain)} steps, I {chain.start.i:.4f} -> {chain.end.i:.4f}")
print(f"mean drift per step {dif.drift_rate(chain):.3e}")

for sign in (1, -1):
    ctrl = dif.single_map_control(start, sign, len(chain), model)
    print(f"single map {sign:+d}: max |I - I0| = {ctrl.max_excursion:.4f}, returns {ctrl.returns}")

# averaging over one circulation of phi removes the fast oscillation
window = dif.circulation_steps(chain)
smooth = dif.smoothed_i(chain, window)
steps = np.arange(len(chain.points))
svg.line_plot("drift_chain.svg", steps,
              {"I": chain.points[:, 1],
               "smoothed": np.r_[np.full(len(steps) - len(smooth), np.nan), smooth]},
              "alternating scattering maps", "step", "I")

dif.export_pseudo_orbit(chain, "drift_chain.json")
assert dif.load_pseudo_orbit("drift_chain.json") == chain
print("wrote drift_chain.svg and drift_chain.json")
