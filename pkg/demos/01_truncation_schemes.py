"""Five ways to cut an infinite generator down to a finite window.

The quadratic birth-death chain grows fast enough that what happens at
the cut matters; this walks each scheme over the same window and shows
where the mass goes.
"""

import numpy as np

from minlab import bd, truncate, geometric_levels

Q = bd("2*(i+1)^2", "(i+1)^2")
n = 6

for scheme in ("zero", "absorb", "mask", "stop"):
    Qf = truncate(Q, scheme, n, mask_mode="index")
    sums = Qf.dense_generator().sum(axis=1)
    print(f"scheme={scheme:7s} states={Qf.size:2d} provenance={Qf.provenance}")
    print(f"  row sums (should be -defects): {np.round(sums, 12)}")
    print(f"  defects: {np.round(Qf.defects, 12)}")

# zero drops the outflow entirely: the boundary rows leak.
# absorb lumps everything past the window onto one cemetery state.
# mask keeps whole rows, so nothing leaks, but the window grows by one.
# stop repeats the last row, freezing the chain at the boundary.

print()
print("levels for a bracket schedule:", geometric_levels(8, 2, 6))
