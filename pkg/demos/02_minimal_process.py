"""Bracketing the minimal process from below and above.

Zero-scheme windows increase monotonically to the minimal transition
function, so the window entry is a rigorous lower bound and the mass the
cut pushed out bounds the gap.  On a regular chain the bracket closes;
on an explosive one the lower side stalls at the honest (defective)
value and the library says so instead of pretending to converge.
"""

from minlab import bd, minimal_entry, minimal_mass, minimal_tail

regular = bd("(i+1)^2", "(i+1)^2")
explosive = bd("2*(i+1)^2", "(i+1)^2")

# A single entry of the regular chain: the ladder stops once the level
# increments stabilize and reports a 1e-6-wide bracket.
b = minimal_entry(regular, 0, 3, 1.0)
print("regular P[0,3](1.0):")
print(f"  lo={b.lo:.9f}  hi={b.best_hi():.9f}  level={b.level}  "
      f"flags={sorted(b.flags)}")

# Row mass of the regular chain: honest, lo pinned to 1.
m = minimal_mass(regular, 0, 1.0)
print(f"regular mass at t=1: lo={m.lo:.9f} (flags={sorted(m.flags)})")

# The explosive chain keeps ~36% of its mass at t=1 and the bracket
# machinery refuses to certify more than it can prove.
m2 = minimal_mass(explosive, 0, 1.0, tol=2e-2,
                  schedule=(8, 16, 32, 64, 128, 256, 512, 640, 800, 1000))
print(f"explosive mass at t=1: lo={m2.lo:.6f} hi={m2.hi:.6f} "
      f"numeric_hi={m2.numeric_hi:.6f} flags={sorted(m2.flags)}")
print("  bracket history (level, lo, hi):")
for level, lo, hi in m2.history:
    print(f"    {level:5d}  {lo:.6f}  {hi:.6f}")

t = minimal_tail(explosive, 0, 5, 1.0, tol=2e-2)
print(f"explosive tail sum_(j>=5) P[0,j](1.0): lo={t.lo:.6f} hi={t.best_hi():.6f}")
