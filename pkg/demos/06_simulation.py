"""Monte Carlo cross-checks: paths against closed forms and brackets.

Simulation is the independent referee here.  It never touches the
truncation machinery, so agreement between a path estimate and a
bracket is real evidence rather than the same code agreeing with
itself.
"""

import math

from minlab import bd, minimal_mass, simulate

# Poisson process: P[0,j](t) is the textbook e^-t t^j / j!.
poisson = bd("1", "0")
res = simulate(poisson, 0, 2.0, n_paths=20_000, seed=3)
print("poisson at t=2, start 0:")
for j in range(5):
    exact = math.exp(-2.0) * 2.0**j / math.factorial(j)
    est = res.prob(j)
    print(f"  j={j}  mc={est:.4f}  exact={exact:.4f}  "
          f"se={res.se(est):.4f}")

# Explosive chain: the fraction of exploding paths estimates the mass
# defect that the truncation bracket pins down analytically.
boom = bd("2*(i+1)^2", "(i+1)^2")
res = simulate(boom, 0, 1.0, n_paths=20_000, seed=3)
# tol here is the stabilization budget for the numeric cap, not an
# accuracy claim: the rigorous hi on an explosive chain stays at 1.
mass = minimal_mass(boom, 0, 1.0, tol=2e-2,
                    schedule=(8, 16, 32, 64, 128, 256, 512, 640, 800, 1000))
print("\nexplosive chain at t=1:")
print(f"  mc explosion frequency  {res.explosion_frequency:.4f}")
print(f"  bracket mass defect     [{1 - mass.best_hi():.4f}, "
      f"{1 - mass.lo:.4f}]")
print(f"  paths that exhausted the jump budget: {res.budget_exhausted} "
      f"(counted as explosions)")
