"""Generator dominance vs process dominance, and where they diverge.

Comparing rate tails row by row (the generator condition) is cheap and
often enough: for comparable chains it transfers to the transition
functions.  The quadratic pair below is the standard trap, satisfying
the generator condition while the processes are NOT ordered, because
the faster chain explodes and loses the mass the ordering would need.
"""

from minlab import (
    bd,
    generator_dominance,
    is_monotone_process,
    process_dominance,
    row_head,
    row_tail,
)

slow = bd("(i+1)^2", "(i+1)^2")
fast = bd("2*(i+1)^2", "(i+1)^2")

# the raw material: tail sums of one row at every cutoff
for k in range(4):
    print(f"k={k}: tail(slow,0,k)={row_tail(slow, 0, k):8.1f}  "
          f"tail(fast,0,k)={row_tail(fast, 0, k):8.1f}  "
          f"head(slow,3,k)={row_head(slow, 3, k):8.1f}")

gen = generator_dominance(slow, fast, M_max=50)
print(f"\ngenerator condition: {gen.verdict} "
      f"({gen.cells_checked} cells, flags={sorted(gen.flags)})")

# Refuting the process ordering needs the fast chain's mass estimate to
# stabilize, and the detector only trusts a schedule whose relative steps
# shrink toward the end.
schedule = (8, 16, 32, 64, 128, 256, 512, 640, 800, 1000)
proc = process_dominance(slow, fast, M_max=2, K_max=3, t_grid=(1.0,),
                         tol=2e-2, schedule=schedule)
print(f"process condition:   {proc.verdict} at witness {proc.witness}")
if proc.witness_values:
    left, right = proc.witness_values
    print(f"  left tail  in [{left.lo:.6f}, {left.best_hi():.6f}]")
    print(f"  right tail in [{right.lo:.6f}, {right.best_hi():.6f}]"
          "  (brackets separated)")

# Self-comparability: is the chain its own stochastic majorant?
mono = is_monotone_process(bd("1", "0"), M_max=3, K_max=6, t_grid=(0.5,))
print(f"\nPoisson self-dominance (monotone process): {mono.verdict}")

# Reversing the quadratic pair fails already at the generator level.
rev = generator_dominance(fast, slow, M_max=10)
print(f"reversed pair generator condition: {rev.verdict}, "
      f"witness (i, m, k) = {rev.witness}")
