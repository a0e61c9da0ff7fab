"""Four routes to the same question: is the minimal process honest?

Resolvent deficiency works on anything, the rate series is the sharp
classic test for birth-death chains, the drift criterion gives a clean
sufficient certificate, and comparison transfers a verdict from a
dominating chain.  Running several routes on one matrix is the whole
point: agreement is the real safety net.
"""

from minlab import (
    bd,
    birth_death_series,
    deficiency_test,
    lyapunov_test,
    regularity_by_comparison,
)

chains = {
    "symmetric quadratic": bd("(i+1)^2", "(i+1)^2"),
    "super-linear birth": bd("2*(i+1)^2", "(i+1)^2"),
    "poisson": bd("1", "0"),
}

for name, Q in chains.items():
    d = deficiency_test(Q)
    s = birth_death_series(Q)
    print(f"{name:20s} deficiency={d.verdict:28s} series={s.verdict}")

# The deficiency evidence is quantitative: z values per start state.
v = deficiency_test(bd("2*(i+1)^2", "(i+1)^2"))
print("\nstabilized z_i(1) for the explosive chain (grows with the start):")
print("  ", [round(z, 4) for z in v.evidence["z_final"]])

# Drift certificate: phi(i) = i with c = 1 handles linear birth.
linear = bd("i+1", "1")
verdict, cert = lyapunov_test(linear, lambda i: float(i), c=1.0)
print(f"\nlinear birth via drift criterion: {verdict.verdict}")
print(f"  min margin {cert.min_margin:g} at state {cert.argmin}")

# And that certificate is transferable to anything the chain dominates.
smaller = bd("1", "1")
out = regularity_by_comparison(smaller, linear, verdict)
print(f"constant-rate chain by comparison: {out.verdict} "
      f"(method={out.method}, flags={sorted(out.flags)})")
