"""Packaged scenario runs with self-auditing reports.

Each runner assembles every piece of evidence for one story, and the
report re-checks the story's claims against its own findings, so a
PASS line means the numbers on hand actually support the narrative.
Monte Carlo is trimmed to 20k paths here; the agreement checks budget
for the wider standard error.
"""

from minlab import run_counterexample, run_footnote_example, run_kirstein_demo

cx = run_counterexample(n_paths=20_000)
print(cx.summary())

# The headline numbers behind those checks: the explosive chain keeps
# only ~64% of its mass at t=1, and simulation sees the missing mass as
# explosion frequency.
m2 = cx.findings["mass_q2"]
mc = cx.findings["mc"]
print(f"\nmass bracket  [{m2['lo']:.6f}, {m2['best_hi']:.6f}]")
print(f"mc explosion  {mc['explosion_frequency']:.5f} "
      f"(se {mc['se']:.5f}, {mc['budget_exhausted']} paths hit the budget)")

print()
fn = run_footnote_example()
print(fn.summary())

# The witness row pins down one entry that decreases when the masked
# truncation grows, which a monotone approximation could never do.
n, n1, start, j, t, v_n, v_n1 = fn.findings["search"]["witness"]
print(f"\nwitness: start {start}, target {j}, t={t}: "
      f"level {n} gives {v_n:.6f}, level {n1} gives {v_n1:.6f}")

print()
kd = run_kirstein_demo()
print(kd.summary())
