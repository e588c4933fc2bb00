"""How often is a random correlation matrix near-singular?

Draw maximin Latin hypercube designs and log-uniform theta, and count the
matrices with log kappa above 25. Dense designs in one dimension almost
always cross the line. Adding dimensions spreads the points out and the
problem fades.
"""

from gpreg.bench import calibrate_threshold

rows = calibrate_threshold([(n, d) for n in (25, 50, 100) for d in (1, 2, 3)], reps=100, seed=0)

print("  n  d  prop_singular  prop_flagged  mean log kappa  worst after shift")
for r in rows:
    print(f"{r.n:3d} {r.d:2d}  {r.prop_singular:13.2f}  {r.prop_flagged:12.2f}"
          f"  {r.mean_log_kappa:14.1f}  {r.max_shifted_log_kappa:17.4f}")
