"""
Checking the hand-written backward pass
=======================================

The network's gradients are derived by hand. Central finite differences
give an independent estimate for every parameter group on small random
networks, and the two must agree to a relative error below 1e-4.
"""

# %%
from featattn.gradcheck import run_gradcheck

report = run_gradcheck(20, seed=0)
worst = report.worst
print(f"{len(report.results)} parameter groups checked; worst {worst.rel_error:.2e} in {worst.group}")
print("passed:", report.passed)

# %%
# The same check is available from the command line:
#
#     featattn gradcheck --configs 20 --seed 0
