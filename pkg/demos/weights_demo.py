"""A_2 constants of power weights under grid refinement."""

from cmolip.weights import refinement_sweep

for gamma in (0.25, 0.5, 0.95, 1.0, 1.25):
    vals = refinement_sweep(gamma, 2.0, refinements=6)
    row = " ".join(f"{v:7.3f}" for v in vals)
    print(f"|x|^{gamma:<5}: {row}   growth {vals[-1] / vals[0]:.2f}x")
