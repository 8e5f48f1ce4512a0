"""From pointer scores to a bidirectional transport plan.

Builds a tiny score matrix by hand, gates it, turns it into a cost
matrix, and watches the alternating normalization sweep the plan toward
marginal feasibility. Shows why one direction alone can pile mass onto a
single chunk while the plan cannot.

Run from the repository root:  python3 demos/02_transport_plans.py
"""

import numpy as np

from chunkalign import GateVectors, ScoreMatrix, SinkhornConfig, build_cost, sinkhorn
from chunkalign.net import forward_unidirectional


def show(matrix, label):
    print(label)
    for row in matrix:
        print("   " + "  ".join(f"{v:6.3f}" for v in row))


def main():
    # two x chunks that both look like y chunk 1 (scores 2.0), y chunk 2
    # matching nothing well
    theta = np.array([[2.0, 0.1],
                      [2.0, 0.0]])
    scores = ScoreMatrix(theta=theta, b_x_phi=np.array([0.0, 0.0]), b_y_phi=np.array([0.0, 0.3]))
    gates = GateVectors(g_x=np.array([0.9, 0.9]), g_y=np.array([0.9, 0.6]))

    rows = forward_unidirectional(scores, gates).rows
    show(rows, "one-directional row distributions (columns: y1, y2, phi):")
    print("-> both x chunks point at y1; nothing stops the double assignment\n")

    cost = build_cost(scores, gates)
    show(cost.c, "row-shifted cost matrix (phi row/column last):")

    for sweeps in (1, 3, 10, 50):
        plan = sinkhorn(cost, SinkhornConfig(lam=0.6, iterations=sweeps))
        print(f"\nafter {sweeps:2d} sweeps: row residual {plan.row_residual:.2e}, "
              f"col residual {plan.col_residual:.2e}, entropy {plan.entropy:.3f}")
        show(plan.p, "plan:")

    plan = sinkhorn(cost, SinkhornConfig(lam=0.6, iterations=50))
    print("\n-> the column constraint forces the two x chunks apart:")
    print(f"   p(x1~y1) = {plan.p[0, 0]:.3f}, p(x2~y1) = {plan.p[1, 0]:.3f} "
          f"(their sum stays near 1), p(x2~y2) = {plan.p[1, 1]:.3f}")


if __name__ == "__main__":
    main()
