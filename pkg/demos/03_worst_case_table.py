"""Worst-case sensitivity of every generator-load pair on the 9-bus network.

The worst case maximizes |J_ij| over every independent binding set of the
right cardinality - a finite search (66 candidates here), independent of
costs, limits, and loads. The argmax set is a certificate: rebuilding J from
it reproduces the tabulated value exactly.
"""

import numpy as np

import opfsens as ops

case = ops.read_case(ops.bundled_case_path())
net, params = ops.build_network(case)

report = ops.worst_case_all(net)
print(f"candidates: {report.candidates_total}, "
      f"independent: {report.candidates_valid}\n")

loads = [str(v) for v in net.vertex_order[net.n_gen:]]
print("worst-case |d gen_i / d load_j|  (rows: generators, cols: loads)")
print("          " + "".join(f"{l:>9}" for l in loads))
for i in range(net.n_gen):
    row = "".join(f"{report.cwc[i, j]:9.4f}" for j in range(net.n_load))
    print(f"gen {net.vertex_order[i]}    {row}")

# The largest entry and its certificate
i, j = np.unravel_index(report.cwc.argmax(), report.cwc.shape)
best = report.argmax[i][j]
print(f"\nlargest worst case: generator {net.vertex_order[i]} vs "
      f"load {net.vertex_order[net.n_gen + j]} = {report.cwc[i, j]:.4f}")
print("achieved by binding:", best.describe(net))
check = ops.jacobian_from_binding(net, best).jac[i, j]
print(f"certificate check: |J[{i},{j}]| = {abs(check):.6f}")

# Degenerate maxima are common; binding a leaf branch is the same constraint
# as binding the generator behind it, so several sets can tie.
val, argmax, ties = ops.tied_argmax_sets(net, 0, 3)
print(f"\npair (gen 1, load 7): worst case {val:.4f} achieved by "
      f"{len(ties)} equivalent sets:")
for t in ties:
    print("  ", t.describe(net))

# A realized operating point never exceeds the worst case (max property):
sol = ops.solve_opf(net, params, np.full(6, 0.3))
bset = ops.extract_binding_set(sol, net, params)
jac = np.abs(ops.jacobian_from_binding(net, bset).jac)
print(f"\nrealized |J| at a sample point <= worst case everywhere: "
      f"{bool((jac <= report.cwc + 1e-9).all())}")
