"""Parse the bundled 9-bus case, solve the dispatch LP, inspect the solution.

The model: an undirected graph whose vertices split into generator and load
buses, edge weights are branch susceptances (1/reactance), and the dispatch
problem is a linear program over generations and voltage angles. Everything
downstream (sensitivities, worst cases) is built on this.
"""

import opfsens as ops

case = ops.read_case(ops.bundled_case_path())
print(f"baseMVA = {case.base_mva}, {case.n_bus} buses, "
      f"{case.n_gen} generators, {case.n_branch} branches")

net, params = ops.build_network(case)
print("\ninternal vertex order (generators first):", net.vertex_order)
print("generator limits (p.u.):", params.gen_lower, "to", params.gen_upper)
print("linear costs:", params.cost)

# Laplacian sanity: rows sum to zero, L = C B C'
print("\nmax |Laplacian row sum| =", abs(net.laplacian.sum(axis=1)).max())

loads = ops.nominal_loads(case, net)
print("\nnominal loads (p.u.):", loads)

sol = ops.solve_opf(net, params, loads)
print("\noptimal dispatch:")
for i in range(net.n_gen):
    lo, hi = params.gen_lower[i], params.gen_upper[i]
    tag = " (at lower limit)" if abs(sol.gen[i] - lo) < 1e-7 else \
          " (at upper limit)" if abs(sol.gen[i] - hi) < 1e-7 else ""
    print(f"  generator {net.vertex_order[i]}: {sol.gen[i]:.4f}{tag}")
print(f"objective = {sol.objective:.4f}")

print("\nbranch flows (p.u.):")
for e in range(net.n_edge):
    u, v = net.edge_label(e)
    print(f"  ({u},{v}): {sol.flows[e]:+.4f}  limit ±{params.flow_upper[e]:.2f}")

# The solver returns dual multipliers; the KKT report checks them directly.
kkt = ops.kkt_residuals(sol, net, params, loads)
print(f"\nKKT residuals: stationarity {kkt.stationarity_theta:.2e} / "
      f"{kkt.stationarity_gen:.2e}, complementarity {kkt.complementarity:.2e}")

reg = ops.check_regularity(sol)
print(f"nonzero inequality duals: {reg.nonzero_inequality_duals}, "
      f"unique optimum: {reg.unique}")

# Binding constraints at this operating point
bset = ops.extract_binding_set(sol, net, params)
print("\nbinding set:", bset.describe(net))
