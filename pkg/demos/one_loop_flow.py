"""Integrate the one-loop tadpole flow and fit the bound shape."""
import numpy as np

from fe_workbench.flow import bound_check_thm1, integrate_flow, integrated_closed, lam0_uniformity_probe

couplings = {"g4": 1.0}
lam0 = 100.0
table = integrate_flow("renormalized_at_0", np.geomspace(0.1, 50.0, 8), couplings, lam0)
for lam, v in zip(table.Lams, table.values[:, 0]):
    print(f"Lam={lam:8.3f}  Gamma2={v:+.6e}  closed form={integrated_closed(couplings, lam, lam0, table.boundary):+.6e}")

fit = bound_check_thm1(table, d=2, r=2)
print("degree-2 fit feasible:", fit["feasible"], "coefficients:", fit["coefficients"])

probe = lam0_uniformity_probe(0.5, 1.0, 4.0, doublings=3)
print("Lam0 differences:", ["%.2e" % d for d in probe["differences"]], "passed:", probe["passed"])
