"""Theta weights of the three four-leaf trees and a tree amplitude."""
from fe_workbench.momenta import symmetric_point
from fe_workbench.trees import amplitude_Q, enumerate_trees, theta_set

w = (0, 1, 0, 0)
cfg = symmetric_point(4, 1.0, seed=0)
for tree in enumerate_trees(["A"] * 4):
    weights = [tw.theta for tw in theta_set(tree, w)]
    print(tree.topology.key, weights)
    for lam in (0.1, 1.0, 10.0):
        print(f"    Lam={lam:5.1f}  Q={amplitude_Q(tree, w, cfg, lam):.4e}")
