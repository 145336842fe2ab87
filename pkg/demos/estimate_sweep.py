"""Sweep two inequality cases on small grids and print the fitted constants."""
from fe_workbench.estimates import verify

for case, grid in (("int7", {"p": [0.1, 1.0, 10.0], "Lamp": [0.1, 1.0]}),
                   ("dS", {"Lam": [1.0], "Lam0_ratio": [10.0]})):
    rep = verify(case, grid)
    print(f"{case}: {rep.points} points, fitted constant {rep.fitted_constant:.4g}, "
          f"max ratio to stated constant {rep.max_ratio:.4g}, passed {rep.passed}")
