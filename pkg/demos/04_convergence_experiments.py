"""Desk-scale convergence studies: the scaled geometric series converges
to twice the kernel transform, and the scaled one-step deviation
(L_n f - f)/nu converges to psi f''/2, at visible first-order rates.

The same columns are available from the command line, e.g.

    opgeom geom --family bernstein --function e1 -o geom.csv
    opgeom voronovskaya --family durrmeyer --rho 1 --function e4

Run:  python demos/04_convergence_experiments.py
"""

from opgeom import ExperimentConfig, run_experiment


def show(title, cfg, fmt="  n={n:>2}  error {e:.5e}"):
    rep = run_experiment(cfg)
    print(title)
    prev = None
    for row in rep.rows:
        ratio = "" if prev is None else f"   ratio {row[1] / prev:.3f}"
        print(fmt.format(n=row[0], e=row[1]) + ratio)
        prev = row[1]
    return rep


show("Geometric series versus the kernel transform (bernstein, f = e1):",
     ExperimentConfig(experiment="geom", family="bernstein",
                      n_list=(4, 8, 16, 32), function="e1"))

show("\nSame study for the symmetrized series family (f = sin_pi):",
     ExperimentConfig(experiment="geom", family="mkz-symmetric",
                      n_list=(4, 8), function="sin_pi"))

show("\nOne-step asymptotics (bernstein, f = e4): error of "
     "(L_n f - f)/nu - psi f''/2:",
     ExperimentConfig(experiment="voronovskaya", family="bernstein",
                      n_list=(4, 8, 16, 32), function="e4"))

rep = show("\nReverse direction (durrmeyer, f = e3): premise residual per n,",
           ExperimentConfig(experiment="inverse-voronovskaya",
                            family="durrmeyer", rho=1.0,
                            n_list=(4, 8, 16, 32), function="e3"))
print(f"  plus the n-independent reconstruction residual "
      f"{rep.rows[0][2]:.2e} of (f - B1 f) + 2 F(f''/2) = 0.")

print("\nLittle-o condition table (bernstein): each column shrinks with n.")
rep = run_experiment(ExperimentConfig(experiment="conditions",
                                      family="bernstein", n_list=(4, 8, 16)))
print("   n   sup M4/M2      eta        mixed bound")
for (n, m42, eta, c55) in rep.rows:
    print(f"  {n:2d}   {m42:.6f}    {eta:.1e}    {c55:.1e}")
