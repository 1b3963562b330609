"""Discrete inf-sup constants: stable and unstable choices side by side.

beta_hat is the smallest generalized singular value of the scheme's
bilinear form in the quadruple norm (|dw|_V'^2 + |w|_V^2 + |w(0)|^2 + |w(T)|^2).

    python3 demos/02_inf_sup_sweep.py
"""
import numpy as np

from spacetime_bnb import TimeGrid, bnb_report, make_contraction, make_form, make_spectral_triple

print("implicit Euler and dG(1), Phi = 0: beta_hat stays put as N and dim grow")
print(" dim    N   theta=1   dG(1)")
for dim in (4, 8, 16):
    tri = make_spectral_triple(dim, np.arange(1, dim + 1) ** 2)
    form, phi = make_form(tri), make_contraction("zero", tri)
    for N in (4, 16, 64):
        g = TimeGrid(1.0, N)
        a = bnb_report("theta:1", form, phi, tri, g).beta_hat
        b = bnb_report("dg:1", form, phi, tri, g).beta_hat
        print(f"{dim:4d} {N:4d}   {a:.4f}    {b:.4f}")

print()
print("Crank-Nicolson with periodic coupling: beta_hat <= 2/(k mu_n) collapses as dim grows")
print(" dim   beta_hat  witness  2/(k mu_n)")
for dim in (4, 16, 64):
    tri = make_spectral_triple(dim, np.arange(1, dim + 1) ** 2)
    g = TimeGrid(1.0, 8)
    r = bnb_report("theta:0.5", make_form(tri), make_contraction("identity", tri), tri, g)
    print(f"{dim:4d}   {r.beta_hat:.4f}   {r.witness_bound:.4f}   {2 / (g.k * tri.mu_n):.4f}")

print()
# theta = 0, A = 2 Id, k = T = 1, Phi = -Id: the step row repeats the coupling row
tri = make_spectral_triple(1, [1.0])
r = bnb_report("theta:0", make_form(tri, [[2.0]], alpha=2.0, M=2.0), make_contraction("neg-identity", tri),
               tri, TimeGrid(1.0, 1))
print("explicit Euler, Phi = -Id, A = 2: beta_hat =", r.beta_hat)
