"""Small tour of the library: Catalan bound, a classical solution and z_m^B."""

import numpy as np

from momentsys import MomentSequence
from momentsys.moments import ratio
from momentsys.solver import ProblemSpec, check_h2, floquet_basis, residual
from momentsys.structure import planar_jordan, zmb_general

catalan = MomentSequence.catalan()
mu = 1.0
e = complex(ratio(catalan, mu))
B = np.array([[e, 1.0], [0.0, e]])
h2 = check_h2(B, catalan, mu)
print(f"Catalan Jordan block at mu = {mu}: C = {h2.bound_C:.12g} (attained at p = {h2.argmax_p})")

fac = MomentSequence.factorial()
spec = ProblemSpec(0.2 * np.array([[1.0, -1.0], [0.5, 2.0]]), np.diag([2.0, 3.5]), fac, N=25)
for y in floquet_basis(spec):
    print(f"Floquet solution mu = {y.mu.real:g}: s_1 = {np.round(y.coeffs[1], 6)}, residual = {residual(y, spec):.1e}")

M = zmb_general(np.array([[2.5, 1.0], [0.0, 2.5]]), fac)
z = 0.5 + 0.5j
print("z_m^B at z = 0.5+0.5i:\n", np.round(M.evaluate(z), 8))

A = np.array([[0.3, 0.1], [0.2, -0.1]])
res = planar_jordan(A, fac, 1.5, 20)
Bj = np.array([[1.5, 1.0], [0.0, 1.5]])
print(f"second Jordan solution (with log z): recursion residual {res.second.residual(A, Bj, fac):.1e}")
