#!/usr/bin/env python3
"""
The step-ratio threshold gamma**(sigma) and the kernel behind it.

The energy estimate hinges on the scalar kernel

    G(s, z) = (2 + 4*sigma*s - (2*sigma-1)*s^{3/2})/(1+s)
              - (2*sigma-1)*z^{3/2}/(1+z)

staying nonnegative when both the current and the next step ratio lie
below gamma**(sigma), the positive root of G(z, z) = 0.  At sigma = 1
the root is the advertised 4.8645...; at sigma = 1/2 the kernel is the
constant 2, so any ratio is admissible.

The second half samples the pointwise inequality that G certifies and
shows the margin collapsing exactly at the threshold.
"""
import math

import numpy as np

from savflow import bdf2_coeffs, g_stability, gamma_star_star, history_weight

print(f"{'sigma':>6s} {'gamma**':>12s}   G(root, root)")
for sigma in (0.5, 0.6, 0.75, 0.9, 1.0):
    g2s = gamma_star_star(sigma)
    if math.isinf(g2s):
        print(f"{sigma:6.2f} {'inf':>12s}   (kernel = 2 everywhere)")
    else:
        print(f"{sigma:6.2f} {g2s:12.6f}   {g_stability(g2s, g2s, sigma):+.2e}")

z = gamma_star_star(1.0)
print(f"\nat sigma = 1 the root solves 1 + 2z = z^(3/2): "
      f"residual {abs(1 + 2 * z - z ** 1.5):.2e}")

# The lemma behind the energy estimate:
#   d1*(a_np1 phi2 + a_n phi1 + a_nm1 phi0)
#     >= w(g2) d1^2/dt - w(g1) d0^2/dt_old + G(g1,g2) d1^2/(2 dt).
# Since the stencil coefficients sum to zero, the margin is a quadratic
# form in the increments (d0, d1) alone -- and w, G are *exactly* the
# completion-of-squares constants, so the form is a perfect square for
# every ratio (smallest eigenvalue zero to roundoff).  What expires at
# gamma** is not the identity but its usefulness: the telescoping
# argument drops the G-term, which needs G(g, g) >= 0.
sigma, dt = 1.0, 1e-2
print(f"\n{'g1 = g2':>8s} {'min eig of margin form':>24s} {'G(g, g)':>10s}")
for g in (1.0, 3.0, 4.5, z, 5.2, 6.0):
    a = bdf2_coeffs(g, sigma, dt)
    w = history_weight(g, sigma)
    q11 = w * g                                       # d0^2 coefficient
    q22 = a.a_np1 * dt - w - g_stability(g, g, sigma) / 2.0
    q12 = -a.a_nm1 * dt / 2.0                         # d0*d1, symmetrized
    eig = np.linalg.eigvalsh(np.array([[q11, q12], [q12, q22]])).min()
    mark = "" if g <= z else "   <- dissipation sign lost"
    print(f"{g:8.4f} {eig:24.3e} {g_stability(g, g, sigma):+10.4f}{mark}")
