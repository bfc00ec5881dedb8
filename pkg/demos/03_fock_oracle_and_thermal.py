"""Truncated-Fock brute force against the closed-form variance.

The joint Hamiltonian is block-diagonal in photon number, so the exact
propagator is a stack of displaced-oscillator evolutions.  This script
cross-validates the closed form at desk scale (alpha = 2, k = 0.1), shows
the end-of-period recombination for thermal initial states, and prints the
reduced-field purity returning to one at integer periods.
"""

import numpy as np

from omsqueeze import PhysicalParams, closed_field_moments, evolve_closed, quantum_variance

params = PhysicalParams(alpha=2.0, k=0.1)
tau = params.tau

times = np.array([0.5, 1.0, 2.5, 3.0]) * tau
moments = closed_field_moments(params, times)
print(" t/tau   Fock oracle      closed form      rel err")
for t, fm in zip(times, moments):
    ref = quantum_variance(0.0, t, params)
    got = fm.variance(0.0)
    print(f"{t / tau:5.1f}  {got:15.12f}  {ref:15.12f}  {abs(got - ref) / ref:.2e}")

print("\nthermal recombination at t = tau (Var(theta=0)):")
# larger occupations follow from the closed form; Fock-space brute force at
# nbar = 10 would need several hundred mechanical levels
for nbar in (0.0, 0.5, 1.0):
    p = params.with_(nbar_q=nbar)
    init = "vacuum" if nbar == 0 else ("thermal", nbar)
    fm = closed_field_moments(p, [tau], mech_init=init)[0]
    print(f"  nbar = {nbar:5.1f}: {fm.variance(0.0):.12f}")

for m in (1.0, 2.0):
    st = evolve_closed(params, m * tau)
    rho = st.reduced_field().matrix
    purity = float(np.real(np.trace(rho @ rho)))
    print(f"reduced-field purity at t = {m:g} tau: {purity:.10f}")
