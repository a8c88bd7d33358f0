# Davies operator for the dephasing qubit: the spectral average is what makes
# exp(-tau K) completely positive.
import numpy as np
import scipy.linalg

from vanhove.davies import cptp_check, davies_K, gkls_semigroup
from vanhove.model import make_preset
from vanhove.opcore import apply

for name in ("dephasing", "star-bath", "random"):
    gen = davies_K(make_preset(name))
    avg = gen.averaged()
    for tau in (0.1, 1.0, 10.0):
        raw = cptp_check(scipy.linalg.expm(-tau * gen.k_reduced))[0]
        nat = cptp_check(gkls_semigroup(avg, tau))[0]
        print(f"{name:10s} tau={tau:5.1f}  min Choi eig: unaveraged {raw:+.3e}  averaged {nat:+.3e}")

# dephasing only shrinks the coherence
gen = davies_K(make_preset("dephasing")).averaged()
rho = np.array([[0.6, 0.4], [0.4, 0.4]], dtype=complex)
for tau in (0.0, 0.5, 1.0, 2.0):
    print(tau, np.round(apply(gkls_semigroup(gen, tau), rho).real, 4).tolist())
