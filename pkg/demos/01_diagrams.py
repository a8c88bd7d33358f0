# Diagram expansion of the Dyson kernel integrand, checked against the
# brute-force nested commutators.
import numpy as np

from vanhove.diagram import NoncrossingPartition, diagram_integrand_reduced, enumerate_nc, nc_count, render_diagram
from vanhove.dyson import dyson_integrand_reduced
from vanhove.model import make_preset

# interval partitions of (0..n) into blocks of length >= 2
for n in range(1, 5):
    print(n, nc_count(n), [str(d) for d in enumerate_nc(n)])

# one term of the n=4 expansion, drawn as text
print(render_diagram(4, {2, 4}, NoncrossingPartition.parse("0-1/2-5")))

m = make_preset("random", seed=3)
rng = np.random.default_rng(0)
for n in (1, 2, 3):
    z = np.concatenate([[0.0], np.sort(rng.uniform(0, 3, n + 1))])
    a = dyson_integrand_reduced(m, z)[0]
    b = diagram_integrand_reduced(m, z)[0]
    print(f"n={n}  |dyson - diagram| = {np.abs(a - b).max():.2e}  (|dyson| = {np.abs(a).max():.3f})")
