# Exact reduced dynamics of a qubit coupled to a 400-level star bath, compared
# with the Markovian semigroup at fixed tau = lambda^2 t.  The error shrinks as
# lambda -> 0 until t = tau / lambda^2 runs past the bath's recurrence window.
from vanhove.davies import davies_K, vanhove_convergence
from vanhove.model import make_preset

m = make_preset("star-bath", n_levels=400, band=1.5)
gen = davies_K(m, use_finite=True)
rep = vanhove_convergence(m, gen, [0.5, 1.0], [0.4, 0.2, 0.1, 0.05])
print("recurrence window:", round(rep.metadata["window"], 1))
for lam, tau, err, flagged in rep.rows:
    note = "  (past window)" if flagged else ""
    print(f"lambda={lam:<5} tau={tau:<4} t={tau / lam**2:8.1f}  error={err:.4f}{note}")
