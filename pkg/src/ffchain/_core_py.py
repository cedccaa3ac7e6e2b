"""Pure-NumPy propagation kernel (fallback when the extension isn't built).

Exploits the chain structure of the generator: with H = [[K, C], [C^T, I]]
the RHS splits into dMx = C^T Mx + Mp and dMp = -K Mx - C Mp, where K is
tridiagonal-plus-coupling and C touches only the S and attachment rows, so
one RHS evaluation costs O(n^2) instead of a dense O(n^3) product.
"""

from __future__ import annotations

import math

import numpy as np

from .integrate import dp45
from .protocols import chain_coefficients


def propagate_chain(spec, params, schedule, config, t0, t1, m0, checkpoints,
                    breakpoints=()):
    """Returns (M(t1), [M(checkpoint), ...], n_steps)."""
    n = params.n_modes
    b = params.attach_site
    w2b = params.omega_B ** 2
    gbb = params.gamma_BB * w2b

    def rhs(t, Y):
        w2, csb, gauge = chain_coefficients(spec, params, schedule, t)
        X, P = Y[:n], Y[n:]
        out = np.empty_like(Y)
        outx, outp = out[:n], out[n:]
        np.copyto(outx, P)
        np.multiply(X, -w2b, out=outp)
        outp[0] = -w2 * X[0]
        if n > 2:
            outp[1:n - 1] += gbb * X[2:n]
            outp[2:n] += gbb * X[1:n - 1]
        outp[0] += csb * X[b]
        outp[b] += csb * X[0]
        if gauge is not None:
            g1, g2, g3, g4 = gauge
            outx[0] += g1 * X[0] + g3 * X[b]
            outx[b] += g2 * X[0] + g4 * X[b]
            outp[0] -= g1 * P[0] + g2 * P[b]
            outp[b] -= g3 * P[0] + g4 * P[b]
        return out

    max_step = config.max_step
    if spec.kind == "feff":
        max_step = min(max_step,
                       2.0 * math.pi / (spec.omega_floquet * config.floquet_substeps))

    recorded = []
    chk = list(checkpoints)

    def on_sample(t, y):
        if len(recorded) < len(chk) and t == chk[len(recorded)]:
            recorded.append(y.copy())

    M, stats = dp45(rhs, t0, t1, np.asarray(m0, dtype=float),
                    rtol=config.rel_tol, atol=config.abs_tol,
                    max_step=max_step, fixed_step=config.fixed_step,
                    must_hit=list(chk) + list(breakpoints),
                    on_sample=on_sample if chk else None)
    return M, recorded, stats.n_steps
