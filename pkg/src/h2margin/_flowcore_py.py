"""Pure-NumPy implementation of the polar flow kernels.

The functions here mirror the compiled extension ``h2margin._flowcore`` and
are selected automatically when the extension is unavailable (or when
``H2MARGIN_PURE_PY=1`` is set).  Both backends share one contract:

* the admittance matrix is given in COO/CSR hybrid form -- ``rows``/``cols``
  are the coordinates of every stored entry (CSR ordering, diagonal present
  for every bus), ``gdata``/``bdata`` the real/imaginary parts;
* ``diag`` holds, for each bus, the position of its diagonal entry inside
  the nnz arrays;
* voltage magnitudes ``vm`` (pu) and angles ``va`` (rad) are dense arrays.

Injections follow the generator sign convention: ``p[b]`` is the active
power flowing from bus ``b`` into the network,

    p[b] = vm[b] * sum_k vm[k] * (G[b,k]*cos(va[b]-va[k]) + B[b,k]*sin(va[b]-va[k]))
    q[b] = vm[b] * sum_k vm[k] * (G[b,k]*sin(va[b]-va[k]) - B[b,k]*cos(va[b]-va[k]))

which is the rectangular form of the polar-admittance sum used throughout
the package.
"""

from __future__ import annotations

import numpy as np


def polar_injections(rows, cols, gdata, bdata, vm, va):
    """Net nodal injections ``(p, q)`` for the given voltage state."""
    n = vm.shape[0]
    th = va[rows] - va[cols]
    vv = vm[rows] * vm[cols]
    cth = np.cos(th)
    sth = np.sin(th)
    p = np.bincount(rows, weights=vv * (gdata * cth + bdata * sth), minlength=n)
    q = np.bincount(rows, weights=vv * (gdata * sth - bdata * cth), minlength=n)
    return p, q


def polar_flow_terms(rows, cols, diag, gdata, bdata, vm, va):
    """Injections plus the four partial-derivative families.

    Returns
    -------
    p, q : (n,) float64
        Net injections into the network.
    dp_dva, dp_dvm, dq_dva, dq_dvm : (nnz,) float64
        Partial derivatives aligned with ``rows``/``cols``; entry ``j`` is
        the derivative of the injection at bus ``rows[j]`` with respect to
        the angle/magnitude at bus ``cols[j]`` (diagonal entries carry the
        own-bus terms).
    """
    n = vm.shape[0]
    th = va[rows] - va[cols]
    vv = vm[rows] * vm[cols]
    cth = np.cos(th)
    sth = np.sin(th)
    t1 = vv * (gdata * cth + bdata * sth)
    t2 = vv * (gdata * sth - bdata * cth)
    p = np.bincount(rows, weights=t1, minlength=n)
    q = np.bincount(rows, weights=t2, minlength=n)

    vc = vm[cols]
    dp_dva = t2.copy()
    dp_dvm = t1 / vc
    dq_dva = -t1
    dq_dvm = t2 / vc
    # own-bus corrections (diagonal entries)
    gd = gdata[diag]
    bd = bdata[diag]
    dp_dva[diag] = -q - vm * vm * bd
    dp_dvm[diag] = p / vm + vm * gd
    dq_dva[diag] = p - vm * vm * gd
    dq_dvm[diag] = q / vm - vm * bd
    return p, q, dp_dva, dp_dvm, dq_dva, dq_dvm
