"""Pure numpy implementation of the resolvent moment kernels.

For diagonal resolvents ``p_i(z) = 1/(lam_i - zA(z))`` and
``q_i(z) = 1/(lam_i - zB(z))`` the kernels return quadrature sums such as

    PPQQ[k, i, j, l, m] = sum_z c_z p_i p_j q_l q_m

so that any trace of an alternating product of resolvents and fixed matrices
becomes a z-independent tensor contraction.  Every sum over ``z`` is a
batched matrix product, so BLAS does the heavy lifting.
"""
from __future__ import annotations

import numpy as np

VERDET_PATTERNS = ("PPQ", "PQQ", "PPQQ", "PPPQ", "PQQQ")


def _resolvents(lam, za, zb):
    lam = np.asarray(lam, dtype=float)
    p = 1.0 / (lam[:, None, :] - np.asarray(za)[None, :, None])
    q = 1.0 / (lam[:, None, :] - np.asarray(zb)[None, :, None])
    return p, q


def _outer(a, b):
    k, z = a.shape[:2]
    return (a[..., :, None] * b[..., None, :]).reshape(k, z, -1)


def pair_moment(lam, za, zb, c):
    """``PQ[k, i, j] = sum_z c_z p_i(z) q_j(z)``."""
    p, q = _resolvents(lam, za, zb)
    cp = np.asarray(c)[None, :, None] * p
    return np.matmul(cp.transpose(0, 2, 1), q)


def verdet_moments(lam, za, zb, c):
    """Moment tensors ``PPQ, PQQ, PPQQ, PPPQ, PQQQ`` for a k-chunk.

    Shapes are ``(K, nu, nu, nu)`` for the three-factor moments and
    ``(K, nu, nu, nu, nu)`` for the four-factor ones.
    """
    p, q = _resolvents(lam, za, zb)
    nk, _, nu = p.shape
    cp = np.asarray(c)[None, :, None] * p
    cpp = _outer(cp, p)
    qq = _outer(q, q)
    t = lambda x: x.transpose(0, 2, 1)  # noqa: E731
    ppq = np.matmul(t(cpp), q)
    pqq = np.matmul(t(cp), qq)
    ppqq = np.matmul(t(cpp), qq)
    pppq = np.matmul(t(_outer(cpp, p)), q)
    pqqq = np.matmul(t(cp), _outer(qq, q))
    s3 = (nk,) + (nu,) * 3
    s4 = (nk,) + (nu,) * 4
    return {
        "PPQ": ppq.reshape(s3),
        "PQQ": pqq.reshape(s3),
        "PPQQ": ppqq.reshape(s4),
        "PPPQ": pppq.reshape(s4),
        "PQQQ": pqqq.reshape(s4),
    }
