# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled resolvent moment kernels.

Same contract as :mod:`tbverdet._moments_py`.  Moments are symmetric under
permutations of repeated ``p`` (or ``q``) factors, so only index tuples in
non-decreasing order are accumulated; the remaining entries are filled by a
gather afterwards.  Loops run with the GIL released.
"""
import numpy as np

VERDET_PATTERNS = ("PPQ", "PQQ", "PPQQ", "PPPQ", "PQQQ")


cdef inline double complex _inv(double complex w) noexcept nogil:
    cdef double re = w.real, im = w.imag
    cdef double d = re * re + im * im
    return (re - 1j * im) / d


def pair_moment(lam, za, zb, c):
    cdef const double[:, ::1] L = np.ascontiguousarray(lam, dtype=np.float64)
    cdef const double complex[::1] A = np.ascontiguousarray(za, dtype=np.complex128)
    cdef const double complex[::1] B = np.ascontiguousarray(zb, dtype=np.complex128)
    cdef const double complex[::1] C = np.ascontiguousarray(c, dtype=np.complex128)
    cdef Py_ssize_t nk = L.shape[0], nu = L.shape[1], nz = A.shape[0]
    out = np.zeros((nk, nu * nu), dtype=np.complex128)
    cdef double complex[:, ::1] O = out
    cdef double complex[::1] pv = np.empty(nu, dtype=np.complex128)
    cdef double complex[::1] qv = np.empty(nu, dtype=np.complex128)
    cdef double complex* p = &pv[0]
    cdef double complex* q = &qv[0]
    cdef double complex* o
    cdef Py_ssize_t k, z, i, j
    cdef double complex cp
    with nogil:
        for k in range(nk):
            o = &O[k, 0]
            for z in range(nz):
                for i in range(nu):
                    p[i] = C[z] * _inv(L[k, i] - A[z])
                    q[i] = _inv(L[k, i] - B[z])
                for i in range(nu):
                    cp = p[i]
                    for j in range(nu):
                        o[i * nu + j] += cp * q[j]
    return out.reshape(nk, nu, nu)


def _canonical_gather(nu, groups):
    """Flat index of the sorted representative for every multi-index.

    ``groups`` lists the runs of positions whose indices may be permuted,
    for instance ``((0, 1), (2,))`` for ``PPQ``.
    """
    rank = sum(len(g) for g in groups)
    idx = np.indices((nu,) * rank).reshape(rank, -1)
    for g in groups:
        if len(g) > 1:
            idx[list(g)] = np.sort(idx[list(g)], axis=0)
    return np.ravel_multi_index(tuple(idx), (nu,) * rank)


def verdet_moments(lam, za, zb, c):
    cdef const double[:, ::1] L = np.ascontiguousarray(lam, dtype=np.float64)
    cdef const double complex[::1] A = np.ascontiguousarray(za, dtype=np.complex128)
    cdef const double complex[::1] B = np.ascontiguousarray(zb, dtype=np.complex128)
    cdef const double complex[::1] C = np.ascontiguousarray(c, dtype=np.complex128)
    cdef Py_ssize_t nk = L.shape[0], nu = L.shape[1], nz = A.shape[0]
    cdef Py_ssize_t n2 = nu * nu, n3 = n2 * nu, n4 = n3 * nu
    ppq_a = np.zeros((nk, n3), dtype=np.complex128)
    pqq_a = np.zeros((nk, n3), dtype=np.complex128)
    ppqq_a = np.zeros((nk, n4), dtype=np.complex128)
    pppq_a = np.zeros((nk, n4), dtype=np.complex128)
    pqqq_a = np.zeros((nk, n4), dtype=np.complex128)
    cdef double complex[:, ::1] PPQ = ppq_a
    cdef double complex[:, ::1] PQQ = pqq_a
    cdef double complex[:, ::1] PPQQ = ppqq_a
    cdef double complex[:, ::1] PPPQ = pppq_a
    cdef double complex[:, ::1] PQQQ = pqqq_a
    cdef double complex[::1] pv = np.empty(nu, dtype=np.complex128)
    cdef double complex[::1] cpv = np.empty(nu, dtype=np.complex128)
    cdef double complex[::1] qv = np.empty(nu, dtype=np.complex128)
    cdef double complex* p = &pv[0]
    cdef double complex* cp = &cpv[0]
    cdef double complex* q = &qv[0]
    cdef double complex *ppq
    cdef double complex *pqq
    cdef double complex *ppqq
    cdef double complex *pppq
    cdef double complex *pqqq
    cdef Py_ssize_t k, z, i, j, m, l, o3, o4
    cdef double complex cpp, cpq, cppp, cppq, cpqq
    with nogil:
        for k in range(nk):
            ppq = &PPQ[k, 0]
            pqq = &PQQ[k, 0]
            ppqq = &PPQQ[k, 0]
            pppq = &PPPQ[k, 0]
            pqqq = &PQQQ[k, 0]
            for z in range(nz):
                for i in range(nu):
                    p[i] = _inv(L[k, i] - A[z])
                    cp[i] = C[z] * p[i]
                    q[i] = _inv(L[k, i] - B[z])
                for i in range(nu):
                    # P Q Q and P Q Q Q: symmetric in the q indices
                    for j in range(nu):
                        cpq = cp[i] * q[j]
                        o3 = (i * nu + j) * nu
                        for m in range(j, nu):
                            pqq[o3 + m] += cpq * q[m]
                            cpqq = cpq * q[m]
                            o4 = (o3 + m) * nu
                            for l in range(m, nu):
                                pqqq[o4 + l] += cpqq * q[l]
                    # P P Q, P P P Q and P P Q Q: symmetric in the p indices
                    for j in range(i, nu):
                        cpp = cp[i] * p[j]
                        o3 = (i * nu + j) * nu
                        for m in range(nu):
                            ppq[o3 + m] += cpp * q[m]
                            cppq = cpp * q[m]
                            o4 = (o3 + m) * nu
                            for l in range(m, nu):
                                ppqq[o4 + l] += cppq * q[l]
                        for m in range(j, nu):
                            cppp = cpp * p[m]
                            o4 = (o3 + m) * nu
                            for l in range(nu):
                                pppq[o4 + l] += cppp * q[l]
    s3 = (nk, nu, nu, nu)
    s4 = (nk, nu, nu, nu, nu)
    return {
        "PPQ": ppq_a[:, _canonical_gather(nu, ((0, 1), (2,)))].reshape(s3),
        "PQQ": pqq_a[:, _canonical_gather(nu, ((0,), (1, 2)))].reshape(s3),
        "PPQQ": ppqq_a[:, _canonical_gather(nu, ((0, 1), (2, 3)))].reshape(s4),
        "PPPQ": pppq_a[:, _canonical_gather(nu, ((0, 1, 2), (3,)))].reshape(s4),
        "PQQQ": pqqq_a[:, _canonical_gather(nu, ((0,), (1, 2, 3)))].reshape(s4),
    }
