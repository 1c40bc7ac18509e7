# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled polar flow kernels.

Hot inner loops of the package: nodal injections and their angle/magnitude
partials over the sparse admittance structure.  Semantics are documented in
:mod:`h2margin._flowcore_py`, the pure-NumPy twin of this module.
"""

import numpy as np

cimport numpy as cnp

from libc.math cimport cos, sin

cnp.import_array()


def polar_injections(const long long[::1] rows, const long long[::1] cols,
                     const double[::1] gdata, const double[::1] bdata,
                     const double[::1] vm, const double[::1] va):
    cdef Py_ssize_t nnz = rows.shape[0]
    cdef Py_ssize_t n = vm.shape[0]
    cdef cnp.ndarray[double, ndim=1] p = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] q = np.zeros(n)
    cdef double[::1] pv = p
    cdef double[::1] qv = q
    cdef Py_ssize_t j
    cdef long long b, k
    cdef double th, cth, sth, vv
    for j in range(nnz):
        b = rows[j]
        k = cols[j]
        th = va[b] - va[k]
        cth = cos(th)
        sth = sin(th)
        vv = vm[b] * vm[k]
        pv[b] += vv * (gdata[j] * cth + bdata[j] * sth)
        qv[b] += vv * (gdata[j] * sth - bdata[j] * cth)
    return p, q


def polar_flow_terms(const long long[::1] rows, const long long[::1] cols,
                     const long long[::1] diag,
                     const double[::1] gdata, const double[::1] bdata,
                     const double[::1] vm, const double[::1] va):
    cdef Py_ssize_t nnz = rows.shape[0]
    cdef Py_ssize_t n = vm.shape[0]
    cdef cnp.ndarray[double, ndim=1] p = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] q = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] t1a = np.empty(nnz)
    cdef cnp.ndarray[double, ndim=1] t2a = np.empty(nnz)
    cdef cnp.ndarray[double, ndim=1] dp_dva = np.empty(nnz)
    cdef cnp.ndarray[double, ndim=1] dp_dvm = np.empty(nnz)
    cdef cnp.ndarray[double, ndim=1] dq_dva = np.empty(nnz)
    cdef cnp.ndarray[double, ndim=1] dq_dvm = np.empty(nnz)
    cdef double[::1] pv = p
    cdef double[::1] qv = q
    cdef double[::1] t1 = t1a
    cdef double[::1] t2 = t2a
    cdef double[::1] jpa = dp_dva
    cdef double[::1] jpv = dp_dvm
    cdef double[::1] jqa = dq_dva
    cdef double[::1] jqv = dq_dvm
    cdef Py_ssize_t j, i
    cdef long long b, k, d
    cdef double th, cth, sth, vv, e1, e2
    for j in range(nnz):
        b = rows[j]
        k = cols[j]
        th = va[b] - va[k]
        cth = cos(th)
        sth = sin(th)
        vv = vm[b] * vm[k]
        e1 = vv * (gdata[j] * cth + bdata[j] * sth)
        e2 = vv * (gdata[j] * sth - bdata[j] * cth)
        t1[j] = e1
        t2[j] = e2
        pv[b] += e1
        qv[b] += e2
    for j in range(nnz):
        k = cols[j]
        jpa[j] = t2[j]
        jpv[j] = t1[j] / vm[k]
        jqa[j] = -t1[j]
        jqv[j] = t2[j] / vm[k]
    for i in range(n):
        d = diag[i]
        jpa[d] = -qv[i] - vm[i] * vm[i] * bdata[d]
        jpv[d] = pv[i] / vm[i] + vm[i] * gdata[d]
        jqa[d] = pv[i] - vm[i] * vm[i] * gdata[d]
        jqv[d] = qv[i] / vm[i] - vm[i] * bdata[d]
    return p, q, dp_dva, dp_dvm, dq_dva, dq_dvm
