# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled chain-product kernels.

Same contract as ``pure.py``. The matrices involved are small (d = 2^n for
n <= 12, typically 16-64 during training), so per-call Python and BLAS
dispatch overhead dominates; running the whole sweep in C with direct
zgemm/zgemv calls removes it.

BLAS is column-major: a row-major buffer for A is read by BLAS as A^T, so
A @ B is computed as (B^T A^T)^T by swapping the operand order, and
A^H @ x as conj(A^T @ conj(x)).
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport zgemm, zgemv

cnp.import_array()

ctypedef double complex zdouble


cdef inline void _matmul(zdouble* a, zdouble* b, zdouble* out, int d) noexcept nogil:
    # out = A @ B, all row-major d x d
    cdef char tn = b'N'
    cdef zdouble one = 1.0
    cdef zdouble zero = 0.0
    zgemm(&tn, &tn, &d, &d, &d, &one, b, &d, a, &d, &zero, out, &d)


cdef inline void _matvec(zdouble* a, zdouble* x, zdouble* out, int d) noexcept nogil:
    # out = A @ x for row-major A ('T' undoes the implicit transpose)
    cdef char tt = b'T'
    cdef zdouble one = 1.0
    cdef zdouble zero = 0.0
    cdef int inc = 1
    zgemv(&tt, &d, &d, &one, a, &d, x, &inc, &zero, out, &inc)


cdef inline void _matvec_adj(zdouble* a, zdouble* x, zdouble* out,
                             zdouble* work, int d) noexcept nogil:
    # out = A^H @ x = conj(A^T @ conj(x)) for row-major A
    cdef char tn = b'N'
    cdef zdouble one = 1.0
    cdef zdouble zero = 0.0
    cdef int inc = 1
    cdef int i
    for i in range(d):
        work[i] = x[i].real - x[i].imag * 1j
    zgemv(&tn, &d, &d, &one, a, &d, work, &inc, &zero, out, &inc)
    for i in range(d):
        out[i] = out[i].real - out[i].imag * 1j


def ordered_product(cnp.ndarray[zdouble, ndim=3, mode="c"] gates):
    cdef int k = gates.shape[0]
    cdef int d = gates.shape[1]
    a_arr = np.eye(d, dtype=np.complex128)
    b_arr = np.empty((d, d), dtype=np.complex128)
    cdef zdouble[:, ::1] a = a_arr
    cdef zdouble[:, ::1] b = b_arr
    cdef zdouble[:, :, ::1] g = gates
    cdef zdouble *src
    cdef zdouble *dst
    cdef zdouble *swp
    cdef int i
    if k == 0:
        return a_arr
    src = &a[0, 0]
    dst = &b[0, 0]
    with nogil:
        for i in range(k):
            _matmul(&g[i, 0, 0], src, dst, d)
            swp = src
            src = dst
            dst = swp
    # result lives in whichever buffer src points at after the last swap
    return a_arr if src == &a[0, 0] else b_arr


def prefix_suffix(cnp.ndarray[zdouble, ndim=3, mode="c"] gates):
    cdef int k = gates.shape[0]
    cdef int d = gates.shape[1]
    prefix_arr = np.empty((k, d, d), dtype=np.complex128)
    suffix_arr = np.empty((k, d, d), dtype=np.complex128)
    if k == 0:
        return prefix_arr, suffix_arr
    eye = np.eye(d, dtype=np.complex128)
    prefix_arr[k - 1] = eye
    suffix_arr[0] = eye
    cdef zdouble[:, :, ::1] prefix = prefix_arr
    cdef zdouble[:, :, ::1] suffix = suffix_arr
    cdef zdouble[:, :, ::1] g = gates
    cdef int i
    with nogil:
        for i in range(1, k):
            _matmul(&g[i - 1, 0, 0], &suffix[i - 1, 0, 0], &suffix[i, 0, 0], d)
        for i in range(k - 2, -1, -1):
            _matmul(&prefix[i + 1, 0, 0], &g[i + 1, 0, 0], &prefix[i, 0, 0], d)
    return prefix_arr, suffix_arr


def chain_states(cnp.ndarray[zdouble, ndim=3, mode="c"] gates,
                 cnp.ndarray[zdouble, ndim=1] psi0):
    cdef int k = gates.shape[0]
    cdef int d = gates.shape[1]
    out_arr = np.empty((k + 1, d), dtype=np.complex128)
    out_arr[0] = psi0
    cdef zdouble[:, ::1] out = out_arr
    cdef zdouble[:, :, ::1] g = gates
    cdef int i
    if k == 0:
        return out_arr
    with nogil:
        for i in range(k):
            _matvec(&g[i, 0, 0], &out[i, 0], &out[i + 1, 0], d)
    return out_arr


def adjoint_states(cnp.ndarray[zdouble, ndim=3, mode="c"] gates,
                   cnp.ndarray[zdouble, ndim=1] top):
    cdef int k = gates.shape[0]
    cdef int d = gates.shape[1]
    out_arr = np.empty((k + 1, d), dtype=np.complex128)
    out_arr[k] = top
    work_arr = np.empty(d, dtype=np.complex128)
    cdef zdouble[:, ::1] out = out_arr
    cdef zdouble[::1] work = work_arr
    cdef zdouble[:, :, ::1] g = gates
    cdef int i
    if k == 0:
        return out_arr
    with nogil:
        for i in range(k - 1, -1, -1):
            _matvec_adj(&g[i, 0, 0], &out[i + 1, 0], &out[i, 0], &work[0], d)
    return out_arr
