# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation kernel.

Hot loop of the simulator: U <- exp(-i H_k dt_k) @ U over a stack of
Hermitian matrices. 2x2 steps use the closed-form Pauli exponential; larger
dimensions go through LAPACK zheevd + BLAS zgemm, working in Fortran layout
throughout and transposing once at the boundaries.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt
from libc.stdlib cimport free, malloc
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

BACKEND_NAME = "compiled"

ctypedef double complex zcomplex


cdef inline void _step2(zcomplex* h, double dt, zcomplex* u) noexcept nogil:
    """u <- exp(-i h dt) @ u for a 2x2 Hermitian h (row-major)."""
    cdef double a = h[0].real
    cdef double c = h[3].real
    cdef zcomplex b = h[1]
    cdef double m = 0.5 * (a + c)
    cdef double da = 0.5 * (a - c)
    cdef double r = sqrt(da * da + b.real * b.real + b.imag * b.imag)
    cdef double cr = cos(r * dt)
    cdef double snc
    if r > 0.0:
        snc = sin(r * dt) / r
    else:
        snc = dt
    # exp(-i h dt) = e^{-i m dt} [cos(r dt) I - i sinc(r dt) (h - m I)]
    cdef zcomplex g = cos(m * dt) - 1j * sin(m * dt)
    cdef zcomplex e00 = g * (cr - 1j * snc * da)
    cdef zcomplex e01 = g * (-1j * snc * b)
    cdef zcomplex e10 = g * (-1j * snc * (b.real - 1j * b.imag))
    cdef zcomplex e11 = g * (cr + 1j * snc * da)
    cdef zcomplex u00 = u[0], u01 = u[1], u10 = u[2], u11 = u[3]
    u[0] = e00 * u00 + e01 * u10
    u[1] = e00 * u01 + e01 * u11
    u[2] = e10 * u00 + e11 * u10
    u[3] = e10 * u01 + e11 * u11


def propagate(h_stack, dts, u0):
    """Return U = exp(-i h_{n-1} dt_{n-1}) ... exp(-i h_0 dt_0) @ u0."""
    cdef cnp.ndarray[zcomplex, ndim=3, mode="c"] hs = np.ascontiguousarray(
        h_stack, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1, mode="c"] dt = np.ascontiguousarray(
        dts, dtype=np.float64)
    if hs.ndim != 3 or hs.shape[1] != hs.shape[2]:
        raise ValueError("h_stack must have shape (n, d, d)")
    if dt.shape[0] != hs.shape[0]:
        raise ValueError("dts must have one entry per step")

    cdef Py_ssize_t n = hs.shape[0]
    cdef Py_ssize_t d = hs.shape[1]
    cdef Py_ssize_t k, i, j

    cdef cnp.ndarray[zcomplex, ndim=2, mode="c"] u
    if d == 2:
        u = np.array(u0, dtype=np.complex128, order="C")
        if u.shape[0] != 2 or u.shape[1] != 2:
            raise ValueError("u0 dimension mismatch")
        with nogil:
            for k in range(n):
                _step2(&hs[k, 0, 0], dt[k], &u[0, 0])
        return np.asarray(u)

    # General case: work in Fortran (column-major) layout.
    # The step buffer receives conj(H), which column-major readers see as
    # H itself; eigenvectors then come out in proper Fortran columns.
    cdef cnp.ndarray[zcomplex, ndim=2, mode="fortran"] uf = np.asfortranarray(
        u0, dtype=np.complex128)
    if uf.shape[0] != d or uf.shape[1] != d:
        raise ValueError("u0 dimension mismatch")

    cdef int nd = <int> d
    cdef int info = 0
    cdef int lwork = -1, lrwork = -1, liwork = -1
    cdef zcomplex wq
    cdef double rwq
    cdef int iwq

    cdef zcomplex* A = <zcomplex*> malloc(d * d * sizeof(zcomplex))
    cdef zcomplex* B = <zcomplex*> malloc(d * d * sizeof(zcomplex))
    cdef zcomplex* Unew = <zcomplex*> malloc(d * d * sizeof(zcomplex))
    cdef double* w = <double*> malloc(d * sizeof(double))
    if A == NULL or B == NULL or Unew == NULL or w == NULL:
        free(A); free(B); free(Unew); free(w)
        raise MemoryError()

    # workspace query
    zheevd(b"V", b"L", &nd, A, &nd, w, &wq, &lwork, &rwq, &lrwork, &iwq, &liwork, &info)
    lwork = <int> wq.real
    lrwork = <int> rwq
    liwork = iwq
    cdef zcomplex* work = <zcomplex*> malloc(lwork * sizeof(zcomplex))
    cdef double* rwork = <double*> malloc(lrwork * sizeof(double))
    cdef int* iwork = <int*> malloc(liwork * sizeof(int))
    if work == NULL or rwork == NULL or iwork == NULL:
        free(A); free(B); free(Unew); free(w)
        free(work); free(rwork); free(iwork)
        raise MemoryError()

    cdef zcomplex one = 1.0, zero = 0.0
    cdef zcomplex ph
    cdef double ang
    cdef zcomplex* hrow
    cdef int fail = 0

    with nogil:
        for k in range(n):
            hrow = &hs[k, 0, 0]
            for i in range(d * d):
                A[i] = hrow[i].real - 1j * hrow[i].imag
            zheevd(b"V", b"L", &nd, A, &nd, w, work, &lwork, rwork, &lrwork,
                   iwork, &liwork, &info)
            if info != 0:
                fail = 1
                break
            # B = V * diag(exp(-i w dt)); Fortran columns are contiguous
            for j in range(d):
                ang = w[j] * dt[k]
                ph = cos(ang) - 1j * sin(ang)
                for i in range(d):
                    B[j * d + i] = A[j * d + i] * ph
            # Unew = (B @ V^H) @ U ; reuse A for the step matrix
            zgemm(b"N", b"C", &nd, &nd, &nd, &one, B, &nd, A, &nd, &zero, Unew, &nd)
            memcpy(B, Unew, d * d * sizeof(zcomplex))
            zgemm(b"N", b"N", &nd, &nd, &nd, &one, B, &nd, &uf[0, 0], &nd,
                  &zero, Unew, &nd)
            memcpy(&uf[0, 0], Unew, d * d * sizeof(zcomplex))

    free(A); free(B); free(Unew); free(w)
    free(work); free(rwork); free(iwork)
    if fail:
        raise RuntimeError("zheevd failed to converge")
    return np.ascontiguousarray(uf)
