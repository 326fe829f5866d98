# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled classical RK4 for x' = M x + g * u(t) on a fixed step."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _deriv(const double[:, ::1] M, const double[::1] gain,
                        const double[::1] u, const double* x, double* out,
                        Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = gain[i] * u[i]
        for j in range(n):
            acc += M[i, j] * x[j]
        out[i] = acc


def rk4_linear(const double[:, ::1] M, const double[::1] gain,
               const double[:, ::1] stage_u, const double[::1] x0,
               double h, Py_ssize_t stride):
    """Integrate on ``N = (len(stage_u) - 1) // 2`` steps of size ``h``.

    ``stage_u[2k]`` is the control at step start, ``stage_u[2k+1]`` at the
    midpoint.  Returns the state every ``stride`` steps, endpoints included.
    """
    cdef Py_ssize_t n = M.shape[0]
    cdef Py_ssize_t N = (stage_u.shape[0] - 1) // 2
    if N % stride != 0:
        raise ValueError("step count must be a multiple of stride")
    out_arr = np.empty((N // stride + 1, n))
    cdef double[:, ::1] out = out_arr
    buf_arr = np.empty((6, n))
    cdef double[:, ::1] buf = buf_arr
    cdef double* x = &buf[0, 0]
    cdef double* k1 = &buf[1, 0]
    cdef double* k2 = &buf[2, 0]
    cdef double* k3 = &buf[3, 0]
    cdef double* k4 = &buf[4, 0]
    cdef double* tmp = &buf[5, 0]
    cdef Py_ssize_t step, i
    cdef double half = 0.5 * h, sixth = h / 6.0
    with nogil:
        for i in range(n):
            x[i] = x0[i]
            out[0, i] = x0[i]
        for step in range(N):
            _deriv(M, gain, stage_u[2 * step], x, k1, n)
            for i in range(n):
                tmp[i] = x[i] + half * k1[i]
            _deriv(M, gain, stage_u[2 * step + 1], tmp, k2, n)
            for i in range(n):
                tmp[i] = x[i] + half * k2[i]
            _deriv(M, gain, stage_u[2 * step + 1], tmp, k3, n)
            for i in range(n):
                tmp[i] = x[i] + h * k3[i]
            _deriv(M, gain, stage_u[2 * step + 2], tmp, k4, n)
            for i in range(n):
                x[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if (step + 1) % stride == 0:
                for i in range(n):
                    out[(step + 1) // stride, i] = x[i]
    return out_arr
