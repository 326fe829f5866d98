"""Pure numpy fallback for the compiled RK4 kernel (same signature)."""
import numpy as np


def rk4_linear(M, gain, stage_u, x0, h, stride):
    M = np.asarray(M, dtype=float)
    gu = np.asarray(stage_u, dtype=float) * np.asarray(gain, dtype=float)
    N = (gu.shape[0] - 1) // 2
    if N % stride != 0:
        raise ValueError("step count must be a multiple of stride")
    out = np.empty((N // stride + 1, M.shape[0]))
    x = np.array(x0, dtype=float)
    out[0] = x
    half = 0.5 * h
    # overflow is reported by the caller's finiteness check, as with the compiled kernel
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(N):
            g0, gm, g1 = gu[2 * step], gu[2 * step + 1], gu[2 * step + 2]
            k1 = M @ x + g0
            k2 = M @ (x + half * k1) + gm
            k3 = M @ (x + half * k2) + gm
            k4 = M @ (x + h * k3) + g1
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if (step + 1) % stride == 0:
                out[(step + 1) // stride] = x
    return out
