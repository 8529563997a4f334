"""Central-difference gradient checking."""

import numpy as np


def numerical_gradient(f, x, step=1e-5, indices=None):
    """Central differences of scalar ``f`` at ``x`` (perturbed in place, then restored).

    Complex arrays are differentiated w.r.t. real and imaginary parts
    separately and the result packed as ``d/dRe + 1j * d/dIm``. If
    ``indices`` is given only those flat positions are evaluated and a
    1-D array is returned.
    """
    complex_ = np.iscomplexobj(x)
    flat = x.reshape(-1)
    if not np.shares_memory(flat, x):
        raise ValueError("x must be contiguous so it can be perturbed in place")
    positions = range(flat.size) if indices is None else indices
    out = np.zeros(len(positions) if indices is not None else flat.size,
                   dtype=np.complex128 if complex_ else np.float64)
    directions = (1.0, 1j) if complex_ else (1.0,)
    for k, i in enumerate(positions):
        for d in directions:
            orig = flat[i]
            flat[i] = orig + step * d
            hi = f()
            flat[i] = orig - step * d
            lo = f()
            flat[i] = orig
            deriv = (hi - lo) / (2 * step)
            out[k] += deriv if d == 1.0 else 1j * deriv
    return out if indices is not None else out.reshape(x.shape)


def relative_error(a, b) -> float:
    """max |a - b| scaled by the larger of max |a|, max |b|."""
    a = np.asarray(a)
    b = np.asarray(b)
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - b)) / scale)
