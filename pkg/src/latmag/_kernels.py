"""Hot loops with a numba path and a pure-numpy fallback.

Set ``LATMAG_DISABLE_NUMBA=1`` (before import) to force the numpy path.
Both paths return identical results; tests compare them element-wise.
"""

import os

import numpy as np

try:
    if os.environ.get("LATMAG_DISABLE_NUMBA", "0") not in ("", "0"):
        raise ImportError("numba disabled by LATMAG_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

# forward stencil: (dj, dk, weight, amplitude); the backward half is mirrored
# entry(s, s+off) = -J * weight * (amplitude - i (A(s) + A(s+off)))
FORWARD_OFFSETS = ((1, 0), (2, 0), (0, 1), (0, 2))
_WEIGHTS = np.array([2.0 / 3.0, -1.0 / 12.0, 2.0 / 3.0, -1.0 / 12.0])
_AMPLITUDES = np.array([2.0, 1.0, 2.0, 1.0])


def stencil_upper_numpy(a_x, a_y, hopping):
    """Diagonal and forward-hop triplets of the five-point magnetic stencil.

    Returns ``(rows, cols, vals)`` with ``rows <= cols``; the lower triangle is
    the conjugate mirror.
    """
    n_y, n_x = a_x.shape
    idx = np.arange(n_x * n_y).reshape(n_y, n_x)
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [(hopping * (5.0 + a_x * a_x + a_y * a_y)).ravel().astype(np.complex128)]
    for n, (dj, dk) in enumerate(FORWARD_OFFSETS):
        comp = a_x if dj else a_y
        src = (slice(0, n_y - dk), slice(0, n_x - dj))
        dst = (slice(dk, n_y), slice(dj, n_x))
        phase = comp[src] + comp[dst]
        w = -hopping * _WEIGHTS[n]
        rows.append(idx[src].ravel())
        cols.append(idx[dst].ravel())
        vals.append((w * _AMPLITUDES[n] - 1j * (w * phase)).ravel())
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def grain_sums_numpy(values, labels, n_groups):
    return np.bincount(labels, weights=values, minlength=n_groups)


if HAVE_NUMBA:

    @njit(cache=True)
    def _stencil_upper_loop(a_x, a_y, hopping, weights, amplitudes):
        n_y, n_x = a_x.shape
        n_max = n_x * n_y * 5
        rows = np.empty(n_max, np.int64)
        cols = np.empty(n_max, np.int64)
        vals = np.empty(n_max, np.complex128)
        m = 0
        # same emission order as the numpy path: diagonal block, then one block per offset
        for k in range(n_y):
            for j in range(n_x):
                s = k * n_x + j
                rows[m] = s
                cols[m] = s
                vals[m] = hopping * (5.0 + a_x[k, j] * a_x[k, j] + a_y[k, j] * a_y[k, j]) + 0j
                m += 1
        for n in range(4):
            dj = 1 if n == 0 else (2 if n == 1 else 0)
            dk = 1 if n == 2 else (2 if n == 3 else 0)
            w = -hopping * weights[n]
            for k in range(n_y - dk):
                for j in range(n_x - dj):
                    if dj:
                        phase = a_x[k, j] + a_x[k + dk, j + dj]
                    else:
                        phase = a_y[k, j] + a_y[k + dk, j + dj]
                    rows[m] = k * n_x + j
                    cols[m] = (k + dk) * n_x + j + dj
                    vals[m] = complex(w * amplitudes[n], -(w * phase))
                    m += 1
        return rows[:m], cols[:m], vals[:m]

    @njit(cache=True)
    def _grain_sums_loop(values, labels, n_groups):
        out = np.zeros(n_groups)
        for i in range(values.shape[0]):
            out[labels[i]] += values[i]
        return out

    def stencil_upper_numba(a_x, a_y, hopping):
        return _stencil_upper_loop(
            np.ascontiguousarray(a_x, dtype=np.float64),
            np.ascontiguousarray(a_y, dtype=np.float64),
            float(hopping),
            _WEIGHTS,
            _AMPLITUDES,
        )

    def grain_sums_numba(values, labels, n_groups):
        return _grain_sums_loop(
            np.ascontiguousarray(values, dtype=np.float64),
            np.ascontiguousarray(labels, dtype=np.int64),
            int(n_groups),
        )

    stencil_upper = stencil_upper_numba
    grain_sums = grain_sums_numba
else:
    stencil_upper_numba = None
    grain_sums_numba = None
    stencil_upper = stencil_upper_numpy
    grain_sums = grain_sums_numpy

BACKEND = "numba" if HAVE_NUMBA else "numpy"
