"""Discrete gradient, its adjoint, TV seminorms and the shrinkage prox.

A gradient field is stored with the two difference components stacked on
axis -3: ``p[..., 0, :, :]`` holds the x (column) forward differences and
``p[..., 1, :, :]`` the y (row) ones.  Multi-channel fields are stacks of
shape ``(m, 2, h, w)``.  All differences wrap periodically, matching the
circular-convolution framework.
"""

from __future__ import annotations

import numpy as np

#: Convolution taps realizing the forward differences (see tests).
FORWARD_DIFF_X = np.array([[1.0, -1.0, 0.0]])
FORWARD_DIFF_Y = np.array([[1.0], [-1.0], [0.0]])


def grad(u) -> np.ndarray:
    """Forward-difference gradient with periodic wrap.

    ``gx[k, l] = u[k, (l+1) % w] - u[k, l]`` and likewise for rows.
    Operates on the trailing two axes, so channel stacks pass through.
    """
    f = np.asarray(u, dtype=np.float64)
    gx = np.roll(f, -1, axis=-1) - f
    gy = np.roll(f, -1, axis=-2) - f
    return np.stack((gx, gy), axis=-3)


def grad_adjoint(p) -> np.ndarray:
    """Adjoint of :func:`grad`: backward differences, the negated divergence.

    Satisfies ``<grad(u), p> == <u, grad_adjoint(p)>`` exactly.
    """
    q = np.asarray(p, dtype=np.float64)
    px = q[..., 0, :, :]
    py = q[..., 1, :, :]
    return (np.roll(px, 1, axis=-1) - px) + (np.roll(py, 1, axis=-2) - py)


def tv_aniso(p) -> float:
    """Anisotropic TV of a field: the plain l1 sum over all components."""
    return float(np.abs(p).sum())


def tv_iso(p) -> float:
    """Isotropic TV: sum of per-pixel gradient magnitudes."""
    q = np.asarray(p, dtype=np.float64)
    return float(np.sqrt((q * q).sum(axis=-3)).sum())


def vtv(p, weights=None, isotropic: bool = False) -> float:
    """Weighted vector TV of a channel stack shaped ``(m, 2, h, w)``.

    Sums the per-channel TV with weight ``weights[i]`` (ones if omitted).
    """
    q = np.asarray(p, dtype=np.float64)
    measure = tv_iso if isotropic else tv_aniso
    per_channel = np.array([measure(q[i]) for i in range(q.shape[0])])
    if weights is None:
        return float(per_channel.sum())
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (q.shape[0],):
        raise ValueError(f"need {q.shape[0]} weights, got shape {w.shape}")
    return float((w * per_channel).sum())


def shrink(v, threshold) -> np.ndarray:
    """Component-wise soft threshold ``sgn(x) * max(|x| - T, 0)``.

    The exact minimizer of ``T*|d| + (d - v)^2 / 2`` per component, with
    ``sgn(0) = 0``.  ``threshold`` broadcasts, so per-channel values can be
    passed as a ``(m, 1, 1, 1)`` array.
    """
    x = np.asarray(v, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def shrink_iso(p, threshold) -> np.ndarray:
    """Isotropic shrinkage: soft-threshold the per-pixel gradient magnitude.

    Shrinks the length of each ``(gx, gy)`` vector by ``threshold``, keeping
    its direction.  ``threshold`` broadcasts against the ``(..., h, w)``
    magnitude array.
    """
    q = np.asarray(p, dtype=np.float64)
    mag = np.sqrt((q * q).sum(axis=-3))
    scale = np.zeros_like(mag)
    np.divide(np.maximum(mag - threshold, 0.0), mag, out=scale, where=mag > 0)
    return q * np.expand_dims(scale, axis=-3)
