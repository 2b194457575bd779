"""Tight-frame feature operators from small convolution filter banks.

A filter bank maps an image to a stack of feature images, one circular
convolution per channel.  The piecewise-linear B-spline bank built here has
nine 3x3 kernels (one lowpass, eight detail) and satisfies the perfect
reconstruction identity: analysis followed by adjoint synthesis is the
identity, which :func:`verify_uep` checks in the frequency domain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ChannelMismatchError
from .image import as_kernel, conv_adjoint, conv_circular, kernel_symbol

LOWPASS = "lowpass"
DETAIL = "detail"


@dataclass
class FilterBank:
    """An ordered set of convolution kernels with per-channel role tags.

    Treated as immutable once constructed; build instances through
    :meth:`from_kernels` or :func:`bspline_bank`.
    """

    kernels: tuple
    roles: tuple

    @classmethod
    def from_kernels(cls, kernels, roles=None) -> "FilterBank":
        """Build a bank from kernel tap arrays.

        Roles default to ``lowpass`` for kernels with nonzero tap sum and
        ``detail`` otherwise.
        """
        ks = tuple(as_kernel(k) for k in kernels)
        if not ks:
            raise ChannelMismatchError("a filter bank needs at least one kernel")
        if roles is None:
            roles = tuple(
                LOWPASS if abs(float(k.sum())) > 1e-12 else DETAIL for k in ks
            )
        else:
            roles = tuple(roles)
            if len(roles) != len(ks):
                raise ChannelMismatchError(
                    f"{len(ks)} kernels but {len(roles)} roles"
                )
        return cls(kernels=ks, roles=roles)

    @property
    def m(self) -> int:
        """Channel count."""
        return len(self.kernels)


def bspline_bank() -> FilterBank:
    """The 9-channel piecewise-linear B-spline bank of 3x3 kernels.

    Built from the three filters

        h1 = [1, 2, 1] / 4,  h2 = sqrt(2)/4 * [1, 0, -1],  h3 = [-1, 2, -1] / 4

    as the outer products K_{3(i-1)+j} = outer(h_i, h_j) with h_i along rows.
    Channel 1 (K_1) is the lowpass; every other kernel has zero tap sum.
    """
    h1 = np.array([1.0, 2.0, 1.0]) / 4.0
    h2 = np.array([1.0, 0.0, -1.0]) * (math.sqrt(2.0) / 4.0)
    h3 = np.array([-1.0, 2.0, -1.0]) / 4.0
    filters = (h1, h2, h3)
    kernels = [np.outer(hi, hj) for hi in filters for hj in filters]
    roles = (LOWPASS,) + (DETAIL,) * 8
    return FilterBank.from_kernels(kernels, roles)


def identity_bank() -> FilterBank:
    """Single-channel bank whose only kernel is the identity.

    Reduces the feature-space model to plain TV on the image itself.
    """
    return FilterBank.from_kernels([np.array([[1.0]])], (LOWPASS,))


def analyze(u, bank: FilterBank) -> np.ndarray:
    """Feature stack of an image: channel i is ``conv_circular(u, K_i)``.

    Returns an ``(m, h, w)`` array.
    """
    f = np.asarray(u, dtype=np.float64)
    return np.stack([conv_circular(f, k) for k in bank.kernels])


def synthesize_adjoint(g, bank: FilterBank) -> np.ndarray:
    """Adjoint of :func:`analyze`: ``sum_i conv_adjoint(g_i, K_i)``.

    For a tight frame this inverts ``analyze`` exactly.
    """
    stack = np.asarray(g, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[0] != bank.m:
        raise ChannelMismatchError(
            f"expected {bank.m} channels, got stack shape {stack.shape}"
        )
    out = np.zeros(stack.shape[1:], dtype=np.float64)
    for i, k in enumerate(bank.kernels):
        out += conv_adjoint(stack[i], k)
    return out


def verify_uep(bank: FilterBank, width: int, height: int) -> float:
    """Max frequency-domain deviation of ``sum_i K_i^* K_i`` from identity.

    Zero (up to rounding) certifies that the bank is a tight frame with
    frame bound one on the given periodic grid.
    """
    total = np.zeros((height, width))
    for k in bank.kernels:
        sym = kernel_symbol(k, (height, width))
        total += np.abs(sym) ** 2
    return float(np.max(np.abs(total - 1.0)))


def save_bank(path, bank: FilterBank) -> None:
    """Write a bank as a JSON document (channel count, radii, row-major taps)."""
    doc = {
        "m": bank.m,
        "kernels": [
            {
                "radius": [(k.shape[0] - 1) // 2, (k.shape[1] - 1) // 2],
                "taps": k.tolist(),
            }
            for k in bank.kernels
        ],
        "roles": list(bank.roles),
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=1)


def load_bank(path) -> FilterBank:
    """Read a bank written by :func:`save_bank`."""
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    kernels = [np.array(entry["taps"], dtype=np.float64) for entry in doc["kernels"]]
    bank = FilterBank.from_kernels(kernels, tuple(doc["roles"]))
    if bank.m != doc["m"]:
        raise ChannelMismatchError(
            f"document claims m={doc['m']} but lists {bank.m} kernels"
        )
    return bank
