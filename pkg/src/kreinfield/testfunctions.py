"""Smooth rapidly decaying test functions with closed-form calculus.

The working family is

    f(x) = p(x - c) * exp(-|x - c|^2 / (2 w^2)) * exp(i b.(x - c))

with a complex polynomial p, center c, width w and modulation frequency b.
The family is closed under differentiation, complex conjugation, argument
flips, translation, products and the Fourier transform, so norms, moments
and transforms used elsewhere in the package are exact up to round-off.

Fourier convention used throughout the package:

    Ff(k) = (2 pi)^(-d/2) * integral exp(-i k.x) f(x) dx.

Multi-point test functions are tensor products of one-point factors with a
complex prefactor (`TensorTestFunction`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

MultiIndex = Tuple[int, ...]
Coeffs = Dict[MultiIndex, complex]

_COEFF_TOL = 0.0  # keep exact zeros out of the dicts


def _clean(coeffs: Coeffs) -> Coeffs:
    return {b: c for b, c in coeffs.items() if c != 0}


def poly_mul(a: Coeffs, b: Coeffs) -> Coeffs:
    out: Coeffs = {}
    for ba, ca in a.items():
        for bb, cb in b.items():
            key = tuple(x + y for x, y in zip(ba, bb))
            out[key] = out.get(key, 0j) + ca * cb
    return _clean(out)


def poly_shift(coeffs: Coeffs, delta: np.ndarray) -> Coeffs:
    """Coefficients of p(u + delta) given those of p(u)."""
    d = len(delta)
    out: Coeffs = dict(coeffs)
    for axis in range(d):
        if delta[axis] == 0:
            continue
        nxt: Coeffs = {}
        for beta, c in out.items():
            m = beta[axis]
            for j in range(m + 1):
                key = beta[:axis] + (j,) + beta[axis + 1:]
                nxt[key] = nxt.get(key, 0j) + c * math.comb(m, j) * delta[axis] ** (m - j)
        out = nxt
    return _clean(out)


def _gauss_moment(m: int, s: float) -> float:
    """integral u^m exp(-u^2 / s^2) du over the line (0 for odd m)."""
    if m % 2:
        return 0.0
    return s ** (m + 1) * math.gamma((m + 1) / 2)


@dataclass(frozen=True)
class TestFunction:
    __test__ = False  # not a pytest class

    dim: int
    center: Tuple[float, ...]
    width: float
    coeffs: Coeffs = field(default_factory=lambda: {})
    freq: Tuple[float, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")
        c = np.asarray(self.center, dtype=float)
        if c.shape != (self.dim,):
            raise ValueError("center has wrong dimension")
        object.__setattr__(self, "center", tuple(c))
        if self.freq is None:
            object.__setattr__(self, "freq", (0.0,) * self.dim)
        else:
            b = np.asarray(self.freq, dtype=float)
            if b.shape != (self.dim,):
                raise ValueError("freq has wrong dimension")
            object.__setattr__(self, "freq", tuple(b))
        cc = {}
        for beta, coef in self.coeffs.items():
            if len(beta) != self.dim or any(m < 0 for m in beta):
                raise ValueError(f"bad multi-index {beta}")
            cc[tuple(int(m) for m in beta)] = complex(coef)
        object.__setattr__(self, "coeffs", cc)

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def gaussian(center, width: float, amplitude: complex = 1.0, freq=None) -> "TestFunction":
        center = tuple(np.atleast_1d(np.asarray(center, dtype=float)))
        d = len(center)
        return TestFunction(d, center, width, {(0,) * d: amplitude}, freq)

    def degree(self) -> int:
        return max((sum(b) for b in self.coeffs), default=0)

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 1 and self.dim > 1 or x.ndim == 0
        u = np.atleast_2d(x.reshape(-1, self.dim)) - np.asarray(self.center)
        val = np.zeros(u.shape[0], dtype=complex)
        for beta, c in self.coeffs.items():
            mono = np.ones(u.shape[0])
            for ax, m in enumerate(beta):
                if m:
                    mono = mono * u[:, ax] ** m
            val += c * mono
        r2 = np.sum(u * u, axis=1)
        phase = u @ np.asarray(self.freq)
        val = val * np.exp(-r2 / (2 * self.width**2) + 1j * phase)
        if scalar:
            return val[0]
        return val.reshape(x.shape[:-1] if x.ndim > 1 else x.shape)

    # -- exact calculus ------------------------------------------------------

    def derivative(self, axis: int) -> "TestFunction":
        """Partial derivative along one axis, in closed form."""
        w2 = self.width**2
        b_ax = self.freq[axis]
        out: Coeffs = {}
        for beta, c in self.coeffs.items():
            m = beta[axis]
            if m:
                key = beta[:axis] + (m - 1,) + beta[axis + 1:]
                out[key] = out.get(key, 0j) + c * m
            if b_ax:
                out[beta] = out.get(beta, 0j) + 1j * b_ax * c
            key = beta[:axis] + (m + 1,) + beta[axis + 1:]
            out[key] = out.get(key, 0j) - c / w2
        return TestFunction(self.dim, self.center, self.width, _clean(out), self.freq)

    def derivative_multi(self, alpha: MultiIndex) -> "TestFunction":
        f = self
        for ax, m in enumerate(alpha):
            for _ in range(m):
                f = f.derivative(ax)
        return f

    def conjugate(self) -> "TestFunction":
        return TestFunction(
            self.dim, self.center, self.width,
            {b: np.conj(c) for b, c in self.coeffs.items()},
            tuple(-b for b in self.freq),
        )

    def flip(self) -> "TestFunction":
        """f(-x)."""
        return TestFunction(
            self.dim,
            tuple(-c for c in self.center),
            self.width,
            {b: c * (-1) ** sum(b) for b, c in self.coeffs.items()},
            tuple(-b for b in self.freq),
        )

    def translate(self, shift) -> "TestFunction":
        """f(x - shift)."""
        shift = np.asarray(shift, dtype=float)
        return TestFunction(
            self.dim, tuple(np.asarray(self.center) + shift), self.width,
            self.coeffs, self.freq,
        )

    def modulate(self, b_extra) -> "TestFunction":
        """exp(i b_extra.x) * f(x)."""
        b_extra = np.asarray(b_extra, dtype=float)
        phase = np.exp(1j * float(b_extra @ np.asarray(self.center)))
        return TestFunction(
            self.dim, self.center, self.width,
            {b: c * phase for b, c in self.coeffs.items()},
            tuple(np.asarray(self.freq) + b_extra),
        )

    def scale(self, factor: complex) -> "TestFunction":
        return TestFunction(
            self.dim, self.center, self.width,
            {b: c * factor for b, c in self.coeffs.items()}, self.freq,
        )

    def __add__(self, other: "TestFunction") -> "TestFunction":
        """Sum of two members sharing center, width and frequency."""
        if (self.dim, self.center, self.width, self.freq) != (
            other.dim, other.center, other.width, other.freq,
        ):
            raise ValueError("can only add test functions with a common envelope")
        out = dict(self.coeffs)
        for b, c in other.coeffs.items():
            out[b] = out.get(b, 0j) + c
        return TestFunction(self.dim, self.center, self.width, out, self.freq)

    def product(self, other: "TestFunction") -> "TestFunction":
        """Pointwise product; the result is again in the family."""
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        w1s, w2s = self.width**2, other.width**2
        ws = 1.0 / (1.0 / w1s + 1.0 / w2s)
        c1, c2 = np.asarray(self.center), np.asarray(other.center)
        cnew = ws * (c1 / w1s + c2 / w2s)
        # residual Gaussian factor from completing the square
        amp = math.exp(-float(np.sum((c1 - c2) ** 2)) / (2 * (w1s + w2s)))
        p1 = poly_shift(self.coeffs, cnew - c1)
        p2 = poly_shift(other.coeffs, cnew - c2)
        prod = poly_mul(p1, p2)
        b1, b2 = np.asarray(self.freq), np.asarray(other.freq)
        phase = amp * np.exp(1j * float(b1 @ (cnew - c1) + b2 @ (cnew - c2)))
        return TestFunction(
            self.dim, tuple(cnew), math.sqrt(ws),
            {b: c * phase for b, c in prod.items()},
            tuple(b1 + b2),
        )

    def fourier(self) -> "TestFunction":
        """Fourier transform (2 pi)^(-d/2) integral exp(-ik.x) f(x) dx.

        Returns a member of the same family with width 1/w, centered at the
        modulation frequency and modulated by the old center.
        """
        d, w = self.dim, self.width
        base = TestFunction(d, (0.0,) * d, 1.0 / w, {(0,) * d: w**d})
        acc: Coeffs = {}
        for beta, c in self.coeffs.items():
            g = base
            for ax, m in enumerate(beta):
                for _ in range(m):
                    g = g.derivative(ax).scale(1j)
            for bb, cc in g.coeffs.items():
                acc[bb] = acc.get(bb, 0j) + c * cc
        b, cen = np.asarray(self.freq), np.asarray(self.center)
        pref = np.exp(-1j * float(b @ cen))
        return TestFunction(
            d, tuple(b), 1.0 / w,
            {k: v * pref for k, v in _clean(acc).items()},
            tuple(-cen),
        )

    # -- exact integrals -----------------------------------------------------

    def integral(self) -> complex:
        """integral f(x) dx, exactly."""
        ft0 = np.ravel(self.fourier()(np.zeros(self.dim)))[0]
        return complex((2 * math.pi) ** (self.dim / 2) * ft0)

    def l2_norm_sq(self) -> float:
        """integral |f|^2 dx, exactly (phases cancel)."""
        conj_c = {b: np.conj(c) for b, c in self.coeffs.items()}
        p2 = poly_mul(self.coeffs, conj_c)
        tot = 0j
        for beta, c in p2.items():
            term = c
            for m in beta:
                term *= _gauss_moment(m, self.width)
            tot += term
        return float(tot.real)

    def l2_inner(self, other: "TestFunction") -> complex:
        """integral conj(f) g dx, exactly."""
        return self.conjugate().product(other).integral()


@dataclass(frozen=True)
class TensorTestFunction:
    """Tensor product of one-point factors, with a complex prefactor."""

    __test__ = False  # not a pytest class

    factors: Tuple[TestFunction, ...]
    prefactor: complex = 1.0

    def __post_init__(self):
        if not self.factors:
            raise ValueError("need at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "prefactor", complex(self.prefactor))

    @property
    def n_points(self) -> int:
        return len(self.factors)

    @property
    def dim(self) -> int:
        return self.factors[0].dim

    def __call__(self, points) -> np.ndarray:
        """Evaluate at arrays of shape (..., n_points, dim)."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-2:] != (self.n_points, self.dim):
            raise ValueError(
                f"expected trailing shape {(self.n_points, self.dim)}, got {pts.shape}"
            )
        val = np.full(pts.shape[:-2], self.prefactor, dtype=complex)
        for i, f in enumerate(self.factors):
            val = val * f(pts[..., i, :])
        return val

    def conjugate(self) -> "TensorTestFunction":
        return TensorTestFunction(
            tuple(f.conjugate() for f in self.factors), np.conj(self.prefactor)
        )

    def reverse(self) -> "TensorTestFunction":
        return TensorTestFunction(tuple(reversed(self.factors)), self.prefactor)

    def involution(self) -> "TensorTestFunction":
        """Position-space star: reverse the factor order and conjugate."""
        return self.reverse().conjugate()

    def involution_momentum(self) -> "TensorTestFunction":
        """Momentum-space image of the star: reverse, flip arguments, conjugate."""
        return TensorTestFunction(
            tuple(f.flip().conjugate() for f in reversed(self.factors)),
            np.conj(self.prefactor),
        )

    def modulate_factor(self, i: int, b_extra) -> "TensorTestFunction":
        fs = list(self.factors)
        fs[i] = fs[i].modulate(b_extra)
        return TensorTestFunction(tuple(fs), self.prefactor)

    def scale(self, factor: complex) -> "TensorTestFunction":
        return TensorTestFunction(self.factors, self.prefactor * factor)

    def fourier(self) -> "TensorTestFunction":
        return TensorTestFunction(
            tuple(f.fourier() for f in self.factors), self.prefactor
        )
