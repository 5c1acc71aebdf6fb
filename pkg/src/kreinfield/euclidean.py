"""Lattice white noise, kernel convolution and Monte Carlo correlators.

The random field is built in two steps: draw an independent noise variable
per lattice cell (Gaussian part plus compensated Poisson jumps, scaled so the
law converges to the continuum white noise as the cell volume shrinks), then
convolve with a Green kernel by FFT.  Smeared truncated correlation functions
are estimated from replicates by turning joint moments of the smeared field
into joint cumulants, with jackknife-over-batches error bars propagated
through that nonlinear map.

Streams are counter-based: (seed, replicate) indexes a Philox generator, so
any replicate can be regenerated independently of the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, LatticeMismatchError, SizeLimitError
from .lattice import Lattice, LatticeField
from .levy import LevyTriple, QuaternionLevyData, cumulant_coeff
from .partitions import BOSE, CorrelationTable, cumulants_from_moments
from .quaternion import quaternion_mul


def noise_generator(seed: int, replicate: int) -> np.random.Generator:
    """Independent stream for one replicate of one experiment."""
    return np.random.Generator(np.random.Philox(key=[seed, replicate]))


def white_noise_field(lat: Lattice, triple: LevyTriple, rng) -> LatticeField:
    """One sample of scalar cell-averaged white noise.

    Per cell of volume v the value is  a_c + sigma Z / sqrt(v) + sum_j s_j N_j / v
    with N_j ~ Poisson(lam_j v) and a_c the compensated drift; its n-th
    cumulant is c_n v^(1-n), matching the continuum noise smeared with the
    cell indicator divided by v.
    """
    v = lat.cell_volume
    vals = np.full(lat.shape, triple.compensated_drift())
    if triple.variance > 0:
        vals = vals + math.sqrt(triple.variance / v) * rng.standard_normal(lat.shape)
    for s, lam in triple.atoms:
        vals = vals + (s / v) * rng.poisson(lam * v, lat.shape)
    return LatticeField(lat, vals)


def quaternion_noise_field(lat: Lattice, data: QuaternionLevyData, rng) -> LatticeField:
    """One sample of quaternion-valued cell-averaged noise.

    Jumps sit on the real axis; each imaginary component is an independent
    centered Gaussian.  Small jumps (|y| < 1) are compensated, matching the
    exponent convention of ``psi_eval_vector``.
    """
    v = lat.cell_volume
    comp = data.beta - sum(lam * y for y, lam in data.atoms if abs(y) < 1)
    vals = np.zeros(lat.shape + (4,))
    vals[..., 0] = comp
    if data.variance_real > 0:
        vals[..., 0] += math.sqrt(data.variance_real / v) * rng.standard_normal(lat.shape)
    for y, lam in data.atoms:
        vals[..., 0] += (y / v) * rng.poisson(lam * v, lat.shape)
    if data.variance_imag > 0:
        sd = math.sqrt(data.variance_imag / v)
        vals[..., 1:] = sd * rng.standard_normal(lat.shape + (3,))
    return LatticeField(lat, vals)


def convolve(kernel: LatticeField, field: LatticeField) -> LatticeField:
    """Circular lattice convolution (kernel * field)(x) = sum_y K(x-y) F(y) v.

    Scalar * scalar and scalar * quaternion work componentwise; for a
    quaternion kernel the components are combined with the (noncommutative)
    Hamilton product, kernel on the left.
    """
    kernel.check_same_lattice(field)
    lat = kernel.lattice
    axes = tuple(range(lat.dim))
    if kernel.is_quaternion or field.is_quaternion:
        kv = kernel.values if kernel.is_quaternion else kernel.values[..., None]
        fv = field.values if field.is_quaternion else field.values[..., None]
        kf = np.fft.fftn(kv, axes=axes)
        ff = np.fft.fftn(fv, axes=axes)
        if kf.shape[-1] == 4 and ff.shape[-1] == 4:
            prod = quaternion_mul(kf, ff)
        else:
            prod = kf * ff  # one side scalar: ordinary product, broadcast
        out = np.fft.ifftn(prod, axes=axes) * lat.cell_volume
    else:
        out = (
            np.fft.ifftn(np.fft.fftn(kernel.values) * np.fft.fftn(field.values))
            * lat.cell_volume
        )
    if np.isrealobj(kernel.values) and np.isrealobj(field.values):
        out = out.real
    return LatticeField(lat, out)


def reflect(field: LatticeField) -> LatticeField:
    """x -> -x on the periodic lattice (index 0 stays put)."""
    vals = field.values
    axes = tuple(range(field.lattice.dim))
    flipped = np.flip(vals, axis=axes)
    flipped = np.roll(flipped, shift=(1,) * field.lattice.dim, axis=axes)
    return LatticeField(field.lattice, flipped)


def smear(field: LatticeField, weight: np.ndarray) -> complex:
    """sum_x field(x) w(x) v  (the lattice pairing)."""
    if weight.shape != field.lattice.shape:
        raise LatticeMismatchError("weight grid does not match the lattice")
    return complex(np.sum(field.values * weight) * field.lattice.cell_volume)


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    n_samples: int
    n_batches: int


def _cumulant_from_subset_moments(moments: np.ndarray, n: int, keys) -> complex:
    table = CorrelationTable(n, dict(zip(keys, moments)))
    return cumulants_from_moments(table, BOSE).values[tuple(range(1, n + 1))]


def _subset_moment_batches(
    lat: Lattice,
    kernel: LatticeField,
    weights: Sequence[np.ndarray],
    triple: LevyTriple,
    n_samples: int,
    seed: int,
    n_batches: int,
):
    """Batched sums of products of smeared values over all index subsets."""
    n = len(weights)
    if n < 1:
        raise ConfigurationError("need at least one test weight")
    if n_samples < n_batches or n_batches < 2:
        raise ConfigurationError("need n_samples >= n_batches >= 2")
    if n_samples % n_batches:
        raise ConfigurationError("n_samples must be divisible by n_batches")

    kernel.check_same_lattice(LatticeField(lat, np.zeros(lat.shape)))
    kr = reflect(kernel)
    smeared_kernels = [
        convolve(kr, LatticeField(lat, np.asarray(w, dtype=float))).values
        for w in weights
    ]

    keys = []
    for size in range(1, n + 1):
        keys.extend(combinations(range(1, n + 1), size))
    per_batch = n_samples // n_batches
    batch_sums = np.zeros((n_batches, len(keys)))
    v = lat.cell_volume

    for r in range(n_samples):
        rng = noise_generator(seed, r)
        noise = white_noise_field(lat, triple, rng).values
        m = np.array([np.sum(noise * sk) * v for sk in smeared_kernels])
        prods = np.array([np.prod(m[np.array(key) - 1]) for key in keys])
        batch_sums[r // per_batch] += prods
    return keys, batch_sums, per_batch


def estimate_schwinger_mc(
    lat: Lattice,
    kernel: LatticeField,
    weights: Sequence[np.ndarray],
    triple: LevyTriple,
    n_samples: int,
    seed: int,
    n_batches: int = 20,
) -> MCEstimate:
    """Monte Carlo joint cumulant of the smeared convolved field.

    Estimates  kappa(<K*F, w_1>, ..., <K*F, w_n>)  over replicates of the
    noise F.  Smearing is moved onto the test side (<K*F, w> = <F, K~ * w>
    with K~ the reflected kernel), so each replicate costs one noise draw and
    n inner products instead of an FFT.  The error bar is a delete-one-batch
    jackknife pushed through the moments-to-cumulants map.
    """
    n = len(weights)
    keys, batch_sums, per_batch = _subset_moment_batches(
        lat, kernel, weights, triple, n_samples, seed, n_batches
    )
    total = batch_sums.sum(axis=0) / n_samples
    theta = _cumulant_from_subset_moments(total, n, keys)
    loo = np.empty(n_batches, dtype=complex)
    for b in range(n_batches):
        moments_b = (batch_sums.sum(axis=0) - batch_sums[b]) / (n_samples - per_batch)
        loo[b] = _cumulant_from_subset_moments(moments_b, n, keys)
    var = (n_batches - 1) / n_batches * np.sum(np.abs(loo - loo.mean()) ** 2)
    return MCEstimate(
        value=float(np.real(theta)),
        std_error=float(math.sqrt(var)),
        n_samples=n_samples,
        n_batches=n_batches,
    )


def estimate_moment_table(
    lat: Lattice,
    kernel: LatticeField,
    weights: Sequence[np.ndarray],
    triple: LevyTriple,
    n_samples: int,
    seed: int,
    n_batches: int = 20,
) -> Dict[Tuple[int, ...], MCEstimate]:
    """Raw joint moments of the smeared field for every index sub-tuple.

    Same sampling plan as :func:`estimate_schwinger_mc` but the per-subset
    moments are returned directly (jackknife errors per entry) instead of
    being folded into the top cumulant.  Keys match CorrelationTable keys, so
    the values slot straight into the moment/cumulant conversion.
    """
    if len(weights) > 6:
        raise SizeLimitError("moment tables are capped at six weights")
    keys, batch_sums, per_batch = _subset_moment_batches(
        lat, kernel, weights, triple, n_samples, seed, n_batches
    )
    grand = batch_sums.sum(axis=0)
    out: Dict[Tuple[int, ...], MCEstimate] = {}
    for i, key in enumerate(keys):
        loo = (grand[i] - batch_sums[:, i]) / (n_samples - per_batch)
        var = (n_batches - 1) / n_batches * np.sum((loo - loo.mean()) ** 2)
        out[key] = MCEstimate(
            value=float(grand[i] / n_samples),
            std_error=float(math.sqrt(var)),
            n_samples=n_samples,
            n_batches=n_batches,
        )
    return out


def lattice_truncated_expectation(
    lat: Lattice,
    kernel: LatticeField,
    weights: Sequence[np.ndarray],
    triple: LevyTriple,
) -> float:
    """Exact expectation of the MC estimator on the same lattice.

    Independence across cells gives  c_n v sum_x prod_j (K~ * w_j)(x)  for the
    joint cumulant of the smeared field; this is the finite-volume analytic
    value the estimator converges to.
    """
    n = len(weights)
    kr = reflect(kernel)
    prod = np.ones(lat.shape)
    for w in weights:
        prod = prod * convolve(kr, LatticeField(lat, np.asarray(w, dtype=float))).values
    return float(cumulant_coeff(n, triple) * lat.cell_volume * np.sum(prod))
