"""Gabor filter bank responses and the per-state appearance feature space.

A frame goes through: bank magnitude responses -> box downsampling ->
per-channel 2DPCA of the state -> row-major flatten, channels concatenated
in bank order -> the state's final PCA.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import signal

from .errors import DataError
from .reduction import PcaBasis, TwoDPcaBasis, pca_fit, pca_project, twod_pca_fit, twod_pca_project


@dataclass(frozen=True)
class GaborKernel:
    scale: int
    orientation: int
    wavelength: float
    theta: float
    sigma: float
    aspect: float
    taps: np.ndarray

    @property
    def radius(self):
        return self.taps.shape[0] // 2


@dataclass(frozen=True)
class BankParams:
    scales: int = 4
    orientations: int = 4
    base_wavelength: float = 4.0
    wavelength_step: float = np.sqrt(2.0)
    sigma_ratio: float = 0.56
    aspect: float = 1.0
    support: float = 3.0


def make_gabor_kernel(wavelength, theta, sigma, aspect=1.0, support=3.0, scale=0, orientation=0):
    r = int(np.ceil(support * sigma))
    ax = np.arange(-r, r + 1, dtype=float)
    y, x = np.meshgrid(ax, ax, indexing="ij")
    xr = x * np.cos(theta) + y * np.sin(theta)
    yr = -x * np.sin(theta) + y * np.cos(theta)
    env = np.exp(-(xr ** 2 + (aspect * yr) ** 2) / (2.0 * sigma ** 2))
    env /= env.sum()
    taps = env * np.exp(1j * 2.0 * np.pi * xr / wavelength)
    # zero-mean real and imaginary parts
    taps = (taps.real - taps.real.mean()) + 1j * (taps.imag - taps.imag.mean())
    return GaborKernel(scale, orientation, float(wavelength), float(theta), float(sigma),
                       float(aspect), taps)


def make_gabor_bank(scales=4, orientations=4, params=None):
    """Kernels enumerated scale-major; ``scales * orientations`` of them."""
    if scales < 1 or orientations < 1:
        raise ValueError("scales and orientations must be positive")
    params = params or BankParams(scales=scales, orientations=orientations)
    bank = []
    for s in range(scales):
        lam = params.base_wavelength * params.wavelength_step ** s
        for o in range(orientations):
            bank.append(make_gabor_kernel(lam, np.pi * o / orientations, params.sigma_ratio * lam,
                                          params.aspect, params.support, s, o))
    return bank


def gabor_response(frame, kernel):
    """Magnitude of the same-size convolution, reflect-padded."""
    frame = np.asarray(frame, dtype=float)
    r = kernel.radius
    if min(frame.shape) <= 2 * r:
        raise DataError(f"frame {frame.shape} smaller than kernel support {2 * r + 1}")
    padded = np.pad(frame, r, mode="reflect")
    return np.abs(signal.fftconvolve(padded, kernel.taps, mode="valid"))


class BankFilter:
    """All bank responses for stacks of same-shape frames via one shared FFT."""

    def __init__(self, bank, shape):
        self.bank = bank
        self.shape = tuple(shape)
        self.pad = max(k.radius for k in bank)
        rows, cols = self.shape
        if min(rows, cols) <= 2 * self.pad:
            raise DataError(f"frame {self.shape} smaller than kernel support {2 * self.pad + 1}")
        # wrap-around lands outside the extracted window once the size reaches n + 2*pad
        self.fshape = (sfft.next_fast_len(rows + 2 * self.pad), sfft.next_fast_len(cols + 2 * self.pad))
        spec = []
        for k in bank:
            buf = np.zeros(self.fshape, dtype=complex)
            n = k.taps.shape[0]
            buf[:n, :n] = k.taps
            # align every kernel centre on the same output offset (2 * pad)
            buf = np.roll(buf, (self.pad - k.radius, self.pad - k.radius), axis=(0, 1))
            spec.append(sfft.fft2(buf))
        self._spec = np.stack(spec)

    def responses(self, frames):
        """(t, rows, cols) -> (t, p, rows, cols) magnitude maps."""
        frames = np.asarray(frames, dtype=float)
        if frames.shape[-2:] != self.shape:
            raise DataError(f"frame shape {frames.shape[-2:]} != {self.shape}")
        p = self.pad
        padded = np.pad(frames, ((0, 0), (p, p), (p, p)), mode="reflect")
        f = sfft.fft2(padded, s=self.fshape, axes=(-2, -1))
        out = sfft.ifft2(f[:, None] * self._spec[None], axes=(-2, -1))
        rows, cols = self.shape
        return np.abs(out[..., 2 * p:2 * p + rows, 2 * p:2 * p + cols])


def downsample(maps, factor):
    """Box mean over ``factor x factor`` cells; trailing remainder dropped."""
    if factor == 1:
        return np.asarray(maps, dtype=float)
    rows = maps.shape[-2] // factor
    cols = maps.shape[-1] // factor
    m = maps[..., :rows * factor, :cols * factor]
    m = m.reshape(*m.shape[:-2], rows, factor, cols, factor)
    return m.mean(axis=(-3, -1))


@dataclass
class AppearanceFeatureSpace:
    bucketing: object
    channel_bases: list  # [state][channel] -> TwoDPcaBasis
    final_bases: list  # [state] -> PcaBasis

    @property
    def n_channels(self):
        return len(self.channel_bases[0])

    @property
    def k(self):
        return self.final_bases[0].k

    def reduce_channels(self, maps, state):
        """(..., p, r, c) -> (..., p*r*k2d) concatenated 2DPCA projections."""
        maps = np.asarray(maps, dtype=float)
        bases = self.channel_bases[state]
        if maps.shape[-3] != len(bases):
            raise ValueError(f"expected {len(bases)} channels, got {maps.shape[-3]}")
        parts = [twod_pca_project(b, maps[..., ch, :, :]) for ch, b in enumerate(bases)]
        lead = maps.shape[:-3]
        return np.concatenate([q.reshape(*lead, -1) for q in parts], axis=-1)

    def project(self, maps, state):
        return pca_project(self.final_bases[state], self.reduce_channels(maps, state))


def fit_appearance_space(maps_by_state, bucketing, k2d=8, kfinal=48):
    """Fit per (state, channel) 2DPCA and a per-state final PCA.

    ``maps_by_state[s]`` is an (n_s, p, r, c) array of downsampled response
    maps for the frames assigned to state ``s``.
    """
    channel_bases = []
    reduced_by_state = []
    for s, maps in enumerate(maps_by_state):
        maps = np.asarray(maps, dtype=float)
        if maps.ndim != 4 or maps.shape[0] == 0:
            raise DataError(f"state {s} has no training frames")
        if maps.shape[0] < 2:
            raise DataError(f"state {s} needs at least 2 training frames")
        k = min(k2d, maps.shape[-1])
        bases = [twod_pca_fit(maps[:, ch], k) for ch in range(maps.shape[1])]
        channel_bases.append(bases)
        reduced_by_state.append(AppearanceFeatureSpace(bucketing, [bases], []).reduce_channels(maps, 0))
    # one final dimension for every state
    kf = min([kfinal] + [r.shape[0] - 1 for r in reduced_by_state] + [reduced_by_state[0].shape[1]])
    final_bases = [pca_fit(r, kf) for r in reduced_by_state]
    return AppearanceFeatureSpace(bucketing, channel_bases, final_bases)


__all__ = ["GaborKernel", "BankParams", "BankFilter", "make_gabor_bank", "make_gabor_kernel",
           "gabor_response", "downsample", "AppearanceFeatureSpace", "fit_appearance_space",
           "PcaBasis", "TwoDPcaBasis"]
