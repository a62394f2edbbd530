"""Guided-wave and wireless channel model with probabilistic blockage.

Conventions
-----------
``wireless_channel`` returns the per-PA scalar ``h_{n,p,k}``. The stacked
vector ``H`` of a :class:`ChannelRealization` holds the Hermitian of the
per-PA scalars, so ``H^H G w = sum_n w_n sum_p h_{n,p,k} g_n[p]``, i.e. the
in-guide phase and the free-space phase add up along each path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PinchingConfig, WaveguideLayout


def guided_wavelength(wavelength: float, n_eff: float) -> float:
    return wavelength / n_eff


def noise_power(psd_dbm_hz: float, bandwidth: float) -> float:
    """Thermal noise power in watts for a PSD in dBm/Hz over ``bandwidth`` Hz."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return 10.0 ** ((psd_dbm_hz + 10.0 * np.log10(bandwidth) - 30.0) / 10.0)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * np.log10(watt) + 30.0


@dataclass(frozen=True)
class ChannelParams:
    """Propagation constants.

    ``None`` for ``delta_eq`` means ``1/P_n`` on each waveguide. ``None`` for
    the gain factors means ``eta_los = wavelength / (4 pi)`` and
    ``eta_nlos = eta_los / 10``.
    """

    wavelength: float = 0.0111
    n_eff: float = 1.4
    delta_eq: float | None = None
    eta_los: float | None = None
    eta_nlos: float | None = None
    alpha: float = 3.9
    alpha_nlos: float = 4.4
    beta: float = 0.05
    noise_psd_dbm: float = -174.0
    bandwidth: float = 1e6

    def __post_init__(self):
        problems = []
        if self.wavelength <= 0:
            problems.append("wavelength must be positive")
        if self.n_eff < 1:
            problems.append("n_eff must be >= 1")
        if self.delta_eq is not None and not 0 < self.delta_eq <= 1:
            problems.append("delta_eq must lie in (0, 1]")
        if self.eta_los is not None and self.eta_los <= 0:
            problems.append("eta_los must be positive")
        if not self.eta_nlos_value < self.eta_los_value:
            problems.append("eta_nlos must be smaller than eta_los")
        if not self.alpha_nlos > self.alpha:
            problems.append("alpha_nlos must exceed alpha")
        if self.beta < 0:
            problems.append("beta must be non-negative")
        if self.bandwidth <= 0:
            problems.append("bandwidth must be positive")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def guided_wavelength(self) -> float:
        return guided_wavelength(self.wavelength, self.n_eff)

    @property
    def eta_los_value(self) -> float:
        return self.wavelength / (4 * np.pi) if self.eta_los is None else self.eta_los

    @property
    def eta_nlos_value(self) -> float:
        return self.eta_los_value / 10.0 if self.eta_nlos is None else self.eta_nlos

    @property
    def noise_power(self) -> float:
        return noise_power(self.noise_psd_dbm, self.bandwidth)

    def delta_for(self, layout: WaveguideLayout) -> np.ndarray:
        """Equal-power ratio for each waveguide."""
        counts = np.asarray(layout.pa_counts, dtype=float)
        if self.delta_eq is None:
            return 1.0 / counts
        if self.delta_eq > 1.0 / counts.max():
            raise ValueError(f"delta_eq={self.delta_eq} exceeds 1/max P_n={1 / counts.max()}")
        return np.full(layout.n_waveguides, self.delta_eq)


def waveguide_channel(
    layout: WaveguideLayout, config: PinchingConfig, n: int, params: ChannelParams
) -> np.ndarray:
    """In-waveguide vector ``g_n`` for the PAs of waveguide ``n``.

    The guide is lossless: every entry has modulus ``sqrt(delta_eq)`` and only
    the phase depends on the distance travelled from the feed point.
    """
    layout.check_index(n)
    delta = params.delta_for(layout)[n]
    # PA and feed share y and z, so the in-guide distance is |x|
    dist = np.abs(config.positions[n])
    return np.sqrt(delta) * np.exp(-1j * 2 * np.pi / params.guided_wavelength * dist)


def los_prob(d, beta: float):
    return np.exp(-beta * np.asarray(d, dtype=float))


@dataclass(frozen=True)
class BlockageDraw:
    """Geometry-free randomness behind one blockage realization.

    ``uniforms`` decide LoS through ``u < P_LoS(d)``; sharing a draw between
    candidate geometries gives matched (common random number) realizations.
    """

    uniforms: np.ndarray
    phases: np.ndarray

    @classmethod
    def sample(cls, rng: np.random.Generator, size: int) -> "BlockageDraw":
        return cls(rng.random(size), rng.uniform(0.0, 2 * np.pi, size))


@dataclass(frozen=True)
class BlockageRealization:
    """LoS bits and NLoS phases for every PA, stacked over waveguides."""

    los: np.ndarray
    phases: np.ndarray

    def per_waveguide(self, layout: WaveguideLayout) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self.los[s], self.phases[s]) for s in layout.slices()]


def pa_user_distances(layout: WaveguideLayout, config: PinchingConfig, user: np.ndarray) -> np.ndarray:
    return np.linalg.norm(config.points(layout) - np.asarray(user, dtype=float), axis=1)


def realize_blockage(
    draw: BlockageDraw,
    layout: WaveguideLayout,
    config: PinchingConfig,
    user: np.ndarray,
    params: ChannelParams,
) -> BlockageRealization:
    d = pa_user_distances(layout, config, user)
    if draw.uniforms.shape != d.shape:
        raise ValueError("blockage draw does not match the number of PAs")
    los = (draw.uniforms < los_prob(d, params.beta)).astype(np.int8)
    return BlockageRealization(los, draw.phases.copy())


def sample_blockage(
    rng: np.random.Generator,
    layout: WaveguideLayout,
    config: PinchingConfig,
    user: np.ndarray,
    params: ChannelParams,
) -> BlockageRealization:
    """Independent Bernoulli LoS states and uniform NLoS phases for all PAs."""
    draw = BlockageDraw.sample(rng, layout.total_pas)
    return realize_blockage(draw, layout, config, user, params)


def _wireless(d, los, phases, params: ChannelParams):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("PA and user coincide; path loss is singular")
    los_term = params.eta_los_value * np.exp(-1j * 2 * np.pi / params.wavelength * d) / d ** (params.alpha / 2)
    nlos_term = params.eta_nlos_value * np.exp(-1j * np.asarray(phases)) / d ** (params.alpha_nlos / 2)
    return np.where(np.asarray(los).astype(bool), los_term, nlos_term)


def wireless_channel(pa, user, los: int, phase: float, params: ChannelParams) -> complex:
    """Scalar PA-to-user coefficient: LoS if ``los`` else NLoS with ``phase``."""
    d = float(np.linalg.norm(np.asarray(pa, dtype=float) - np.asarray(user, dtype=float)))
    return complex(_wireless(d, los, phase, params))


@dataclass(frozen=True)
class ChannelRealization:
    g: tuple[np.ndarray, ...]
    h: tuple[np.ndarray, ...]
    H: np.ndarray
    G: np.ndarray

    @property
    def effective(self) -> np.ndarray:
        """``G^H H``: the per-waveguide matched-filter direction."""
        return self.G.conj().T @ self.H


def assemble(
    layout: WaveguideLayout,
    config: PinchingConfig,
    user: np.ndarray,
    blockage: BlockageRealization,
    params: ChannelParams,
) -> ChannelRealization:
    if not config.matches(layout):
        raise ValueError("pinching config does not match layout PA counts")
    total = layout.total_pas
    if blockage.los.shape != (total,) or blockage.phases.shape != (total,):
        raise ValueError("blockage realization does not match the number of PAs")

    d = pa_user_distances(layout, config, user)
    scalars = _wireless(d, blockage.los, blockage.phases, params)
    H = scalars.conj()

    G = np.zeros((total, layout.n_waveguides), dtype=complex)
    g = []
    for n, s in enumerate(layout.slices()):
        g_n = waveguide_channel(layout, config, n, params)
        G[s, n] = g_n
        g.append(g_n)
    h = tuple(H[s] for s in layout.slices())
    return ChannelRealization(tuple(g), h, H, G)


def received_amplitude(chan: ChannelRealization, w: np.ndarray) -> complex:
    return complex(chan.H.conj() @ (chan.G @ np.asarray(w, dtype=complex)))


def achievable_rate(chan: ChannelRealization, w: np.ndarray, noise: float) -> float:
    """Spectral efficiency ``log2(1 + |H^H G w|^2 / noise)`` in bps/Hz."""
    w = np.asarray(w, dtype=complex).reshape(-1)
    if w.size != chan.G.shape[1]:
        raise ValueError(f"beamformer needs {chan.G.shape[1]} entries, got {w.size}")
    return float(np.log2(1.0 + abs(received_amplitude(chan, w)) ** 2 / noise))
