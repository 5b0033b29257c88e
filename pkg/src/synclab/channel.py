"""Impairments applied to the transmitted stream.

Covers the receive model

    r_n = e^{j 2 pi eps n / N} sum_l h_l x_{n-l} + eta_n

plus DME pulse-pair interference: carrier frequency offset (``apply_cfo``),
Rician multipath with Jakes Doppler (``apply_multipath``), Gaussian pulse
pairs from DME ground stations (``apply_dme``), white noise (``apply_awgn``),
and the trial assembly that chains them (``build_trial_stream``).

Scenario presets (selectable by name):

* ``awgn``     noise only
* ``enr``      en-route flight: strong line of sight, reflections at
               0.3 us and 15 us, Doppler 1250 Hz
* ``enr-dme``  en-route plus three DME interferers (-0.5 MHz at -67.9 dBm,
               +0.5 MHz at -74 dBm and -90.3 dBm, 3600 pulse pairs/s each)
* ``tma``      terminal manoeuvring area: max delay 10 us, Rician factor
               10 dB, Doppler 624 Hz

Powers the scenarios leave open are filled with documented defaults: ENR
reflected paths at -10 and -14 dB, ENR Rician factor 15 dB, TMA scattered
taps on an exponential decay profile.  ``tap_powers_db`` weights the
diffuse (scattered) power across taps; ``rician_k_db`` sets the static
line-of-sight power against the total diffuse power.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .preamble import PhyParams, PreambleTemplate, _attach_prefix

_JAKES_SINUSOIDS = 16
_PAYLOAD_SYMBOLS = 3


@dataclass(frozen=True)
class DmeSource:
    """One DME ground station as seen at the receiver."""

    freq_offset_hz: float
    power_dbm: float
    pulse_pair_rate: float = 3600.0
    pulse_width_us: float = 3.5  # half-amplitude width of one Gaussian pulse
    pair_spacing_us: float = 12.0

    def __post_init__(self) -> None:
        if self.pulse_pair_rate <= 0:
            raise ValueError("pulse_pair_rate must be positive")


DEFAULT_DME_SOURCES: tuple[DmeSource, ...] = (
    DmeSource(freq_offset_hz=-0.5e6, power_dbm=-67.9),
    DmeSource(freq_offset_hz=+0.5e6, power_dbm=-74.0),
    DmeSource(freq_offset_hz=+0.5e6, power_dbm=-90.3),
)


@dataclass(frozen=True)
class ChannelConfig:
    """Full impairment description for one scenario."""

    scenario: str = "awgn"
    snr_db: float = math.inf
    cfo: float = 0.0
    seed: int = 0
    doppler_max_hz: float = 0.0
    rician_k_db: float = math.inf
    tap_delays_us: tuple[float, ...] = ()
    tap_powers_db: tuple[float, ...] = ()
    dme: tuple[DmeSource, ...] = ()
    phase_noise_linewidth_hz: float = 0.0
    signal_power_dbm: float = -75.0

    def __post_init__(self) -> None:
        if math.isnan(self.snr_db):
            raise ValueError("snr_db must not be NaN")
        if not abs(self.cfo) < 2:
            raise ValueError("|cfo| must be < 2 subcarrier spacings")
        if len(self.tap_delays_us) != len(self.tap_powers_db):
            raise ValueError("tap delay and power lists must have equal length")

    @property
    def has_multipath(self) -> bool:
        return len(self.tap_delays_us) > 0


_SCENARIO_PRESETS: dict[str, dict] = {
    "awgn": {},
    "enr": {
        "doppler_max_hz": 1250.0,
        "rician_k_db": 15.0,
        "tap_delays_us": (0.0, 0.3, 15.0),
        "tap_powers_db": (0.0, -10.0, -14.0),
    },
    "enr-dme": {
        "doppler_max_hz": 1250.0,
        "rician_k_db": 15.0,
        "tap_delays_us": (0.0, 0.3, 15.0),
        "tap_powers_db": (0.0, -10.0, -14.0),
        "dme": DEFAULT_DME_SOURCES,
    },
    "tma": {
        "doppler_max_hz": 624.0,
        "rician_k_db": 10.0,
        "tap_delays_us": (0.0, 0.4, 2.4, 5.2, 10.0),
        # exponential decay, 3 us slope constant
        "tap_powers_db": (0.0, -0.6, -3.5, -7.5, -14.5),
    },
}


def scenario_config(
    name: str, snr_db: float = math.inf, cfo: float = 0.0, **overrides
) -> ChannelConfig:
    """Build a ChannelConfig from a named preset."""
    key = name.strip().lower().replace("_", "-")
    if key not in _SCENARIO_PRESETS:
        valid = ", ".join(sorted(_SCENARIO_PRESETS))
        raise ValueError(f"unknown scenario {name!r} (expected one of: {valid})")
    fields = dict(_SCENARIO_PRESETS[key])
    fields.update(overrides)
    return ChannelConfig(scenario=key, snr_db=snr_db, cfo=cfo, **fields)


def scenario_names() -> tuple[str, ...]:
    return tuple(sorted(_SCENARIO_PRESETS))


def apply_cfo(x: np.ndarray, eps: float, params: PhyParams) -> np.ndarray:
    """Rotate by the carrier offset: y_n = x_n e^{j 2 pi eps n / N}.

    n is the absolute stream index, so concatenating before or after
    rotating gives the same result only for aligned segments; the trial
    builder always rotates the assembled stream.
    """
    x = np.asarray(x, dtype=np.complex128)
    if eps == 0.0:
        return x.copy()
    n = np.arange(len(x))
    return x * np.exp(2j * np.pi * eps * n / params.fft_len)


def apply_awgn(
    x: np.ndarray, snr_db: float, signal_power: float, rng: np.random.Generator
) -> np.ndarray:
    """Add circular complex white Gaussian noise.

    Noise variance is signal_power * 10^(-snr_db/10); snr_db = +inf is the
    noiseless sentinel.  The preamble's unit average power is the usual
    reference.
    """
    if signal_power <= 0:
        raise ValueError("signal_power must be positive")
    if math.isnan(snr_db):
        raise ValueError("snr_db must not be NaN")
    x = np.asarray(x, dtype=np.complex128)
    if math.isinf(snr_db) and snr_db > 0:
        return x.copy()
    var = signal_power * 10.0 ** (-snr_db / 10.0)
    scale = math.sqrt(var / 2.0)
    noise = rng.standard_normal(len(x)) + 1j * rng.standard_normal(len(x))
    return x + scale * noise


def _jakes_gain(
    rng: np.random.Generator, t: np.ndarray, doppler_max_hz: float
) -> np.ndarray:
    """Unit-power complex fading process, Jakes-shaped Doppler spectrum.

    Sum of _JAKES_SINUSOIDS sinusoids at frequencies fd*cos(alpha) with
    uniform random arrival angles alpha and phases.
    """
    alphas = rng.uniform(0.0, 2.0 * np.pi, _JAKES_SINUSOIDS)
    phases = rng.uniform(0.0, 2.0 * np.pi, _JAKES_SINUSOIDS)
    omega = 2.0 * np.pi * doppler_max_hz * np.cos(alphas)
    phase = np.outer(t, omega) + phases
    return np.exp(1j * phase).sum(axis=1) / math.sqrt(_JAKES_SINUSOIDS)


def _delayed(x: np.ndarray, delay: int) -> np.ndarray:
    out = np.zeros_like(x)
    if delay < len(x):
        out[delay:] = x[: len(x) - delay]
    return out


def apply_multipath(
    x: np.ndarray, cfg: ChannelConfig, params: PhyParams, rng: np.random.Generator
) -> np.ndarray:
    """Tapped delay line: static Rician line of sight plus Jakes-faded taps.

    Tap delays round to the nearest sample at fs.  The line-of-sight
    component is a static unit-modulus rotation carrying K/(K+1) of the
    power; the remaining 1/(K+1) spreads over the taps with weights from
    tap_powers_db.  Total mean power gain is 1.
    """
    if not cfg.has_multipath:
        raise ValueError("multipath not applicable")
    x = np.asarray(x, dtype=np.complex128)
    fs = params.sample_rate_hz
    delays = [round(d * 1e-6 * fs) for d in cfg.tap_delays_us]

    k_lin = math.inf if math.isinf(cfg.rician_k_db) else 10.0 ** (cfg.rician_k_db / 10.0)
    if math.isinf(k_lin):
        p_los, p_diffuse = 1.0, 0.0
    else:
        p_los = k_lin / (k_lin + 1.0)
        p_diffuse = 1.0 / (k_lin + 1.0)
    weights = np.array([10.0 ** (p / 10.0) for p in cfg.tap_powers_db])
    weights = weights / weights.sum()

    t = np.arange(len(x)) / fs
    theta = rng.uniform(0.0, 2.0 * np.pi)
    y = math.sqrt(p_los) * np.exp(1j * theta) * _delayed(x, delays[0])
    if p_diffuse > 0.0:
        for delay, w in zip(delays, weights):
            gain = _jakes_gain(rng, t, cfg.doppler_max_hz)
            y = y + math.sqrt(p_diffuse * w) * gain * _delayed(x, delay)
    return y


def apply_phase_noise(
    x: np.ndarray, linewidth_hz: float, params: PhyParams, rng: np.random.Generator
) -> np.ndarray:
    """Wiener-process phase noise with the given two-sided linewidth."""
    x = np.asarray(x, dtype=np.complex128)
    if linewidth_hz == 0.0:
        return x.copy()
    var = 2.0 * np.pi * linewidth_hz / params.sample_rate_hz
    steps = math.sqrt(var) * rng.standard_normal(len(x))
    return x * np.exp(1j * np.cumsum(steps))


def dme_pair_times(
    rng: np.random.Generator, duration_s: float, rate_pps: float
) -> np.ndarray:
    """Poisson pulse-pair arrival times on [0, duration)."""
    count = rng.poisson(rate_pps * duration_s)
    return np.sort(rng.uniform(0.0, duration_s, count))


def apply_dme(
    x: np.ndarray,
    sources: tuple[DmeSource, ...],
    cfg: ChannelConfig,
    rng: np.random.Generator,
    params: PhyParams | None = None,
) -> np.ndarray:
    """Add Gaussian pulse-pair interference from each DME source.

    Per source: pairs arrive as a Poisson process; each pair is two
    Gaussian pulses (half-amplitude width w -> sigma = w / (2 sqrt(2 ln 2)))
    a fixed spacing apart, on a carrier at the source's frequency offset
    with a random phase per pair.  The amplitude is set so the source's
    long-run average power over the desired signal's (unit) power matches
    power_dbm - signal_power_dbm in dB.
    """
    x = np.asarray(x, dtype=np.complex128)
    if not sources:
        return x.copy()
    params = params or PhyParams()
    fs_hz = params.sample_rate_hz
    if fs_hz <= 1e6:
        raise ValueError("sample rate too low for the DME frequency offsets")
    n = len(x)
    t = np.arange(n) / fs_hz
    duration = n / fs_hz
    y = x.copy()
    for src in sources:
        sigma = src.pulse_width_us * 1e-6 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        spacing = src.pair_spacing_us * 1e-6
        isr = 10.0 ** ((src.power_dbm - cfg.signal_power_dbm) / 10.0)
        # mean power of the pair train: rate * 2 * A^2 * sigma * sqrt(pi)
        amp = math.sqrt(isr / (2.0 * src.pulse_pair_rate * sigma * math.sqrt(np.pi)))
        # widen the arrival window so tails and second pulses spill in
        margin = spacing + 4.0 * sigma
        count = rng.poisson(src.pulse_pair_rate * (duration + 2.0 * margin))
        starts = rng.uniform(-margin, duration + margin, count)
        phases = rng.uniform(0.0, 2.0 * np.pi, count)
        carrier = np.exp(1j * (2.0 * np.pi * src.freq_offset_hz * t))
        for t0, phi in zip(starts, phases):
            for tp in (t0, t0 + spacing):
                lo = max(0, int((tp - 5.0 * sigma) * fs_hz))
                hi = min(n, int((tp + 5.0 * sigma) * fs_hz) + 1)
                if hi <= lo:
                    continue
                seg = t[lo:hi] - tp
                pulse = amp * np.exp(-(seg**2) / (2.0 * sigma**2))
                y[lo:hi] += pulse * carrier[lo:hi] * np.exp(1j * phi)
    return y


def _payload_symbols(
    rng: np.random.Generator, params: PhyParams, count: int = _PAYLOAD_SYMBOLS
) -> np.ndarray:
    """Random QPSK OFDM symbols occupying the preamble's frequency band."""
    from .preamble import _BASE_GRID, _qpsk_symbols

    n_fft = params.fft_len
    half = _BASE_GRID // 2
    slots = [k for k in range(-half, half) if k != 0]
    out = []
    for _ in range(count):
        spec = np.zeros(n_fft, dtype=np.complex128)
        spec[np.mod(slots, n_fft)] = _qpsk_symbols(rng, len(slots))
        body = np.fft.ifft(spec) * n_fft / math.sqrt(len(slots))
        out.append(_attach_prefix(body, params))
    payload = np.concatenate(out)
    return payload / math.sqrt(float(np.mean(np.abs(payload) ** 2)))


def build_trial_stream(
    template: PreambleTemplate,
    cfg: ChannelConfig,
    params: PhyParams,
    seed: int,
) -> tuple[np.ndarray, int]:
    """Assemble one Monte Carlo trial.

    Layout: random-length silent lead-in (uniform in [4N, 8N]), the
    preamble, then random QPSK payload symbols (>= 2N samples).
    Impairments in order: multipath, CFO, phase noise, DME, AWGN.  The
    returned true_sto indexes the first preamble sample on the
    line-of-sight path.  Deterministic given (cfg, seed); the RNG draw
    order is lead length, payload, multipath, DME, noise.
    """
    rng = np.random.default_rng(seed)
    n_fft = params.fft_len
    lead = int(rng.integers(4 * n_fft, 8 * n_fft + 1))
    payload = _payload_symbols(rng, params)
    x = np.concatenate(
        [np.zeros(lead, dtype=np.complex128), template.samples, payload]
    )

    if cfg.has_multipath:
        x = apply_multipath(x, cfg, params, rng)
    x = apply_cfo(x, cfg.cfo, params)
    if cfg.phase_noise_linewidth_hz > 0.0:
        x = apply_phase_noise(x, cfg.phase_noise_linewidth_hz, params, rng)
    if cfg.dme:
        x = apply_dme(x, cfg.dme, cfg, rng, params)
    x = apply_awgn(x, cfg.snr_db, 1.0, rng)
    return x, lead


def stream_to_csv(stream: np.ndarray, path: str) -> None:
    """Dump a complex stream as re,im rows for external inspection."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im"])
        for z in np.asarray(stream, dtype=np.complex128):
            writer.writerow([repr(float(z.real)), repr(float(z.imag))])
