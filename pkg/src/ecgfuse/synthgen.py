"""Synthetic 3-lead VCG and SNR-calibrated noise corruption.

The generator is the three-variable limit-cycle ECG model (as in ECGSYN): a point
circles the unit limit cycle at the heart rate, and each output channel
relaxes towards a baseline while being kicked by five Gaussian events (P, Q,
R, S, T) placed at fixed phases. Channels share event phases and widths and
differ in per-wave amplitude gains. The event derivative is scaled by the
angular rate so the wave amplitudes do not depend on heart rate.

Default wave parameters are the standard ECGSYN values (external-reference
defaults, not fitted to any data). Integration is fixed-step RK4 at the output
sample rate with a constant RR interval, so the output is exactly periodic.

Real NSTDB noise records are not bundled. ``data/`` ships 10 s, 500 Hz
synthetic stand-ins for baseline wander (BW), electrode motion (EM) and muscle
artifact (MA) made by :func:`standin_noise`; real records converted to
``csv_v1`` load the same way through :func:`load_noise_record`.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy import signal as sps

from .embedding import TimeSeries
from .errors import IntegrationUnstable, SegmentTooShort, ZeroNoisePower, ZeroSignalPower
from .vcgprep import VCG_LEADS, MultiLeadRecord

__all__ = [
    "EcgModelParams",
    "NoiseSpec",
    "NOISE_KINDS",
    "SNR_LADDER",
    "synth_vcg",
    "measure_snr",
    "add_noise_at_snr",
    "load_noise_record",
    "bundled_noise",
    "standin_noise",
]

log = logging.getLogger(__name__)

NOISE_KINDS = ("BW", "EM", "MA")

# Corruption levels (dB) per noise kind, strongest signal first.
SNR_LADDER = {
    "BW": (12.0, 6.0, 0.0, -6.0),
    "EM": (6.0, 0.0, -6.0, -12.0),
    "MA": (12.0, 6.0, 0.0, -6.0),
}


def _default_theta():
    return tuple(np.deg2rad([-70.0, -15.0, 0.0, 15.0, 100.0]))


@dataclass(frozen=True)
class EcgModelParams:
    """PQRST event phases (rad), amplitudes and widths (rad), plus channel gains.

    ``lead_gains[c][i]`` multiplies wave ``i``'s amplitude in channel ``c``.
    ``output_gain`` converts model units to millivolts (R wave near 1 mV on Vx).
    The baseline is ``baseline_amplitude * sin(2 pi baseline_freq_hz t)``;
    it is off by default so beats repeat exactly.
    """

    theta: tuple = field(default_factory=_default_theta)
    a: tuple = (1.2, -5.0, 30.0, -7.5, 0.75)
    b: tuple = (0.25, 0.1, 0.1, 0.1, 0.4)
    heart_rate_bpm: float = 60.0
    lead_gains: tuple = (
        (1.0, 1.0, 1.0, 1.0, 1.0),
        (0.7, 0.3, 0.6, 1.6, 0.8),
        (-0.5, 1.5, -0.4, 0.6, -1.0),
    )
    output_gain: float = 3.8
    baseline_amplitude: float = 0.0
    baseline_freq_hz: float = 0.25
    lead_names: tuple = VCG_LEADS

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if not (len(self.theta) == len(self.a) == len(self.b) == 5):
            raise ValueError("model needs exactly five waves (P, Q, R, S, T)")
        if np.any(np.asarray(self.b) <= 0):
            raise ValueError("wave widths b must be positive")
        if np.any(np.diff(theta) <= 0) or theta[0] <= -np.pi or theta[-1] > np.pi:
            raise ValueError("wave phases must increase strictly within (-pi, pi]")
        if not self.heart_rate_bpm > 0:
            raise ValueError("heart rate must be positive")
        if np.shape(self.lead_gains) != (len(self.lead_names), 5):
            raise ValueError("lead_gains must be one row of five gains per lead")

    @property
    def angular_rate(self) -> float:
        return 2.0 * np.pi * self.heart_rate_bpm / 60.0


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    source: TimeSeries
    target_snr_db: float
    offset: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}")


def _rhs(params: EcgModelParams, amps: np.ndarray):
    theta = np.asarray(params.theta)
    b2 = 2.0 * np.asarray(params.b) ** 2
    w = params.angular_rate
    A0, f0 = params.baseline_amplitude, params.baseline_freq_hz

    def f(t, s):
        x, y = s[0], s[1]
        alpha = 1.0 - np.hypot(x, y)
        dtheta = np.remainder(np.arctan2(y, x) - theta + np.pi, 2.0 * np.pi) - np.pi
        kick = amps @ (dtheta * np.exp(-dtheta * dtheta / b2))
        z0 = A0 * np.sin(2.0 * np.pi * f0 * t)
        dz = -w * kick - (s[2:] - z0)
        return np.concatenate(([alpha * x - w * y, alpha * y + w * x], dz))

    return f


def synth_vcg(
    params: EcgModelParams | None = None,
    sample_rate_hz: float = 500.0,
    duration_s: float = 10.0,
    warmup_s: float = 5.0,
) -> MultiLeadRecord:
    """Integrate the model and return channels ``Vx, Vy, Vz``.

    Time 0 sits mid-diastole (phase -pi), so the first R wave comes half a
    beat in. ``warmup_s`` of discarded integration lets the channels settle
    onto the periodic orbit.
    """
    params = params or EcgModelParams()
    if duration_s < 2.0:
        raise ValueError("duration must be at least 2 s")
    if sample_rate_hz < 100.0:
        raise ValueError("sample rate must be at least 100 Hz")
    dt = 1.0 / sample_rate_hz
    w = params.angular_rate
    width = min(params.b)
    if w * dt > width:
        need = float(np.ceil(w / width))
        raise IntegrationUnstable(
            f"phase step {w * dt:.3f} rad exceeds narrowest wave width {width} rad; "
            f"use a sample rate of at least {need:g} Hz",
            suggested_sample_rate_hz=need,
        )

    amps = np.asarray(params.lead_gains, dtype=float) * np.asarray(params.a, dtype=float)
    f = _rhs(params, amps)
    n_warm = int(round(warmup_s * sample_rate_hz))
    n = int(round(duration_s * sample_rate_hz))
    phase0 = -np.pi - w * n_warm * dt
    s = np.concatenate(([np.cos(phase0), np.sin(phase0)], np.zeros(len(params.lead_names))))
    out = np.empty((n, len(params.lead_names)))
    t = -n_warm * dt
    for i in range(n_warm + n):
        if i >= n_warm:
            out[i - n_warm] = s[2:]
        k1 = f(t, s)
        k2 = f(t + dt / 2, s + dt / 2 * k1)
        k3 = f(t + dt / 2, s + dt / 2 * k2)
        k4 = f(t + dt, s + dt * k3)
        s = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    if not np.all(np.isfinite(out)):
        raise IntegrationUnstable("integration diverged", suggested_sample_rate_hz=2 * sample_rate_hz)
    return MultiLeadRecord.from_array(out * params.output_gain, params.lead_names, sample_rate_hz, "synthetic_vcg")


def _samples(x) -> np.ndarray:
    return np.asarray(getattr(x, "samples", x), dtype=float)


def _power(x: np.ndarray) -> float:
    return float(np.mean(x * x))


def measure_snr(signal, noise) -> float:
    """``10 log10(P_signal / P_noise)`` with power the mean square."""
    s, v = _samples(signal), _samples(noise)
    if s.shape != v.shape:
        raise ValueError(f"signal and noise lengths differ ({s.size} vs {v.size})")
    ps, pn = _power(s), _power(v)
    if pn == 0:
        raise ZeroNoisePower("noise is identically zero")
    if ps == 0:
        raise ZeroSignalPower("signal is identically zero")
    return 10.0 * np.log10(ps / pn)


def noise_segment(noise, length: int, offset: int = 0) -> np.ndarray:
    v = _samples(noise)
    if offset < 0 or offset + length > v.size:
        raise SegmentTooShort(f"noise has {v.size} samples, need {length} from offset {offset}")
    return v[offset : offset + length]


def add_noise_at_snr(signal, noise, target_db: float, offset: int = 0) -> TimeSeries:
    """``signal + c * noise`` with ``c`` chosen so the SNR equals ``target_db``.

    The noise segment starts at ``offset``. Deterministic given its inputs.
    """
    s = _samples(signal)
    v = noise_segment(noise, s.size, offset)
    ps, pn = _power(s), _power(v)
    if pn == 0:
        raise ZeroNoisePower("noise segment is identically zero")
    if ps == 0:
        raise ZeroSignalPower("signal is identically zero")
    c = np.sqrt(ps / (pn * 10.0 ** (target_db / 10.0)))
    fs = getattr(signal, "sample_rate_hz", 1.0)
    label = getattr(signal, "label", "")
    return TimeSeries(s + c * v, fs, label)


def _unit(x: np.ndarray) -> np.ndarray:
    x = x - x.mean()
    return x / x.std()


def standin_noise(kind: str, sample_rate_hz: float = 500.0, duration_s: float = 10.0, seed: int = 0) -> TimeSeries:
    """Synthetic stand-in for an NSTDB noise class, unit variance.

    BW is a sub-hertz drift, EM a train of sparse decaying transients over a
    weaker drift, MA band-limited (20-150 Hz) noise under a slow envelope.
    """
    rng = np.random.default_rng(seed)
    fs = float(sample_rate_hz)
    keep = int(round(duration_s * fs))
    # generate with padding and crop so zero-phase filter edges never show
    pad = int(round(20.0 * fs))
    n = keep + 2 * pad
    t = np.arange(n) / fs
    nyq = fs / 2
    if kind == "BW":
        sos = sps.butter(2, 0.5 / nyq, output="sos")
        drift = sps.sosfiltfilt(sos, rng.standard_normal(n))
        tones = sum(
            rng.uniform(0.5, 1.0) * np.sin(2 * np.pi * rng.uniform(0.05, 0.4) * t + rng.uniform(0, 2 * np.pi))
            for _ in range(3)
        )
        x = _unit(drift) + tones
    elif kind == "EM":
        sos = sps.butter(2, 0.7 / nyq, output="sos")
        x = 0.3 * _unit(sps.sosfiltfilt(sos, rng.standard_normal(n)))
        n_events = max(1, rng.poisson(0.8 * n / fs))
        for start in rng.integers(0, n, n_events):
            tt = t[start:] - t[start]
            freq = rng.uniform(2.0, 8.0)
            amp = rng.choice([-1, 1]) * rng.uniform(1.0, 3.0)
            x[start:] += amp * np.exp(-tt / rng.uniform(0.05, 0.3)) * np.cos(2 * np.pi * freq * tt)
    elif kind == "MA":
        hi = min(150.0, 0.9 * nyq)
        sos = sps.butter(4, [20.0 / nyq, hi / nyq], btype="band", output="sos")
        burst = sps.sosfiltfilt(sos, rng.standard_normal(n))
        env_sos = sps.butter(2, 0.5 / nyq, output="sos")
        env = 1.0 + 0.8 * np.tanh(sps.sosfiltfilt(env_sos, rng.standard_normal(n)) * 20)
        x = burst * env
    else:
        raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
    return TimeSeries(_unit(x[pad : pad + keep]), fs, kind)


def _resample(ts: TimeSeries, sample_rate_hz: float) -> TimeSeries:
    n_out = int(np.floor(len(ts) * sample_rate_hz / ts.sample_rate_hz))
    t_out = np.arange(n_out) / sample_rate_hz
    t_in = np.arange(len(ts)) / ts.sample_rate_hz
    return TimeSeries(np.interp(t_out, t_in, ts.samples), sample_rate_hz, ts.label)


def load_noise_record(path, kind: str, sample_rate_hz: float | None = None, lead: str | None = None) -> TimeSeries:
    """Read a noise channel from a ``csv_v1`` file.

    The channel is ``lead`` if given, else one named ``kind``, else the first.
    A ``kind=`` header tag that disagrees with ``kind`` only warns. With
    ``sample_rate_hz`` the channel is linearly resampled to that rate.
    """
    from .recordio import read_record

    if kind not in NOISE_KINDS:
        raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
    record = read_record(path)
    tag = record.meta.get("kind")
    if tag is not None and tag != kind:
        warnings.warn(f"{path}: file is tagged kind={tag}, using it as {kind}", stacklevel=2)
    if lead is None:
        lead = kind if kind in record else record.names[0]
    ts = record[lead]
    ts = TimeSeries(ts.samples, ts.sample_rate_hz, kind)
    if sample_rate_hz is not None and sample_rate_hz != ts.sample_rate_hz:
        ts = _resample(ts, sample_rate_hz)
    return ts


def bundled_noise(kind: str, sample_rate_hz: float | None = None) -> TimeSeries:
    """The packaged stand-in noise record for ``kind``."""
    if kind not in NOISE_KINDS:
        raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
    ref = resources.files("ecgfuse") / "data" / f"noise_{kind.lower()}.csv"
    with resources.as_file(ref) as path:
        return load_noise_record(path, kind, sample_rate_hz)
