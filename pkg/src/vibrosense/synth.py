"""Synthetic motor-testbed vibration and chiller process data generators."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple
from zoneinfo import ZoneInfo

import numpy as np

from .core import ContractError, DefectLabel, MachineState, OperatingPoint, TimeSeries, VibrationRecord, make_rng
from .ingest import DEFAULT_TIMEZONE, ProcessRow, WeeklySchedule

#: Base x/z amplitude per imbalance level; chosen so classes are separable in
#: the (x, z) plane but overlap once the default noise_sigma=0.3 is added.
AMPLITUDE_BY_LABEL = {
    DefectLabel.NORMAL: 1.0,
    DefectLabel.NEAR_FAILURE: 2.0,
    DefectLabel.FAILURE: 3.5,
}

HARMONIC_RATIO = 0.3
Y_AXIS_RATIO = 0.1

#: Reference speed for the optional speed-dependent amplitude scaling.
RPM_REFERENCE = 300


@dataclass(frozen=True)
class SynthConfig:
    rpm: int
    sample_rate_hz: float
    duration_s: float
    imbalance_level: DefectLabel
    noise_sigma: float = 0.3
    seed: int = 0
    # Imbalance force grows with speed (~omega^2 for an eccentric mass); the
    # exponent defaults to 0 so amplitudes stay speed-independent unless a
    # cross-speed experiment asks otherwise.
    amp_rpm_exponent: float = 0.0

    def __post_init__(self):
        if self.rpm <= 0 or self.sample_rate_hz <= 0 or self.duration_s <= 0:
            raise ContractError("rpm, sample_rate_hz, duration_s must be positive")
        if self.noise_sigma < 0:
            raise ContractError("noise_sigma must be nonnegative")
        if self.duration_s * self.sample_rate_hz < 8:
            raise ContractError("config must yield at least 8 samples")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))

    @property
    def amplitude(self) -> float:
        base = AMPLITUDE_BY_LABEL[self.imbalance_level]
        return base * (self.rpm / RPM_REFERENCE) ** self.amp_rpm_exponent


def generate_vibration(config: SynthConfig) -> VibrationRecord:
    """Imbalance signature at the rotation frequency f_r = rpm/60 plus a
    weaker 2x harmonic; z leads x by a quarter turn, y vibrates at a tenth of
    the x amplitude. Gaussian noise per axis, deterministic given the seed."""
    rng = make_rng(config.seed)
    n = config.n_samples
    t = np.arange(n) / config.sample_rate_hz
    f_r = config.rpm / 60.0
    a = config.amplitude
    theta = 2.0 * np.pi * f_r * t
    x = a * np.sin(theta) + HARMONIC_RATIO * a * np.sin(2.0 * theta)
    z = a * np.sin(theta + np.pi / 2) + HARMONIC_RATIO * a * np.sin(2.0 * theta + np.pi / 2)
    y = Y_AXIS_RATIO * a * np.sin(theta)
    if config.noise_sigma > 0:
        x = x + rng.normal(0.0, config.noise_sigma, n)
        y = y + rng.normal(0.0, config.noise_sigma, n)
        z = z + rng.normal(0.0, config.noise_sigma, n)
    return VibrationRecord(
        start_s=0.0,
        sample_rate_hz=config.sample_rate_hz,
        x=x,
        y=y,
        z=z,
        operating_point=OperatingPoint(rpm=config.rpm),
        label=config.imbalance_level,
    )


def decimate_to_mems(
    record: VibrationRecord,
    target_rate_hz: float = 10.0,
    extra_noise_sigma: float = 0.0,
    seed: int = 0,
) -> VibrationRecord:
    """Low-fidelity twin of a high-rate record: moving-average anti-aliasing
    prefilter over each decimation block, then independent extra noise."""
    if target_rate_hz <= 0 or target_rate_hz > record.sample_rate_hz:
        raise ContractError("target rate must be positive and <= source rate")
    factor = int(round(record.sample_rate_hz / target_rate_hz))
    n_out = len(record) // factor
    if n_out < 1:
        raise ContractError("record too short for the requested decimation")
    rng = make_rng(seed)
    axes = {}
    for name in ("x", "y", "z"):
        sig = getattr(record, name)[: n_out * factor].reshape(n_out, factor)
        out = sig.mean(axis=1)
        if extra_noise_sigma > 0:
            out = out + rng.normal(0.0, extra_noise_sigma, n_out)
        axes[name] = out
    return VibrationRecord(
        start_s=record.start_s,
        sample_rate_hz=record.sample_rate_hz / factor,
        x=axes["x"],
        y=axes["y"],
        z=axes["z"],
        operating_point=record.operating_point,
        label=record.label,
    )


#: Chiller temperature regimes (degrees Fahrenheit).
CHILLER_SETPOINT_F = 53.0
CHILLER_ON_SIGMA_F = 0.5
CHILLER_FAILURE_PEAK_F = 65.0
AMBIENT_F = 68.0


def generate_process(
    days: int,
    failure_days: Iterable[dt.date] = (),
    seed: int = 0,
    start_date: dt.date = dt.date(2022, 1, 3),
    schedule: WeeklySchedule = WeeklySchedule(),
    interval_s: float = 300.0,
) -> List[Tuple[ProcessRow, MachineState]]:
    """Labeled 5-minute process rows.

    Supply temperature sits at the 53 F setpoint while On, drifts toward
    ambient while Off, and ramps up to (at most) 65 F across a failure day.
    """
    if days < 1:
        raise ContractError("days must be >= 1")
    failure = set(failure_days)
    rng = make_rng(seed)
    zone = ZoneInfo(schedule.tz)
    start_local = dt.datetime.combine(start_date, dt.time(0, 0), tzinfo=zone)
    per_day = int(round(86400 / interval_s))
    rows = []
    for day_i in range(days):
        day = start_date + dt.timedelta(days=day_i)
        is_failure_day = day in failure
        for k in range(per_day):
            ts = (start_local + dt.timedelta(days=day_i, seconds=k * interval_s)).timestamp()
            off = schedule.is_off(ts)
            frac = k / per_day
            if is_failure_day:
                state = MachineState.ABNORMAL
                ramp = (CHILLER_FAILURE_PEAK_F - CHILLER_SETPOINT_F) * np.sin(np.pi * frac) ** 2
                supply1 = CHILLER_SETPOINT_F + ramp + rng.normal(0.0, 0.2)
                supply1 = min(supply1, CHILLER_FAILURE_PEAK_F)
            elif off:
                state = MachineState.OFF
                supply1 = AMBIENT_F + rng.normal(0.0, 1.0)
            else:
                state = MachineState.ON
                supply1 = CHILLER_SETPOINT_F + rng.normal(0.0, CHILLER_ON_SIGMA_F)
            supply2 = supply1 + rng.normal(0.0, 0.3)
            row = ProcessRow(
                timestamp_s=ts,
                air_pressure_1=90.0 + rng.normal(0.0, 1.5),
                air_pressure_2=88.0 + rng.normal(0.0, 1.5),
                chiller1_supply_tmp=float(supply1),
                chiller2_supply_tmp=float(supply2),
                outside_air_temp=AMBIENT_F + 10.0 * np.sin(2 * np.pi * frac) + rng.normal(0.0, 1.0),
                outside_humidity=55.0 + rng.normal(0.0, 5.0),
                outside_dewpoint=45.0 + rng.normal(0.0, 2.0),
            )
            rows.append((row, state))
    return rows


def chiller_series(labeled_rows) -> TimeSeries:
    """Chiller 1 supply temperature as a uniformly sampled series."""
    rows = [r for r, _ in labeled_rows]
    if len(rows) < 2:
        raise ContractError("need at least 2 process rows")
    interval = rows[1].timestamp_s - rows[0].timestamp_s
    return TimeSeries(
        start_s=rows[0].timestamp_s,
        interval_s=interval,
        values=np.array([r.chiller1_supply_tmp for r in rows]),
    )


@dataclass(frozen=True)
class SpikedSeries:
    series: TimeSeries
    spike_indices: np.ndarray  # injection log: positions of true anomalies


def generate_spiked_series(
    n: int,
    n_spikes: int,
    spike_rel: float = 0.3,
    level: float = 10.0,
    ar_coef: float = 0.2,
    noise_sigma: float = 0.05,
    seed: int = 0,
    interval_s: float = 1.0,
) -> SpikedSeries:
    """Learnable AR(1) signal around a positive level with multiplicative
    spikes injected at random positions; the injection log is the ground truth
    for detection scoring."""
    if n < 10 or n_spikes < 0 or n_spikes > n // 4:
        raise ContractError("need n >= 10 and 0 <= n_spikes <= n/4")
    rng = make_rng(seed)
    values = np.empty(n)
    prev = 0.0
    noise = rng.normal(0.0, noise_sigma, n)
    for i in range(n):
        prev = ar_coef * prev + noise[i]
        values[i] = level + prev
    # spikes only in the back half so a chronological split leaves them in test
    candidates = np.arange(n // 2 + 1, n)
    spikes = np.sort(rng.choice(candidates, size=n_spikes, replace=False))
    values[spikes] *= 1.0 + spike_rel
    return SpikedSeries(
        series=TimeSeries(start_s=0.0, interval_s=interval_s, values=values),
        spike_indices=spikes,
    )
