"""Deterministic harmonic test tones for fixtures.

Each tone is additive: partial k at amplitude k**-gamma with gamma
swept linearly across the clip, so a single clip covers a family of
timbres (moving spectral centroid) at fixed pitch.  Random-phase
partials avoid pathological peak alignment; everything is seeded.
"""

import numpy as np

from timbrelab import dsp

SAMPLE_RATE = 44100

# One octave, C major, equal temperament (A4 = 440).
C_MAJOR_OCTAVE = {
    "C": 261.6256,
    "D": 293.6648,
    "E": 329.6276,
    "F": 349.2282,
    "G": 391.9954,
    "A": 440.0,
    "B": 493.8833,
}
PITCH_CLASS = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}


def harmonic_tone(f0, num_samples, rolloff=(0.7, 1.7), partials=10,
                  amp=0.45, phase_seed=0, sample_rate=SAMPLE_RATE):
    """Harmonic tone with a linear spectral-rolloff sweep.

    ``rolloff`` gives the (start, end) exponent; larger values darken
    the timbre.  Output peak is scaled to ``amp``.
    """
    t = np.arange(num_samples) / sample_rate
    gamma = np.linspace(rolloff[0], rolloff[1], num_samples)
    rng = np.random.default_rng(phase_seed)
    y = np.zeros(num_samples)
    for k in range(1, partials + 1):
        fk = k * f0
        if fk >= sample_rate / 2:
            break
        phase = rng.uniform(0.0, 2.0 * np.pi)
        y += float(k) ** -gamma * np.sin(2.0 * np.pi * fk * t + phase)
    return amp * y / np.max(np.abs(y))


def profile_tone(f0, num_samples, amps, phase_seed=0, amp=0.45,
                 sample_rate=SAMPLE_RATE):
    """Harmonic tone with an explicit per-partial amplitude profile.

    ``amps`` maps partial number (1-based) to amplitude; partials at or
    above Nyquist are skipped.  Output peak is scaled to ``amp``.
    """
    t = np.arange(num_samples) / sample_rate
    rng = np.random.default_rng(phase_seed)
    y = np.zeros(num_samples)
    for k in sorted(amps):
        fk = k * f0
        phase = rng.uniform(0.0, 2.0 * np.pi)
        if fk >= sample_rate / 2:
            continue
        y += amps[k] * np.sin(2.0 * np.pi * fk * t + phase)
    return amp * y / np.max(np.abs(y))


# Distinct per-note profiles, energy concentrated in octave partials
# (k = 1, 2, 4, 8) so strong bins dominate and pitch class stays
# unambiguous; the faint odd tail varies the timbre without moving
# significant energy into weak bins.
def octave_profile(index):
    return {
        1: 1.0,
        2: 0.85 - 0.06 * index,
        4: 0.40 + 0.05 * index,
        8: 0.62 - 0.04 * index,
        3: 0.10 + 0.01 * index,
        5: 0.08,
        7: 0.06,
    }


def inharmonic_bed(num_samples, amp, seed, lo=100.0, hi=16000.0, count=500,
                   sample_rate=SAMPLE_RATE):
    """Steady inharmonic floor: log-spaced, jittered, random-phase sines.

    Dense enough that every analysis bin across [lo, hi] carries a
    stable nonzero magnitude — the spectral equivalent of a fixed noise
    floor, but deterministic and frame-invariant.
    """
    rng = np.random.default_rng(seed)
    freqs = np.geomspace(lo, hi, count) * rng.uniform(0.98, 1.02, count)
    phases = rng.uniform(0.0, 2.0 * np.pi, count)
    t = np.arange(num_samples) / sample_rate
    y = np.zeros(num_samples)
    for i in range(0, count, 50):  # chunked: count x num_samples won't fit
        f, p = freqs[i:i + 50], phases[i:i + 50]
        y += amp * np.sin(2.0 * np.pi * f[:, None] * t[None, :]
                          + p[:, None]).sum(axis=0)
    return y


def layered_tone(f0, num_samples, amps, bed_amp=0.0, phase_seed=0,
                 bed_seed=0, amp=0.45, sample_rate=SAMPLE_RATE):
    """Profile tone plus optional inharmonic bed, normalized jointly."""
    t = np.arange(num_samples) / sample_rate
    rng = np.random.default_rng(phase_seed)
    y = np.zeros(num_samples)
    for k in sorted(amps):
        phase = rng.uniform(0.0, 2.0 * np.pi)
        if k * f0 >= sample_rate / 2:
            continue
        y += amps[k] * np.sin(2.0 * np.pi * k * f0 * t + phase)
    if bed_amp > 0.0:
        y += inharmonic_bed(num_samples, bed_amp, bed_seed,
                            sample_rate=sample_rate)
    return amp * y / np.max(np.abs(y))


def samples_for_frames(num_frames, fft_size=dsp.FFT_SIZE, hop=dsp.HOP):
    """Exact sample count yielding ``num_frames`` analysis frames."""
    return fft_size + (num_frames - 1) * hop


def write_tone_clip(path, f0, num_frames, rolloff=(0.7, 1.7), phase_seed=0):
    """Synthesize and write one clip sized to ``num_frames`` frames."""
    y = harmonic_tone(f0, samples_for_frames(num_frames),
                      rolloff=rolloff, phase_seed=phase_seed)
    dsp.write_wav(path, dsp.AudioBuffer(y))
