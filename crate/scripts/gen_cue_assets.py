#!/usr/bin/env python3
"""Generate the placeholder emotion-cue waveforms and their manifest.

Each emotion gets a distinct synthetic signature; higher ranks are longer and
louder. Output is 16-bit mono PCM at 22.05 kHz, deterministic per seed.
"""
import json
import os
import sys
import wave

import numpy as np

RATE = 22050
AMPS = [0.3, 0.5, 0.7]

DURATIONS = {
    "sighs": [0.4, 0.5, 0.7],
    "cries": [0.6, 0.8, 1.0],
    "laughs": [0.5, 0.7, 0.9],
    "smiles": [0.3, 0.35, 0.4],
}


def envelope(n, attack=0.1, release=0.4):
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    env = np.ones(n)
    a = t < attack
    env[a] = t[a] / attack
    r = t > 1.0 - release
    env[r] = (1.0 - t[r]) / release
    return env


def sighs(n, rng):
    noise = rng.standard_normal(n)
    # one-pole lowpass for a breathy band
    out = np.empty(n)
    acc = 0.0
    for i, x in enumerate(noise):
        acc = 0.92 * acc + 0.08 * x
        out[i] = acc
    return out / (np.abs(out).max() or 1.0) * envelope(n, 0.3, 0.6)


def cries(n, rng):
    t = np.arange(n) / RATE
    f = 420.0 + 35.0 * np.sin(2 * np.pi * 6.0 * t) - 80.0 * t
    phase = 2 * np.pi * np.cumsum(f) / RATE
    return (np.sin(phase) + 0.15 * rng.standard_normal(n)) * envelope(n, 0.05, 0.5)


def laughs(n, rng):
    t = np.arange(n) / RATE
    gate = (np.sin(2 * np.pi * 5.0 * t) > 0.2).astype(float)
    return np.sin(2 * np.pi * 300.0 * t) * gate * envelope(n, 0.02, 0.3)


def smiles(n, rng):
    t = np.arange(n) / RATE
    f = 500.0 + 400.0 * t / t[-1]
    phase = 2 * np.pi * np.cumsum(f) / RATE
    return (0.6 * np.sin(phase) + 0.4 * rng.standard_normal(n) * 0.3) * envelope(n, 0.2, 0.5)


GEN = {"sighs": sighs, "cries": cries, "laughs": laughs, "smiles": smiles}


def write(path, x):
    pcm = np.clip(np.round(np.clip(x, -1, 1) * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(path, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(RATE)
        w.writeframes(pcm.tobytes())


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for k, (emotion, durs) in enumerate(sorted(DURATIONS.items())):
        for rank, dur in enumerate(durs):
            rng = np.random.default_rng(1000 * k + rank)
            n = int(round(dur * RATE))
            x = GEN[emotion](n, rng)
            x = x / (np.abs(x).max() or 1.0) * AMPS[rank]
            name = f"{emotion}_{rank}.wav"
            write(os.path.join(out_dir, name), x)
            entries.append({"emotion": emotion, "rank": rank, "path": name})
    manifest = {"sample_rate": RATE, "default": {"emotion": "sighs", "rank": 1}, "entries": entries}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/assets/cues")
