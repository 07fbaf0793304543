import numpy as np
import pytest

from promrep import dsp

SR = dsp.SAMPLE_RATE


def sine(freq, seconds=1.0, amp=1.0, sr=SR, phase=0.0):
    t = np.arange(int(round(seconds * sr))) / sr
    return dsp.AudioBuffer(amp * np.sin(2 * np.pi * freq * t + phase), sr)


def noisy_sine(freq, rng, seconds=1.0, snr_db=20.0, sr=SR):
    x = sine(freq, seconds, sr=sr).samples
    noise = rng.normal(size=x.size)
    noise *= np.sqrt(np.mean(x ** 2) / np.mean(noise ** 2)) / 10 ** (snr_db / 20)
    return dsp.AudioBuffer(x + noise, sr)


def harmonic_voice(f0, rng, seconds=2.0, sr=SR, top_hz=5000.0, peak=0.5):
    """Stationary harmonic tone with 1/k amplitudes and a faint noise floor."""
    t = np.arange(int(round(seconds * sr))) / sr
    x = np.zeros_like(t)
    for k in range(1, int(top_hz // f0) + 1):
        x += np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k
    x += rng.normal(size=t.size) * 1e-3
    return dsp.AudioBuffer(peak * x / np.max(np.abs(x)), sr)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, with its measured detail."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::" not in nodeid or rep.when != "call" and outcome != "error":
                continue
            detail = dict(getattr(rep, "user_properties", ())).get("detail", "")
            name = nodeid.split("::")[-1]
            lines.append((name, "PASS" if outcome == "passed" else "FAIL", detail))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status, detail in sorted(lines):
            terminalreporter.write_line(f"{status} {name} {detail}".rstrip())
