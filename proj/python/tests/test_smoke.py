import math

import numpy as np
import pytest

import kdvks


@pytest.fixture(scope="module")
def wave():
    return kdvks.compute_wave(0.0, 7.85, 128)


def test_wave(wave):
    assert wave.period == 7.85
    assert wave.residual < 1e-10
    assert wave.profile.shape == (128,)
    assert abs(wave.profile.mean()) < 1e-12
    assert wave.x[1] == pytest.approx(7.85 / 128)


def test_symbol_matches_formula():
    eps, delta, c, k = 0.3, math.sqrt(1 - 0.09), 0.2, 1.7
    z = kdvks.symbol(eps, delta, c, k)
    assert z.real == pytest.approx(delta * (k**2 - k**4))
    assert z.imag == pytest.approx(c * k + eps * k**3)


def test_stability_and_expansion(wave):
    v = kdvks.certify_stability(wave)
    assert v["verdict"] == "stable"
    branches, xi1 = kdvks.critical_expansion(wave)
    assert xi1 > 0
    assert branches[0]["a"] == pytest.approx(-branches[1]["a"], abs=1e-8)
    assert branches[0]["d"] > 0


def test_eigenvalues_sorted(wave):
    lam = np.array(kdvks.bloch_eigenvalues(wave, 0.1, 64))
    assert lam.dtype == complex
    assert np.all(np.diff(lam.real) <= 1e-12)
    assert lam[0].real < 0


def test_gaps_shrink(wave):
    g = kdvks.gap_scan(wave, [1, 2, 4], 64)
    assert g[1] > g[2] > g[4] > 0


def test_semigroup_of_constant(wave):
    one = np.ones(64)
    out = kdvks.apply_semigroup(wave, 1, 2.0, one, 64)
    up = np.fft.ifft(1j * 2 * np.pi * np.fft.fftfreq(128, d=7.85 / 128) * np.fft.fft(wave.profile)).real
    want = 1.0 - 2.0 * up[::2]
    assert np.max(np.abs(out - want)) < 1e-8


def test_simulate_decays(wave):
    r = kdvks.simulate(wave, n=1, perturb="bump:amplitude=0.01", dt=0.01, tend=20.0, snapshots=4)
    assert r["u"].shape == (5, 128)
    assert r["distance"][-1] < r["distance"][0]
    assert max(r["mass"]) - min(r["mass"]) < 1e-12


def test_field_round_trip(tmp_path, wave):
    kdvks.write_field(tmp_path / "f.bin", wave.profile, wave.period)
    v, length = kdvks.read_field(tmp_path / "f.bin")
    assert length == wave.period
    assert np.array_equal(v, wave.profile)
    kdvks.save_profile(tmp_path, "w", wave)
    back = kdvks.load_profile(tmp_path / "w.json")
    assert back.speed == wave.speed


def test_errors(wave, tmp_path):
    with pytest.raises(ValueError):
        kdvks.compute_wave(1.5, 7.85, 128)
    with pytest.raises(ValueError):
        kdvks.simulate(wave, perturb="wave:amplitude=1")
    with pytest.raises(ValueError):
        kdvks.read_field(tmp_path / "missing.bin")
