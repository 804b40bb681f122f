"""Acceptance criteria, one recorded PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -v``; the summary section
"acceptance criteria" lists every line with the measured values.
"""
import itertools
import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from multivenc.cli import main
from multivenc.encoding import (
    BUILTIN_SCHEMES,
    build_difference_system,
    builtin_preprocessor,
    builtin_scheme,
    random_preprocessor,
    with_snr,
)
from multivenc.errors import RankDeficiencyError
from multivenc.estimator import JointEstimator, noise_covariance, noise_sensitivity, preprocessed_sensitivity, wrap_phase
from multivenc.lattice import ambiguity_lattice, centered_parallelepiped, preprocessed_range_volume, reduce_normalized
from multivenc.simulator import TrialConfig, forward_wrap_integers, run_campaign


def lattice_of(name):
    return ambiguity_lattice(build_difference_system(builtin_scheme(name)))


def test_01_worked_diagonal_example(tmp_path, capsys, acceptance):
    cfg = tmp_path / "diag.toml"
    cfg.write_text('moments = [["0","0","0"],["1","0","0"],["0","1/2","0"],["0","0","1/3"]]\ngamma_m = "2*pi"\n')
    assert main(["range", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    rows = {l.split("  ")[0]: l.split("  ", 1)[1].strip() for l in out.splitlines() if "  " in l and not l.startswith("#")}
    basis = np.array([[float(x) for x in rows[f"basis v{i}"].split()] for i in (1, 2, 3)])
    perm_ok = sorted(map(tuple, np.abs(basis).tolist())) == [(0, 0, 3), (0, 2, 0), (1, 0, 0)]
    ok = rows["volume_exact"] == "6" and perm_ok
    acceptance("1 diag(1,1/2,1/3) lattice", ok, f"volume={rows['volume_exact']} basis={basis.tolist()}")
    assert ok


def test_02_balanced4_and_p91_p10(acceptance):
    d = build_difference_system(builtin_scheme("balanced4"))
    lat = ambiguity_lattice(d)
    p91 = preprocessed_range_volume(builtin_preprocessor("p91"), d)
    p10 = preprocessed_range_volume(builtin_preprocessor("p10"), d, samples=10_000_000, seed=2024)
    ratio = lat.exact_volume / p91.exact
    ok = (lat.exact_volume == 500_000 and p91.exact == 125_000 and ratio == 4
          and abs(p10.volume / 500_000 - 1) < 0.01)
    acceptance("2 balanced4 |Omega|, P91, P10", ok,
               f"|Omega|={lat.exact_volume} P91={p91.exact} ratio={float(ratio):.3f} "
               f"P10={p10.volume:.0f}+-{p10.stderr:.0f}")
    assert ok


def test_03_balanced5_and_p5(acceptance):
    d = build_difference_system(builtin_scheme("balanced5"))
    lat = ambiguity_lattice(d)
    p5 = preprocessed_range_volume(builtin_preprocessor("p5", d), d, samples=10_000_000, seed=2025)
    ratio = float(lat.exact_volume) / p5.volume
    ok = lat.exact_volume == 2_000_000 and abs(p5.volume / 1_333_333 - 1) < 0.01 and abs(ratio - 1.5) <= 0.02
    acceptance("3 balanced5 |Omega|, P5", ok,
               f"|Omega|={lat.exact_volume} P5={p5.volume:.0f}+-{p5.stderr:.0f} ratio={ratio:.4f}")
    assert ok


def test_04_perturbed_volume_gains(acceptance):
    r4 = lattice_of("perturbed4").exact_volume / lattice_of("balanced4").exact_volume
    r5 = lattice_of("perturbed5").exact_volume / lattice_of("balanced5").exact_volume
    ok = r4 == 4 and r5 == 2
    acceptance("4 perturbed/balanced volume ratios (want 4 and 2)", ok,
               f"perturbed4/balanced4={r4} ({float(r4):.4f}) perturbed5/balanced5={r5} ({float(r5):.4f})")
    assert r4 == 4, f"perturbed4 gain is {r4}, not 4"
    assert r5 == 2, f"perturbed5 gain is {r5}, not 2"


def test_05_data_processing_inequality(acceptance):
    lines, ok = [], True
    builtin = [("balanced4", "p91"), ("balanced4", "p10"), ("balanced5", "p5")]
    for model in ("first_order", "second_order"):
        gaps = []
        for scheme, pre in builtin:
            s = builtin_scheme(scheme)
            d = build_difference_system(s)
            nm = noise_covariance(s, model=model)
            eta = noise_sensitivity(d, nm)
            eta_p = preprocessed_sensitivity(builtin_preprocessor(pre, d), d, nm)
            ok &= eta_p >= eta * (1 - 1e-9)
            gaps.append(f"{pre}:{100 * (eta_p / eta - 1):+.2f}%")
        lines.append(f"{model} " + " ".join(gaps))

    rng = np.random.default_rng(20240601)
    checked = 0
    worst = math.inf
    while checked < 100:
        scheme = builtin_scheme(("balanced4", "balanced5")[checked % 2])
        d = build_difference_system(scheme)
        nm = noise_covariance(scheme, model=("first_order", "second_order")[(checked // 2) % 2])
        p = random_preprocessor(d.n_equations, rng)
        try:
            eta_p = preprocessed_sensitivity(p, d, nm)
        except RankDeficiencyError:
            continue  # P A loses a direction: eta_P is infinite, trivially >= eta
        worst = min(worst, eta_p / noise_sensitivity(d, nm))
        checked += 1
    ok &= worst >= 1 - 1e-9

    s5 = builtin_scheme("balanced5")
    d5 = build_difference_system(s5)
    nm5 = noise_covariance(s5, model="second_order")
    strict = noise_sensitivity(d5, nm5) < preprocessed_sensitivity(builtin_preprocessor("p5", d5), d5, nm5)
    ok &= strict
    acceptance("5 data processing inequality", ok,
               f"{'; '.join(lines)}; random min eta_P/eta={worst:.6f}; 5-point strict (second_order)={strict}")
    assert ok


@pytest.mark.parametrize("name", sorted(BUILTIN_SCHEMES))
def test_06_noiseless_round_trip(name, acceptance):
    s = builtin_scheme(name)
    d = build_difference_system(s)
    est = JointEstimator(d, noise_covariance(s))
    cell = centered_parallelepiped(est.lattice)
    rng = np.random.default_rng(6)
    alpha = rng.uniform(1e-3, 1 - 1e-3, size=(1000, 3))
    V = cell.origin + alpha @ cell.edges.T
    v_hat, k_hat, _ = est.estimate_batch(wrap_phase(V @ d.A.T))
    rel = np.max(np.linalg.norm(v_hat - V, axis=1) / np.linalg.norm(V, axis=1))
    k_true = np.array([forward_wrap_integers(d.A, v) for v in V])
    k_ok = np.array_equal(k_hat, k_true)
    ok = rel < 1e-9 and k_ok
    acceptance(f"6 noiseless round trip {name}", ok, f"max rel err={rel:.2e} k match={k_ok}")
    assert ok


def test_07_monte_carlo_consistency(acceptance):
    start = time.perf_counter()
    s = with_snr(builtin_scheme("balanced4"), 20)
    rep = run_campaign(TrialConfig(s, (10, 10, 10), trials=10_000, seed=7))
    elapsed = time.perf_counter() - start
    ok = rep.wrap_error_rate <= 1e-3 and 0.85 <= rep.det_ratio <= 1.15 and elapsed <= 300
    acceptance("7 Monte Carlo consistency", ok,
               f"wrap_error_rate={rep.wrap_error_rate:.4g} det ratio={rep.det_ratio:.4f} time={elapsed:.1f}s")
    assert ok


def test_08_tiling(acceptance):
    rng = np.random.default_rng(8)
    congruent = True
    tiles = True
    for name in sorted(BUILTIN_SCHEMES):
        lat = lattice_of(name)
        R = lat.system.rational
        Vinv = lat.rational_basis.inverse()
        origin = [-sum(lat.rational_basis.row(i)) / 2 for i in range(3)]
        for _ in range(250):
            w = [F(int(rng.integers(-10**6, 10**6)), int(rng.integers(1, 1000))) for _ in range(3)]
            shifted = [a - o for a, o in zip(w, origin)]
            r = [a + o for a, o in zip(reduce_normalized(shifted, lat), origin)]
            coeff = Vinv @ [a - o for a, o in zip(r, origin)]
            congruent &= all(0 <= c < 1 for c in coeff)
            congruent &= all(x.denominator == 1 for x in R @ [a - b for a, b in zip(w, r)])

        # exact coefficient ranges: every probe of the 3x3x3 block lies in exactly one translate
        grid = [F(k, 4) for k in range(-4, 8)]  # includes faces, edges and corners of the cells
        for alpha in itertools.product(grid, repeat=3):
            count = sum(
                all(0 <= a - n < 1 for a, n in zip(alpha, shift))
                for shift in itertools.product((-1, 0, 1), repeat=3)
            )
            tiles &= count == 1
    ok = congruent and tiles
    acceptance("8 tiling and exact reduction", ok, f"1000 reductions congruent={congruent} block tiling={tiles}")
    assert ok
