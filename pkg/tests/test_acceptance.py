"""Acceptance criteria, each at its stated tolerance.

Every test records one ``PASS``/``FAIL`` (or ``WARN`` for the soft criterion)
line; ``conftest.py`` prints them at the end of the pytest run.  Run
``pytest tests/test_acceptance.py -v`` for the criteria alone, or
``python tests/test_acceptance.py`` to print the lines directly.

Criteria 5-7 share one set of five desk-scale training runs (about 3.5 min
each on one CPU core).
"""

import itertools
import math
import re
import time
import warnings
from pathlib import Path

import numpy as np
import pytest
import torch
from scipy.stats import spearmanr

from polardeblur import fbp, polar, wavesim
from polardeblur.angconv import (NAMED_KERNELS, angular_convolve_adjoint_array, angular_convolve_array,
                                 make_kernel)
from polardeblur.grid import CartesianImage, make_grid, pixel_centers
from polardeblur.nn import NetConfig, PolarUNet, loss_dip, loss_nn2i, loss_ssltv, loss_supervised, value_and_grad
from polardeblur.otstop import emd, pairwise_distances
from polardeblur.pipeline import ExperimentConfig, build_dataset, evaluate, paper_preset, run_training
from polardeblur.pipeline.metrics import TABLE_ALPHAS, TABLE_KERNELS, write_table

RESULTS = []
SEEDS = (0, 1, 2, 3, 4)
PAPER = Path(__file__).resolve().parents[1] / "paper.md"


def record(key, ok, detail, soft=False):
    status = "PASS" if ok else ("WARN" if soft else "FAIL")
    line = f"[{status}] {key}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def bump(M, cx, cy, s):
    c = pixel_centers(M)
    X, Y = np.meshgrid(c, c, indexing="ij")
    return np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * s * s))


# 1. operator identities

def test_1a_left_inverse():
    t0 = time.time()
    errs = {M: fbp.left_inverse_residual(CartesianImage(bump(M, 0.1, -0.2, 0.15), make_grid(M)))
            for M in (64, 128, 256)}
    dt = time.time() - t0
    ok = errs[128] <= 0.10 and errs[64] > errs[128] > errs[256] and dt <= 300
    assert record("1a left inverse", ok,
                  "rel err " + ", ".join(f"M={M}: {e:.4f}" for M, e in errs.items())
                  + f" (<= 0.10 at 128, strictly decreasing), {dt:.0f} s (<= 300 s)")


def test_1b_blur_commutation():
    g = make_grid(128)
    w = make_kernel("Indicator-20", g.N_phi)
    x = bump(128, 0.2, -0.3, 0.12)
    lhs = polar.to_polar_array(fbp.inverse_array(wavesim.forward_blurred_array(x, w, g), g), g)
    rhs = angular_convolve_array(polar.to_polar_array(x, g), w.weights)
    err = fbp.relative_error(lhs, rhs)
    # measured 0.0121; budget 0.12, regression pin +50%
    assert record("1b blur commutation", err <= 0.12 and err <= 0.018,
                  f"|P V U C A P x - A P x| / |A P x| = {err:.4f} (<= 0.12, pinned <= 0.018)")


def test_1c_adjoint():
    rng = np.random.default_rng(0)
    N_phi = make_grid(64).N_phi
    worst = 0.0
    for name in NAMED_KERNELS:
        w = make_kernel(name, N_phi).weights
        for _ in range(100):
            p, q = rng.normal(size=(2, N_phi, 32))
            lhs = np.vdot(angular_convolve_array(p, w), q)
            rhs = np.vdot(p, angular_convolve_adjoint_array(q, w))
            worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(p) * np.linalg.norm(q)))
    assert record("1c adjoint", worst <= 1e-10,
                  f"max |<Ap,q> - <p,A^T q>| / |p||q| = {worst:.2e} over 100 pairs x {len(NAMED_KERNELS)} kernels "
                  "(<= 1e-10)")


def test_1d_delta_identity():
    rng = np.random.default_rng(1)
    p = rng.normal(size=(201, 32))
    out = angular_convolve_array(p, make_kernel("Delta", 201).weights)
    assert record("1d delta identity", np.array_equal(out, p) and out.tobytes() == p.tobytes(),
                  "Delta convolution bit-exact")


# 2. loss structure

def test_2_loss_offset():
    t0 = time.time()
    rng = np.random.default_rng(2)
    d, n = 16, 10_000
    A = rng.normal(size=(d, d)) / np.sqrt(d)
    L = np.tril(rng.normal(size=(d, d))) / np.sqrt(d)
    x = rng.uniform(size=(n, d))
    xi = rng.normal(size=(n, d)) @ L.T
    eta = rng.normal(size=(n, d)) @ L.T
    y = x @ A.T + xi
    noise_term = ((eta - xi) ** 2).sum(1)
    mc = noise_term.mean()
    offsets, ok = [], True
    for _ in range(5):
        B = rng.normal(size=(d, d)) / np.sqrt(d)
        z = (y + eta) @ B.T @ A.T
        per = ((z - (y - eta)) ** 2).sum(1) - ((z - x @ A.T) ** 2).sum(1)
        se = (per - noise_term).std(ddof=1) / np.sqrt(n)
        offsets.append(per.mean())
        ok &= abs(per.mean() - mc) <= 2 * se
    dt = time.time() - t0
    ok &= dt <= 60
    assert record("2 loss offset", bool(ok),
                  f"offsets {', '.join(f'{o:.4f}' for o in offsets)} vs E|eta-xi|^2 = {mc:.4f} "
                  f"(each within 2 SE), {dt:.1f} s")


# 3. gradients

def _fd_worst(loss_fn, net, *args, step=1e-5):
    _, grads = value_and_grad(loss_fn, net, *args)
    worst = 0.0
    with torch.no_grad():
        for p, g in zip(net.parameters(), grads):
            flat, gflat = p.view(-1), g.view(-1)
            for i in range(flat.numel()):
                old = flat[i].item()
                flat[i] = old + step
                up = float(loss_fn(net, *args))
                flat[i] = old - step
                down = float(loss_fn(net, *args))
                flat[i] = old
                fd = (up - down) / (2 * step)
                worst = max(worst, abs(fd - gflat[i].item()) / max(abs(fd), abs(gflat[i].item()), 1e-6))
    return worst


def test_3_gradients():
    cfg = NetConfig(levels=2, base_width=2, convs_per_level=1)
    gen = torch.Generator().manual_seed(3)
    rand = lambda *s: torch.rand(s, generator=gen, dtype=torch.float64)
    w = (0.2, 0.5, 0.3)
    y, y2, eta = rand(2, 16, 8), rand(2, 16, 8), 0.1 * rand(2, 16, 8)
    worst = {}
    for name, fn, args in [("nn2i", loss_nn2i, (y, eta, w)), ("supervised", loss_supervised, (y, y2)),
                           ("ssltv", loss_ssltv, (y, w, 0.1)), ("dip", loss_dip, (y[0], y2[0], w))]:
        net = PolarUNet(cfg).double().reset_parameters(7)
        with torch.no_grad():
            for pname, p in net.named_parameters():
                if pname.endswith("bias"):
                    p.uniform_(-0.1, 0.1, generator=gen)
        n_params = net.parameter_count()
        worst[name] = _fd_worst(lambda n, *a, fn=fn: fn(n, *a), net, *args)
    ok = max(worst.values()) <= 1e-4 and n_params <= 500
    assert record("3 gradients", ok,
                  ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
                  + f" max rel err (<= 1e-4, {n_params} params, float64)")


# 4. EMD exactness

def test_4_emd_exact():
    rng = np.random.default_rng(4)
    exact = True
    for n in range(1, 7):
        for _ in range(50):
            a, b = rng.normal(size=(2, n, 3))
            D = pairwise_distances(a, b)
            brute = min(math.fsum(D[i, p[i]] for i in range(n)) / n for p in itertools.permutations(range(n)))
            cost, plan = emd(a, b)
            exact &= cost == brute
    axioms = True
    for _ in range(50):
        n = int(rng.integers(1, 9))
        a, b, c = rng.normal(size=(3, n, 4))
        ab = emd(a, b)[0]
        axioms &= ab == emd(b, a)[0]
        axioms &= emd(a, c)[0] <= ab + emd(b, c)[0] + 1e-12
        axioms &= emd(a, a)[0] == 0 and emd(a, a[rng.permutation(n)])[0] == 0 and ab > 0
    assert record("4 EMD exactness", bool(exact and axioms),
                  f"assignment == brute force on 300 instances (N=1..6, 50 each): {bool(exact)}; "
                  f"symmetry/triangle/identity on 50 triples: {bool(axioms)}")


# 5-7. end-to-end desk runs

@pytest.fixture(scope="module")
def desk_runs():
    runs = {}
    t0 = time.time()
    for seed in SEEDS:
        cfg = ExperimentConfig(seed=seed)
        records = build_dataset(cfg)
        ckpt, trace = run_training(cfg, records)
        runs[seed] = (cfg, records, ckpt, trace, evaluate(ckpt, records, cfg))
    return runs, time.time() - t0


def test_5_desk_improvement(desk_runs):
    runs, dt = desk_runs
    gains = {s: r[4].gain for s, r in runs.items()}
    wins = sum(g >= 1.0 for g in gains.values())
    parts = [f"seed {s}: {r[4].mean:.2f} vs {r[4].baseline_mean:.2f} dB ({gains[s]:+.2f}, k*={r[2].step})"
             for s, r in runs.items()]
    assert record("5 desk improvement", wins >= 4 and dt <= 1800,
                  "; ".join(parts) + f"; {wins}/5 seeds >= +1.0 dB (need 4), {dt / 60:.1f} min (<= 30)")


def test_5b_stop_rules_agree(desk_runs):
    # the oracle-PSNR choice on the same trace vs the EMD choice
    runs, _ = desk_runs
    close = []
    for s, (cfg, _, ckpt, trace, _) in runs.items():
        k_psnr = trace.iterations[int(np.argmax(trace.val_psnr))]
        close.append(abs(k_psnr - ckpt.step) <= cfg.patience * cfg.check_every)
    assert record("5b EMD vs oracle-PSNR stop", sum(close) >= 3,
                  f"selections within the patience window in {sum(close)}/5 seeds (need 3)")


def test_6_emd_psnr_anticorrelation(desk_runs):
    runs, _ = desk_runs
    rhos = {s: spearmanr(r[3].emd, r[3].psnr).correlation for s, r in runs.items()}
    hits = sum(rho <= -0.5 for rho in rhos.values())
    ok = hits >= 3
    detail = ", ".join(f"seed {s}: {rho:+.2f}" for s, rho in rhos.items()) + f"; {hits}/5 <= -0.5 (need 3)"
    record("6 EMD/PSNR anticorrelation", ok, detail, soft=True)
    if not ok:
        warnings.warn(f"soft criterion 6 not met: {detail}")


def test_7_determinism(desk_runs):
    runs, _ = desk_runs
    cfg, _, _, trace, report = runs[SEEDS[0]]
    records = build_dataset(cfg)
    ckpt2, trace2 = run_training(cfg, records)
    again = evaluate(ckpt2, records, cfg)
    same = again.to_bytes() == report.to_bytes() and trace2 == trace
    assert record("7 determinism", same,
                  f"seed {SEEDS[0]} rerun: MetricsReport byte-identical {again.to_bytes() == report.to_bytes()}, "
                  f"trace identical {trace2 == trace}")


# 8. reference table

def _published_table():
    text = PAPER.read_text()
    rows = {}
    for name in ("DIP", "SSLTV", "Ours"):
        m = re.search(rf"^{name}\s*&(.*)\\\\\s*$", text, re.M)
        rows[name] = [float(v) for v in re.findall(r"(\d+\.\d+)", m.group(1))]
    return rows


def test_8_table_format(tmp_path):
    cfg = paper_preset(kernel="Indicator-10", alpha=0.02)
    preset = (cfg.M, cfg.n_train, cfg.n_val, cfg.n_test, cfg.batch, cfg.iters, cfg.lr) == \
        (256, 600, 100, 100, 15, 100_000, 1e-4)
    cells = [(k, a) for k in TABLE_KERNELS for a in TABLE_ALPHAS]
    results, ref = {}, None
    if PAPER.exists():
        table = _published_table()
        ref = table["Ours"][0]
        results = {(m, k, a): v for m, vals in table.items() for (k, a), v in zip(cells, vals)}
    else:
        results = {("Ours", "Indicator-10", 0.02): 31.93}
    rows = write_table(tmp_path / "table.csv", results).read_text().splitlines()
    header = rows[0].split(",")
    ours = next(r for r in rows if r.startswith("Ours,")).split(",")
    ok = preset and header[1] == "Indicator-10/0.02" and len(header) == 13 and ours[1] == "31.93"
    ok &= ref in (None, 31.93)
    assert record("8 reference table", ok,
                  f"paper-scale preset {preset}; Table-format CSV with {len(header) - 1} cells; "
                  f"Ours/Indicator-10/0.02 = {ours[1]} dB (full-scale reference 31.93, not desk-reproduced)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
