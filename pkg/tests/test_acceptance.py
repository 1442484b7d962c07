"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed in the terminal summary (see conftest.py). Every test
also asserts, so a failing criterion fails the run.
"""

import time
from fractions import Fraction
from pathlib import Path

import numpy as np

import conftest
from conftest import write_case
from nceval import cli
from nceval.attention import AttentionMap, ConstantMapParams, RegionSpec, build_constant_map, mask_attention_loss
from nceval.distribution import EmbeddingSet, GaussianStats, cvc_score, fit_gaussian, frechet_distance, sqrtm_psd
from nceval.masks import BinaryMask, extract_contour, overlap
from nceval.scoring import CANDIDATES, RawMetricVector, aggregate_overall, check_desiderata
from nceval.surface import surface_distances
from oracles import attention_loss_loop, overlap_loop, random_mask_pair, surface_loop

README = Path(__file__).resolve().parents[1] / "README.md"


def record(name, ok, detail):
    conftest.ACCEPTANCE_LINES.append((name, bool(ok), detail))
    assert ok, f"{name}: {detail}"


def test_c1_table_reproduction(reference_rows):
    start = time.perf_counter()
    worst, worst_name, count = 0.0, "", 0
    for table in ("comparison", "module_ablation", "training_order", "augment_ablation"):
        for row in reference_rows[table]:
            vec = RawMetricVector(**{k: row[k] for k in RawMetricVector.FIELDS})
            dev = abs(aggregate_overall(vec).overall - row["overall"])
            count += 1
            if dev > worst:
                worst, worst_name = dev, f"{table}/{row['model_name']}"
    elapsed = time.perf_counter() - start
    ok = count == 19 and worst <= 0.015 and elapsed < 1.0
    record("C1 table reproduction", ok,
           f"{count} rows, max |dev| {worst:.4f} ({worst_name}) <= 0.015, {elapsed:.3f}s < 1s")


def test_c2_desiderata(capsys):
    start = time.perf_counter()
    results = {name: check_desiderata(name) for name in CANDIDATES}
    code = cli.main(["check-functions"])
    out = capsys.readouterr().out
    elapsed = time.perf_counter() - start
    selected = sorted(n for n, r in results.items() if r.all_passed)
    uniform_only = all(
        not results[n].passed["uniform_rate"]
        and all(v for k, v in results[n].passed.items() if k != "uniform_rate")
        for n in ("f2", "f3")
    )
    ok = code == 0 and selected == ["f1", "f4"] and uniform_only and "all criteria met: f1, f4" in out \
        and elapsed < 1.0
    ratios = ", ".join(f"{n}={r.derivative_ratio:.3g}" for n, r in results.items())
    record("C2 desiderata", ok, f"all criteria met by {selected}; ratios {ratios}; {elapsed:.3f}s < 1s")


def test_c3_oracle_equivalence():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    dist_err = overlap_err = loop_err = 0.0
    for i in range(1000):
        a, b = random_mask_pair(rng, 64)
        ma, mb = BinaryMask(a), BinaryMask(b)
        ca, cb = extract_contour(ma), extract_contour(mb)
        fast = surface_distances(ca, cb, "field")
        brute = surface_distances(ca, cb, "brute")
        for x, y in ((fast.hausdorff, brute.hausdorff),
                     (fast.modified_hausdorff, brute.modified_hausdorff),
                     (fast.average_surface_distance, brute.average_surface_distance)):
            dist_err = max(dist_err, abs(x - y))
        r = overlap(ma, mb)
        d, u = overlap_loop(a.tolist(), b.tolist())
        overlap_err = max(overlap_err, abs(r.dice - d), abs(r.iou - u))
        if i % 25 == 0:
            # pure-Python double loop as a second, fully independent reference
            ref = surface_loop(list(ca), list(cb))
            got = (fast.hausdorff, fast.modified_hausdorff, fast.average_surface_distance)
            loop_err = max(loop_err, max(abs(g - e) for g, e in zip(got, ref)))
    elapsed = time.perf_counter() - start
    ok = dist_err <= 1e-9 and loop_err <= 1e-9 and overlap_err <= 1e-12 and elapsed < 60
    record("C3 oracle equivalence", ok,
           f"1000 pairs: field vs brute {dist_err:.1e} <= 1e-9, vs loop {loop_err:.1e}, "
           f"dice/iou vs loop {overlap_err:.1e} <= 1e-12, {elapsed:.1f}s < 60s")


def test_c4_fid_correctness():
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    closed = 0.0
    for _ in range(100):
        mu1, mu2 = rng.uniform(-50, 50, size=2)
        s1, s2 = rng.uniform(0.01, 20, size=2)
        r = frechet_distance(GaussianStats(np.array([mu1]), np.array([[s1 * s1]])),
                             GaussianStats(np.array([mu2]), np.array([[s2 * s2]])))
        closed = max(closed, abs(r.fid - ((mu1 - mu2) ** 2 + (s1 - s2) ** 2)))
    self_fid = 0.0
    for d in (2, 16, 64):
        x = rng.normal(size=(500, d))
        g = fit_gaussian(EmbeddingSet(x))
        self_fid = max(self_fid, frechet_distance(g, g).fid)
    recon = 0.0
    for _ in range(10):
        a = rng.normal(size=(64, 64))
        m = a.T @ a
        s = sqrtm_psd(m)
        recon = max(recon, np.linalg.norm(s @ s - m) / np.linalg.norm(m))
    elapsed = time.perf_counter() - start
    ok = closed <= 1e-9 and self_fid <= 1e-6 and recon <= 1e-8 and elapsed < 30
    record("C4 FID correctness", ok,
           f"1-D closed form {closed:.1e} <= 1e-9, FID(X,X) {self_fid:.1e} <= 1e-6, "
           f"sqrtm rel {recon:.1e} <= 1e-8, {elapsed:.2f}s < 30s")


def _random_regions(rng, n_pixels, n_words, n_chars):
    words = tuple(tuple(rng.choice(n_words, size=int(rng.integers(1, n_words + 1)), replace=False))
                  for _ in range(n_chars))
    pixels = tuple(frozenset(rng.choice(n_pixels, size=int(rng.integers(0, n_pixels + 1)), replace=False).tolist())
                   for _ in range(n_chars))
    return RegionSpec(words, pixels)


def test_c5_attention_properties():
    rng = np.random.default_rng(5)
    lin = lam_err = loop_err = 0.0
    for _ in range(200):
        p, w = int(rng.integers(1, 65)), int(rng.integers(1, 17))
        r = _random_regions(rng, p, w, int(rng.integers(1, 4)))
        v1, v2 = rng.random((p, w)), rng.random((p, w))
        m1, m2 = AttentionMap(v1), AttentionMap(v2)
        lam, c = rng.random(), rng.random()
        lin = max(lin,
                  abs(mask_attention_loss(m1 + m2, r, lam) - mask_attention_loss(m1, r, lam)
                      - mask_attention_loss(m2, r, lam)),
                  abs(mask_attention_loss(c * m1, r, lam) - c * mask_attention_loss(m1, r, lam)))
        l0, l1 = mask_attention_loss(m1, r, 0.0), mask_attention_loss(m1, r, 1.0)
        lam_err = max(lam_err, abs(mask_attention_loss(m1, r, lam) - (l0 + lam * (l1 - l0))))
        ref = attention_loss_loop(v1.tolist(), r.character_word_indices, r.target_pixels, lam)
        loop_err = max(loop_err, abs(mask_attention_loss(m1, r, lam) - ref))

    grad_err = 0.0
    vals = rng.random((16, 6))
    r = RegionSpec(((0, 2), (2, 4)), (frozenset({0, 1, 5, 9}), frozenset({5, 15})))
    lam, h = 0.5, 1e-4
    base = mask_attention_loss(AttentionMap(vals), r, lam)
    for pi in range(16):
        for wi in range(6):
            expected = sum((1.0 if pi in px else lam) for ws, px in zip(r.character_word_indices, r.target_pixels)
                           if wi in ws)
            bumped = vals.copy()
            bumped[pi, wi] += h
            grad = (mask_attention_loss(AttentionMap(bumped), r, lam) - base) / h
            grad_err = max(grad_err, abs(grad - expected))

    mass_ok = True
    for _ in range(200):
        hh, ww, nw = int(rng.integers(1, 17)), int(rng.integers(1, 17)), int(rng.integers(1, 8))
        total = int(rng.integers(1, 78))
        mask = BinaryMask(rng.random((hh, ww)) < rng.random())
        targets = set(rng.choice(nw, size=int(rng.integers(1, nw + 1)), replace=False).tolist())
        out = build_constant_map(np.zeros((hh * ww, nw)), ConstantMapParams(total, mask), targets)
        for word in range(nw):
            mass = sum(Fraction(float(v)) for v in out.values[:, word])
            want = mask.foreground_count() * Fraction(1.0 / total) if word in targets else 0
            mass_ok &= mass == want
    ok = lin <= 1e-12 and lam_err <= 1e-12 and loop_err <= 1e-12 and grad_err <= 1e-6 and mass_ok
    record("C5 attention properties", ok,
           f"linearity/homogeneity {lin:.1e}, lambda split {lam_err:.1e}, loop {loop_err:.1e} <= 1e-12; "
           f"fd gradient {grad_err:.1e} <= 1e-6; per-word mass exact: {mass_ok}")


def test_c6_metric_invariants():
    rng = np.random.default_rng(6)
    asym = identity = trans = 0.0
    order_ok = True
    for _ in range(1000):
        a, b = random_mask_pair(rng, 48)
        ca, cb = extract_contour(BinaryMask(a)), extract_contour(BinaryMask(b))
        ab, ba = surface_distances(ca, cb), surface_distances(cb, ca)
        asym = max(asym, abs(ab.hausdorff - ba.hausdorff), abs(ab.modified_hausdorff - ba.modified_hausdorff),
                   abs(ab.average_surface_distance - ba.average_surface_distance))
        order_ok &= ab.modified_hausdorff <= ab.hausdorff and ab.average_surface_distance <= ab.hausdorff
        r = overlap(BinaryMask(a), BinaryMask(b))
        if r.union:
            identity = max(identity, abs(r.dice - 2 * r.iou / (1 + r.iou)))
        # shift both masks onto a larger canvas; contours shift with them
        dy, dx = int(rng.integers(0, 16)), int(rng.integers(0, 16))
        pad = ((dy, 16 - dy), (dx, 16 - dx))
        ta, tb = extract_contour(BinaryMask(np.pad(a, pad))), extract_contour(BinaryMask(np.pad(b, pad)))
        moved = surface_distances(ta, tb)
        trans = max(trans, abs(moved.hausdorff - ab.hausdorff),
                    abs(moved.modified_hausdorff - ab.modified_hausdorff),
                    abs(moved.average_surface_distance - ab.average_surface_distance))
    ok = asym == 0.0 and order_ok and identity <= 1e-12 and trans <= 1e-12
    record("C6 metric invariants", ok,
           f"1000 pairs: symmetry gap {asym:.1e}, MHD<=HD and ASD<=HD: {order_ok}, "
           f"dice identity {identity:.1e} <= 1e-12, translation {trans:.1e}")


def test_c7_determinism(tmp_path, capsys):
    rng = np.random.default_rng(7)
    pairs = {f"p{i:03d}": random_mask_pair(rng, 64) for i in range(40)}
    x = rng.normal(size=(60, 8))
    manifest = write_case(tmp_path, pairs, (x, rng.normal(0.2, 1.1, size=(60, 8))))
    outs = []
    for jobs in ("1", "4", "8"):
        out = tmp_path / f"report_{jobs}.json"
        assert cli.main(["eval", str(manifest), "--out", str(out), "--jobs", jobs]) == 0
        outs.append(out.read_bytes())
    capsys.readouterr()
    ok = outs[0] == outs[1] == outs[2]
    record("C7 determinism", ok, f"jobs 1/4/8 over 40 pairs -> byte-identical JSON: {ok}")


def test_c8_cvc_convergence_and_statement():
    mu1, mu2 = np.array([0.0, 1.0, -1.0]), np.array([0.5, 0.0, -1.0])
    sd1, sd2 = np.array([1.0, 2.0, 0.5]), np.array([1.5, 1.0, 0.5])
    analytic = float(np.sum((mu1 - mu2) ** 2) + np.sum((sd1 - sd2) ** 2))
    errors = []
    for n in (100, 1_000, 10_000, 100_000):
        r = np.random.default_rng(8)
        gen = mu1 + sd1 * r.standard_normal((n, 3))
        ref = mu2 + sd2 * r.standard_normal((n, 3))
        errors.append(abs(cvc_score(gen, ref) - analytic))
    # shrinks with n; at 1e5 samples the sampling error is about 1% of the target
    converged = errors[-1] < errors[0] and errors[-1] < 0.02 * analytic
    text = " ".join(README.read_text(encoding="utf-8").split()) if README.exists() else ""
    statement = "not reproducible" in text and "FID" in text and "CLIP" in text
    record("C8 non-reproducibility + CVC convergence", converged and statement,
           f"|cvc - analytic| {' -> '.join(f'{e:.3g}' for e in errors)} (target {analytic:.2f}); "
           f"README statement present: {statement}")
