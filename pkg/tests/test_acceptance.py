"""End-to-end gates for the assembled package.

One test per contract-level guarantee, meant to be read as a checklist:
run `pytest tests/test_acceptance.py -v` for the pass/fail lines. The two
hyperspectral gates need prepared Samson rasters and skip unless
POLYX_SAMSON_DIR points at them (docs/samson.md has the recipe).
"""

from __future__ import annotations

import os
import pathlib
import time

import numpy as np
import pytest

from polyx import bench, classify, cli, density, geom, minnorm, qp_baseline, unmix

import helpers

_SAMSON_DIR = os.environ.get("POLYX_SAMSON_DIR", "")

needs_samson = pytest.mark.skipif(
    not _SAMSON_DIR,
    reason="set POLYX_SAMSON_DIR to the prepared Samson rasters (docs/samson.md)",
)


def _inject_redundancy(P: geom.PolyhedronH, gen: np.random.Generator,
                       dups: int = 2, combos: int = 2) -> geom.PolyhedronH:
    """Append rows that provably cut nothing: shifted duplicates and
    normalized convex combinations with explicit slack. Originals keep
    their positions, so the irredundant core is exactly the prefix."""
    V, S = P.matrix()
    rows = [(float(s), v) for s, v in zip(S, V)]
    for _ in range(dups):
        i = int(gen.integers(P.k))
        rows.append((float(S[i]) + float(gen.uniform(0.1, 1.0)), V[i]))
    for _ in range(combos):
        while True:
            i, j = (int(a) for a in gen.integers(P.k, size=2))
            lam = float(gen.uniform(0.2, 0.8))
            u = lam * V[i] + (1.0 - lam) * V[j]
            norm = float(np.linalg.norm(u))
            if norm > 0.1:
                break
        t = (lam * float(S[i]) + (1.0 - lam) * float(S[j])) / norm
        rows.append((t + float(gen.uniform(0.05, 0.3)), u / norm))
    return geom.PolyhedronH.from_rows(rows)


def test_exact_solver_agrees_with_enumeration_oracle():
    t0 = time.monotonic()
    for i in range(500):
        n = 2 + i % 5
        k = 1 + (i // 5) % 8
        gen = helpers.seeded("acceptance-oracle", i)
        P = helpers.random_polyhedron(n, k, gen)
        # alternate exterior queries with unconstrained draws that land on
        # either side, so both solver regimes face the oracle
        if i % 2 == 0:
            x = helpers.exterior_query(P, gen)
        else:
            x = gen.normal(size=n) * 0.6
        got = minnorm.solve(P, x)
        ref = qp_baseline.brute_force(P, x)
        assert abs(np.linalg.norm(got.point - x) - np.linalg.norm(ref - x)) <= 1e-8
        assert float(np.max(np.abs(got.point - ref))) <= 1e-6
    assert time.monotonic() - t0 < 30.0


def test_every_projection_passes_the_support_test():
    violations = 0
    total = 0
    for i in range(200):
        n = 2 + i % 5
        k = 1 + i % 8
        gen = helpers.seeded("acceptance-support", i)
        P = helpers.random_polyhedron(n, k, gen)
        for x in (helpers.exterior_query(P, gen), gen.normal(size=n)):
            res = minnorm.solve(P, x)
            total += 1
            violations += not minnorm.is_min_norm(x, res.point, P)
            # a foot point must be its own projection
            again = minnorm.solve(P, res.point)
            total += 1
            violations += not minnorm.is_min_norm(res.point, again.point, P)
    assert total == 800
    assert violations == 0


def test_interior_distance_equals_deepest_margin_of_reduced_form():
    # generator offsets stay in [0.5, 1.5] with unit normals, so the ball
    # of radius 0.49 is certified interior
    ks = (6, 10, 15, 22, 9, 13, 18, 7)
    checked = 0
    for idx in range(20):
        n = 2 + idx % 4
        P, _ = bench.random_polyhedron(n, ks[idx % 8], seed=3000 + idx)
        gen = helpers.seeded("acceptance-inside", idx)
        if idx % 2:
            P = _inject_redundancy(P, gen)
        Vr, Sr = geom.min_h_description(P).matrix()
        for _ in range(500):
            u = gen.normal(size=n)
            u /= np.linalg.norm(u)
            x = u * 0.49 * float(gen.uniform()) ** (1.0 / n)
            got = minnorm.solve(P, x).signed_distance
            assert got <= 0.0
            assert abs(got - float((Vr @ x - Sr).max())) <= 1e-10
            checked += 1
    assert checked == 10_000


def test_reduction_keeps_exactly_the_necessary_rows():
    pent = helpers.pentad()
    reduced = geom.min_h_description(pent)
    assert reduced.k == 3
    for kept, orig in zip(reduced.halfspaces, pent.halfspaces[:3]):
        assert kept.offset == orig.offset
        assert np.array_equal(kept.normal, orig.normal)

    for j in range(100):
        n = 2 + j % 4
        k = 3 + j % 6
        P, _ = bench.random_polyhedron(n, k, seed=9000 + j)
        gen = helpers.seeded("acceptance-reduce", j)
        P_aug = _inject_redundancy(P, gen)
        R = geom.min_h_description(P_aug)
        assert R.k == P.k
        pts = gen.uniform(-2.5, 2.5, size=(1000, n))
        Va, Sa = P_aug.matrix()
        Vr, Sr = R.matrix()
        in_aug = (Va @ pts.T - Sa[:, None]).max(axis=0) <= geom.DEFAULT_TOL
        in_red = (Vr @ pts.T - Sr[:, None]).max(axis=0) <= geom.DEFAULT_TOL
        assert np.array_equal(in_aug, in_red)


_FIXED_KS = (1, 2, 3, 5, 7, 10, 14, 20, 28, 40, 56, 80, 100)


@pytest.fixture(scope="module")
def fixed_n_rows():
    cfg = bench.BenchConfig(
        mode="fixed-n", k_values=_FIXED_KS, seed=20260819, n_fixed=3,
        reps=200, time_budget_per_solve=10.0,
    )
    return bench.run_benchmark(cfg)


@pytest.fixture(scope="module")
def square_rows():
    cfg = bench.BenchConfig(
        mode="n-eq-k", k_values=(15, 28), seed=20260819,
        reps=20, time_budget_per_solve=10.0,
    )
    return bench.run_benchmark(cfg)


def _mean_by_k(rows, field):
    out = {}
    for k in sorted({r["k"] for r in rows}):
        out[k] = float(np.mean([r[field] for r in rows if r["k"] == k]))
    return out


def test_scaling_polynomial_in_k_and_square_case_blowup(fixed_n_rows, square_rows):
    exact = _mean_by_k(fixed_n_rows, "exact_time_ns")
    approx = _mean_by_k(fixed_n_rows, "approx_time_ns")
    logk = np.log(np.array(_FIXED_KS, dtype=float))
    logt = np.log(np.array([exact[k] for k in _FIXED_KS]))
    slope, intercept = np.polyfit(logk, logt, 1)
    pred = slope * logk + intercept
    ss_res = float(np.sum((logt - pred) ** 2))
    ss_tot = float(np.sum((logt - logt.mean()) ** 2))
    assert 1.0 - ss_res / ss_tot > 0.9
    for k in _FIXED_KS:
        assert exact[k] <= 100.0 * approx[k]

    square = _mean_by_k(square_rows, "exact_time_ns")
    assert square[28] >= 10.0 * square[15]


def test_approximate_baseline_error_band(fixed_n_rows, square_rows):
    for rows in (fixed_n_rows, square_rows):
        errs = [r["error_norm"] for r in rows if not r["truncated"]]
        assert errs
        mean = float(np.mean(errs))
        assert 1e-5 <= mean <= 1e-1


def _load_samson():
    base = pathlib.Path(_SAMSON_DIR)
    img = cli.load_image(base / "samson_image.json")
    truth = cli.load_image(base / "samson_truth.json").data
    assert truth.shape[0] == img.pixels
    return img, truth


@needs_samson
def test_samson_probability_maps_match_ground_truth():
    img, truth = _load_samson()
    K = truth.shape[1]
    scores = []
    for run in range(20):
        t0 = time.monotonic()
        model = classify.gmm_fit(img.data, K, seed=run, subsample_ratio=0.2)
        labels = classify.gmm_labels(model, img.data)
        part = classify.ovo_svm_partition(img.data, labels, K, seed=run)
        dens = unmix.probability_pipeline(img, part, alpha=1.0)
        err, _ = unmix.rmse(dens.values, truth, permute=True)
        assert time.monotonic() - t0 <= 30.0
        scores.append(err)
    assert float(np.mean(scores)) <= 0.13


@needs_samson
def test_samson_abundance_maps_match_ground_truth():
    img, truth = _load_samson()
    K = truth.shape[1]
    scores = []
    slowest_distance_stage = 0.0
    for run in range(20):
        model = classify.gmm_fit(img.data, K, seed=run, subsample_ratio=0.2)
        labels = classify.gmm_labels(model, img.data)
        part = classify.ovo_svm_partition(img.data, labels, K, seed=run)
        t0 = time.monotonic()
        ends = unmix.extract_endmembers(img, part)
        slowest_distance_stage = max(slowest_distance_stage, time.monotonic() - t0)
        values = unmix.abundances_from_endmembers(img, ends)
        err, _ = unmix.rmse(values, truth, permute=True)
        scores.append(err)
    assert slowest_distance_stage <= 1.0
    assert float(np.mean(scores)) <= 0.18


def test_density_rows_normalize_and_deep_points_rank_first():
    gen = helpers.seeded("acceptance-density")
    raw = gen.uniform(-50.0, 50.0, size=(10_000, 5))
    dens = density.softmax_density(density.DistanceVectors(raw, "signed-polyhedral"))
    assert float(np.max(np.abs(dens.values.sum(axis=1) - 1.0))) <= 1e-9

    # own-class signed distance rises toward the frontier, others pinned:
    # the own-class density must fall strictly all along the sweep
    t = np.linspace(-12.0, -0.05, 10_000)
    sweep = np.column_stack([t, np.full(t.size, -4.0), np.full(t.size, -7.0)])
    p_own = density.softmax_density(
        density.DistanceVectors(sweep, "signed-polyhedral")
    ).values[:, 0]
    assert np.all(np.diff(p_own) < 0.0)

    # characterization: the plain inverse-distance weighting mis-ranks the
    # extreme point of a 1D two-centroid toy below the centroid itself
    centers = np.array([0.0, 10.0])
    rows = np.abs(np.subtract.outer(np.array([-5.0, 0.0]), centers))
    inv = density.inverse_distance_density(
        density.DistanceVectors(rows, "centroid")
    ).values
    assert inv[0, 0] < inv[1, 0]
