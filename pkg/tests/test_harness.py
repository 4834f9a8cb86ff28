import json
import math

import numpy as np
import pytest

from geodp.cli import main
from geodp.errors import ConfigError, EmptyInputError, FormatError
from geodp.geometry import Point
from geodp.harness.audit import PolarGrid, dp_ratio_audit, worst_case_pair
from geodp.harness.bench import BenchmarkConfig, ResultRow, replicate_rng, run_benchmark, utility_distance
from geodp.harness.io import (
    RESULT_COLUMNS,
    load_landmarks,
    read_results,
    summarize,
    write_landmarks,
    write_results,
    write_summary,
)
from geodp.harness.shapes import (
    ShapeOptions,
    gen_synthetic_corpus,
    output_distances,
    run_shape_pipeline,
    template_curve,
)
from geodp.kendall import KendallShapeSpace, shape_distance, to_preshape
from geodp.mcmc import ChainConfig
from geodp.frechet import frechet_mean_array
from geodp.spd import SPD
from geodp.mechanisms import sample_euclidean_laplace
from geodp.privacy import euclidean_sensitivity
from geodp.sphere import Sphere, sample_ball_uniform_polar
from geodp.sphere import ambient_radius as sphere_ambient_radius

from conftest import random_preshape

NORTH = np.array([0.0, 0.0, 1.0])
QUICK_SPHERE = ChainConfig(burn_in=100, thin=1, step=1.0)
QUICK_SHAPE = ChainConfig(burn_in=300, thin=1, step=1.0)


class TestUtilityDistance:
    def test_identical(self):
        p = Point(Sphere(), NORTH)
        assert utility_distance(p, p) == 0

    def test_sphere_antipodes(self):
        assert utility_distance(Point(Sphere(), NORTH), Point(Sphere(), -NORTH)) == pytest.approx(2.0)

    def test_spd_vech(self):
        m = SPD(2)
        assert utility_distance(Point(m, np.eye(2)), Point(m, np.diag([1.7, 1.0]))) == pytest.approx(0.7)

    def test_kendall_aligns_first(self, rng):
        m = KendallShapeSpace(6)
        x = random_preshape(rng)
        assert utility_distance(Point(m, x), Point(m, np.exp(1.2j) * x)) < 1e-14

    def test_mixed_manifolds(self):
        with pytest.raises(ConfigError):
            utility_distance(Point(Sphere(), NORTH), Point(SPD(2), np.eye(2)))


class TestBenchmarkConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"replicates": 0},
            {"sizes": ()},
            {"sizes": (0,)},
            {"epsilon": 0.0},
            {"radius": 1.0},
            {"mechanisms": ("projected",), "manifold": "spd"},
            {"manifold": "torus"},
            {"workers": 0},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            BenchmarkConfig(**kw)

    def test_defaults(self):
        cfg = BenchmarkConfig(manifold="spd")
        assert cfg.ball_radius == 1.5
        assert cfg.mechanism_list == ("kng", "laplace", "euclidean")


class TestRunBenchmark:
    def test_single_row(self):
        rows = run_benchmark(
            BenchmarkConfig(sizes=(10,), replicates=1, mechanisms=("kng",), chain=QUICK_SPHERE)
        )
        assert len(rows) == 1
        r = rows[0]
        assert r.error == "" and r.utility_euclidean >= 0 and r.utility_intrinsic >= 0
        assert r.wall_ms == 0.0

    def test_row_order_and_ranges(self):
        cfg = BenchmarkConfig(sizes=(20, 10), replicates=3, chain=QUICK_SPHERE)
        rows = run_benchmark(cfg)
        keys = [(r.n, r.replicate, cfg.mechanism_list.index(r.mechanism)) for r in rows]
        assert keys == sorted(keys) and len(rows) == 2 * 3 * 4
        for r in rows:
            assert r.utility_euclidean >= 0
            if r.mechanism == "euclidean":
                assert math.isnan(r.utility_intrinsic)
            else:
                assert r.utility_intrinsic <= 2 * cfg.ball_radius + 1e-12

    def test_projected_shares_the_euclidean_draw(self):
        cfg = BenchmarkConfig(sizes=(10,), replicates=4, mechanisms=("euclidean", "projected"), seed=3)
        rows = run_benchmark(cfg)
        by = {(r.mechanism, r.replicate): r for r in rows}
        s = Sphere()
        sigma = 2 * euclidean_sensitivity(sphere_ambient_radius(cfg.ball_radius), 10) / cfg.epsilon
        for rep in range(4):
            data = sample_ball_uniform_polar(cfg.ball_radius, 10, replicate_rng(3, 10, rep, 0))
            mean = s.normalize(frechet_mean_array(s, data).mean)
            y = sample_euclidean_laplace(mean, sigma, 3, replicate_rng(3, 10, rep, 3))
            assert by[("euclidean", rep)].utility_euclidean == pytest.approx(np.linalg.norm(y - mean), rel=1e-12)
            x = y / np.linalg.norm(y)
            assert by[("projected", rep)].utility_euclidean == pytest.approx(np.linalg.norm(x - mean), rel=1e-12)

    def test_mechanism_subset_does_not_change_values(self):
        full = run_benchmark(BenchmarkConfig(sizes=(10,), replicates=3, chain=QUICK_SPHERE))
        only = run_benchmark(BenchmarkConfig(sizes=(10,), replicates=3, mechanisms=("laplace",), chain=QUICK_SPHERE))
        want = [r for r in full if r.mechanism == "laplace"]
        assert want == only

    def test_spd_rows(self):
        rows = run_benchmark(
            BenchmarkConfig(manifold="spd", sizes=(20,), replicates=2, chain=ChainConfig(200, 1, 1.0))
        )
        assert len(rows) == 6
        assert all(r.error == "" for r in rows)

    def test_record_time(self):
        rows = run_benchmark(
            BenchmarkConfig(sizes=(10,), replicates=2, mechanisms=("laplace",), chain=QUICK_SPHERE, record_time=True)
        )
        assert all(r.wall_ms > 0 for r in rows)

    def test_csv_bytes_reproducible(self, tmp_path):
        cfg = BenchmarkConfig(sizes=(10, 15), replicates=3, chain=QUICK_SPHERE, seed=9)
        write_results(run_benchmark(cfg), tmp_path / "a.csv")
        write_results(run_benchmark(cfg), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_seed_changes_output(self):
        a = run_benchmark(BenchmarkConfig(sizes=(10,), replicates=2, chain=QUICK_SPHERE, seed=1))
        b = run_benchmark(BenchmarkConfig(sizes=(10,), replicates=2, chain=QUICK_SPHERE, seed=2))
        assert [r.utility_euclidean for r in a] != [r.utility_euclidean for r in b]


def _row(mech, n, rep, u, q=0.1, error=""):
    return ResultRow("sphere", mech, n, rep, u, q, 0, 0.0, error)


class TestIO:
    def test_results_roundtrip_full_precision(self, tmp_path):
        rows = [_row("kng", 10, 0, 1 / 3, math.pi / 7), _row("euclidean", 10, 0, 0.1 + 0.2, math.nan)]
        write_results(rows, tmp_path / "r.csv")
        back = read_results(tmp_path / "r.csv")
        assert back[0]["utility_euclidean"] == 1 / 3
        assert back[0]["utility_intrinsic"] == math.pi / 7
        assert back[1]["utility_euclidean"] == 0.1 + 0.2
        assert math.isnan(back[1]["utility_intrinsic"])
        header = (tmp_path / "r.csv").read_text().splitlines()[0]
        assert header == ",".join(RESULT_COLUMNS)

    def test_read_results_bad_header(self, tmp_path):
        (tmp_path / "r.csv").write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            read_results(tmp_path / "r.csv")

    def test_summary_counts_and_statistics(self, tmp_path):
        rows = [_row(m, n, i, 0.1 * (i + 1) / n) for m in ("kng", "laplace") for n in (10, 20, 40) for i in range(5)]
        rows.append(_row("kng", 10, 5, math.nan, math.nan, error="kng:DomainError"))
        summary = write_summary(rows, tmp_path / "s.csv")
        assert len(summary) == 2 * 3
        first = summary[0]
        u = np.array([0.1 * (i + 1) / 10 for i in range(5)])
        assert first["mechanism"] == "kng" and first["n"] == 10 and first["count"] == 5
        assert first["mean_utility"] == pytest.approx(u.mean())
        assert first["two_se"] == pytest.approx(2 * u.std(ddof=1) / math.sqrt(5))

    def test_summary_recomputes_from_file(self, tmp_path):
        rows = run_benchmark(BenchmarkConfig(sizes=(10,), replicates=4, chain=QUICK_SPHERE))
        write_results(rows, tmp_path / "r.csv")
        # Full-precision text means the recomputed summary is exactly equal.
        again = summarize(read_results(tmp_path / "r.csv"))
        direct = summarize(rows)
        assert len(again) == len(direct)
        for a, b in zip(again, direct):
            for key, val in b.items():
                if isinstance(val, float) and math.isnan(val):
                    assert math.isnan(a[key])
                else:
                    assert a[key] == val

    def test_landmark_roundtrip(self, tmp_path, rng):
        z = rng.standard_normal((4, 9)) + 1j * rng.standard_normal((4, 9))
        write_landmarks(z, tmp_path / "l.csv")
        assert np.array_equal(load_landmarks(tmp_path / "l.csv"), z)

    def test_landmarks_skip_comments_and_blanks(self, tmp_path):
        (tmp_path / "l.csv").write_text("# header\n\n1,2,3,4,5,6\n  \n7,8,9,10,11,12\n")
        z = load_landmarks(tmp_path / "l.csv")
        assert z.shape == (2, 3) and z[1, 2] == 11 + 12j

    def test_empty_file(self, tmp_path):
        (tmp_path / "l.csv").write_text("")
        with pytest.raises(EmptyInputError):
            load_landmarks(tmp_path / "l.csv")
        (tmp_path / "h.csv").write_text("# only a header\n")
        with pytest.raises(EmptyInputError):
            load_landmarks(tmp_path / "h.csv")

    @pytest.mark.parametrize(
        "body, line",
        [
            ("1,2,3,4,5,6\n1,2,x,4,5,6\n", 2),
            ("# h\n1,2,3,4,5\n", 2),
            ("1,2,3,4,5,6\n1,2,3,4\n", 2),
            ("1,2,3,4,5,6\n\n1,2,3,inf,5,6\n", 3),
        ],
    )
    def test_malformed_rows_name_the_line(self, tmp_path, body, line):
        (tmp_path / "l.csv").write_text(body)
        with pytest.raises(FormatError) as info:
            load_landmarks(tmp_path / "l.csv")
        assert info.value.line == line
        assert f"line {line}" in str(info.value)


class TestCorpus:
    def test_noise_free_shapes_match_template(self):
        z = gen_synthetic_corpus("ellipse", 16, 10, noise=0.0, seed=1)
        pre = to_preshape(z)
        tmpl = to_preshape(template_curve("ellipse", 16))
        assert np.max(shape_distance(pre, tmpl)) < 1e-12
        mean = frechet_mean_array(KendallShapeSpace(16), pre).mean
        assert shape_distance(mean, tmpl) < 1e-9

    def test_landmark_count_and_determinism(self):
        a = gen_synthetic_corpus("blob", 12, 7, noise=0.1, seed=3)
        b = gen_synthetic_corpus("blob", 12, 7, noise=0.1, seed=3)
        assert a.shape == (7, 12) and np.array_equal(a, b)

    def test_mean_converges_to_template(self):
        space = KendallShapeSpace(16)
        tmpl = to_preshape(template_curve("ellipse", 16))

        def err(count, seed):
            pre = to_preshape(gen_synthetic_corpus("ellipse", 16, count, noise=0.1, seed=seed))
            return shape_distance(frechet_mean_array(space, pre).mean, tmpl)

        small = np.mean([err(10, s) for s in range(20)])
        large = np.mean([err(200, s) for s in range(20)])
        assert large < small

    @pytest.mark.parametrize("kw", [{"k": 7}, {"count": 0}, {"noise": -1.0}, {"template": "star"}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            gen_synthetic_corpus(**kw)


class TestShapePipeline:
    def test_repeated_shape_large_epsilon(self, rng):
        x = template_curve("blob", 12)
        out = run_shape_pipeline(np.stack([x] * 5), 1e8, ShapeOptions(chain=QUICK_SHAPE))
        for d in output_distances(out).values():
            assert d < 1e-2
        assert shape_distance(out.mean, to_preshape(x)) < 1e-12

    def test_outputs_and_metadata(self):
        z = gen_synthetic_corpus("ellipse", 16, 20, noise=0.05, seed=2)
        out = run_shape_pipeline(z, 1.0, ShapeOptions(seed=4, chain=QUICK_SHAPE))
        assert KendallShapeSpace(16).belongs(out.kng)
        assert out.radius_data_dependent is True
        assert out.radius > 0 and out.sigma > 0
        assert set(out.outputs()) == {"kng", "pointwise_aligned", "pointwise_unaligned"}

    def test_smoothing_keeps_landmark_count(self):
        z = gen_synthetic_corpus("ellipse", 16, 20, noise=0.05, seed=2)
        out = run_shape_pipeline(z, 1.0, ShapeOptions(chain=QUICK_SHAPE, smooth_bandwidth=0.05))
        assert all(c.shape == (16,) for c in out.outputs().values())
        assert KendallShapeSpace(16).belongs(out.kng)

    def test_needs_two_shapes(self):
        with pytest.raises(Exception):
            run_shape_pipeline(template_curve("ellipse", 10)[None], 1.0)

    def test_deterministic(self):
        z = gen_synthetic_corpus("ellipse", 16, 20, noise=0.05, seed=2)
        a = run_shape_pipeline(z, 1.0, ShapeOptions(seed=4, chain=QUICK_SHAPE))
        b = run_shape_pipeline(z, 1.0, ShapeOptions(seed=4, chain=QUICK_SHAPE))
        for name in a.outputs():
            assert np.array_equal(a.outputs()[name], b.outputs()[name])


class TestAudit:
    def test_grid_resolution(self):
        with pytest.raises(ConfigError):
            PolarGrid(0.3, 49, 200)

    def test_grid_areas_sum_to_cap(self):
        _, area = PolarGrid(0.3, 60, 60).cells()
        assert area.sum() == pytest.approx(2 * math.pi * (1 - math.cos(0.3)), rel=1e-12)

    def test_identical_datasets(self, rng):
        D = sample_ball_uniform_polar(math.pi / 8, 20, rng)
        rep = dp_ratio_audit(PolarGrid(math.pi / 8, 60, 60), D, D, 1.0)
        assert rep.max_log_ratio == 0 and rep.passed

    def test_random_pair_passes(self, rng):
        D = sample_ball_uniform_polar(math.pi / 8, 20, rng)
        Dp = D.copy()
        Dp[-1] = sample_ball_uniform_polar(math.pi / 8, 1, rng)[0]
        for mech in ("kng", "laplace"):
            assert dp_ratio_audit(PolarGrid(math.pi / 8, 100, 100), D, Dp, 1.0, mech).passed

    def test_miscalibration_detected(self):
        D, Dp = worst_case_pair(20, math.pi / 8)
        rep = dp_ratio_audit(PolarGrid(math.pi / 8, 100, 100), D, Dp, 0.1, "kng", calibration_epsilon=1.0)
        assert not rep.passed

    def test_unknown_mechanism(self, rng):
        D = sample_ball_uniform_polar(math.pi / 8, 5, rng)
        with pytest.raises(ConfigError):
            dp_ratio_audit(PolarGrid(math.pi / 8, 50, 50), D, D, 1.0, "gauss")


class TestCLI:
    def test_bench_writes_results_summary_and_plot(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code = main(["bench", "sphere", "--sizes", "10", "--replicates", "2", "--burn-in", "50",
                     "--out", str(out), "--emit-plot", str(tmp_path / "p.gp")])
        assert code == 0
        assert len(read_results(out)) == 8
        assert (tmp_path / "r.summary.csv").exists()
        assert "plot" in (tmp_path / "p.gp").read_text()

    def test_bench_bytes_reproducible(self, tmp_path):
        args = ["bench", "spd", "--sizes", "20", "--replicates", "2", "--burn-in", "100", "--seed", "5"]
        assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
        assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_config_error_exit_code(self, tmp_path, capsys):
        assert main(["bench", "sphere", "--radius", "1.0", "--out", str(tmp_path / "r.csv")]) == 2
        assert main(["bench", "sphere", "--step", "3", "--out", str(tmp_path / "r.csv")]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_data_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2,3,4,5,6\n1,2\n")
        assert main(["shape", "run", str(bad)]) == 3
        assert "line 2" in capsys.readouterr().err
        (tmp_path / "empty.csv").write_text("")
        assert main(["shape", "run", str(tmp_path / "empty.csv")]) == 3
        assert main(["shape", "run", str(tmp_path / "missing.csv")]) == 3

    def test_gen_and_shape_run(self, tmp_path):
        corpus = tmp_path / "c.csv"
        assert main(["gen", "corpus", "--landmarks", "12", "--count", "10", "--seed", "1", "--out", str(corpus)]) == 0
        assert load_landmarks(corpus).shape == (10, 12)
        out = tmp_path / "s.csv"
        assert main(["shape", "run", str(corpus), "--burn-in", "200", "--thin", "1",
                     "--smooth-bandwidth", "0.05", "--out", str(out)]) == 0
        assert load_landmarks(out).shape == (4, 12)
        meta = json.loads((tmp_path / "s.meta.json").read_text())
        assert meta["radius_data_dependent"] is True
        assert meta["rows"] == ["mean", "kng", "pointwise_aligned", "pointwise_unaligned"]

    def test_audit_exit_codes(self, tmp_path):
        base = ["audit", "dp", "--grid", "60", "--pairs", "2"]
        assert main(base + ["--out", str(tmp_path / "a.json")]) == 0
        assert json.loads((tmp_path / "a.json").read_text())["kng"]["passed"] is True
        assert main(base + ["--epsilon", "0.1", "--calibration-epsilon", "1", "--worst-case"]) == 4
        assert main(base[:2] + ["--grid", "10"]) == 2
