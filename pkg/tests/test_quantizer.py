import numpy as np
import pytest

from dpmhp.metrics import WtaMetric, nearest_indices
from dpmhp.optim import TrainConfig
from dpmhp.quantizer import (
    fit_hypotheses,
    lloyd_refine,
    load_hypotheses_csv,
    save_hypotheses_csv,
)
from dpmhp.evaluation import voronoi_shares
from dpmhp.wta import batch_wta

L2 = WtaMetric.l2()


def mean_wta_loss(hyps, samples, metric):
    return float(batch_wta(hyps, samples, metric).losses.mean())


class TestFitHypotheses:
    def test_uniform_two_levels(self):
        # closed-form fixed point of the two-level uniform quantizer
        samples = np.random.default_rng(0).random(20000)
        hyps = fit_hypotheses(samples, 2, L2)
        np.testing.assert_allclose(np.sort(hyps.ravel()), [0.25, 0.75], atol=0.02)

    def test_single_hypothesis_is_mean(self):
        rng = np.random.default_rng(1)
        samples = rng.standard_normal((5000, 2)) + [1.0, -2.0]
        hyps = fit_hypotheses(samples, 1, L2)
        np.testing.assert_allclose(hyps[0], samples.mean(axis=0), atol=1e-2)

    def test_degenerate_identical_samples(self):
        samples = np.full((500, 2), 7.5)
        cfg = TrainConfig(learning_rate=1e-2, epochs=30, epsilon=0.1, seed=2)
        hyps = fit_hypotheses(samples, 3, WtaMetric.ldp(0.01), cfg)
        np.testing.assert_allclose(hyps, 7.5, atol=1e-3)

    def test_more_hypotheses_than_samples_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            fit_hypotheses(np.zeros((3, 1)), 4, L2)

    def test_exact_cover_reaches_zero_loss(self):
        rng = np.random.default_rng(3)
        samples = rng.standard_normal((8, 2))
        cfg = TrainConfig(learning_rate=1e-2, epochs=20, epsilon=0.0, seed=3)
        hyps = fit_hypotheses(samples, 8, L2, cfg)
        assert mean_wta_loss(hyps, samples, L2) < 1e-6

    def test_separated_blobs_capture_one_each(self):
        centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [4.0, 4.0]])
        for seed in range(3):
            rng = np.random.default_rng(seed)
            samples = np.vstack([c + 0.25 * rng.standard_normal((1000, 2)) for c in centers])
            cfg = TrainConfig(learning_rate=2e-2, epochs=100, batch_size=256, epsilon=0.05,
                              lr_decay=0.5, lr_decay_every=25, seed=seed)
            hyps = fit_hypotheses(samples, 4, L2, cfg)
            owners = sorted(nearest_indices(hyps, centers).tolist())
            assert owners == [0, 1, 2, 3]

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(4)
        samples = rng.standard_normal((2000, 1))
        cfg = TrainConfig(learning_rate=1e-2, epochs=5, seed=11)
        a = fit_hypotheses(samples, 10, L2, cfg)
        b = fit_hypotheses(samples, 10, L2, cfg)
        np.testing.assert_array_equal(a, b)


class TestLloydRefine:
    def test_l2_loss_non_increasing(self):
        rng = np.random.default_rng(5)
        samples = rng.standard_normal((4000, 1))
        hyps = samples[rng.choice(4000, 40, replace=False)]
        losses = [mean_wta_loss(hyps, samples, L2)]
        for _ in range(15):
            hyps = lloyd_refine(samples, hyps, L2, 1)
            losses.append(mean_wta_loss(hyps, samples, L2))
        for prev, cur in zip(losses, losses[1:]):
            assert cur <= prev + 1e-12

    def test_two_point_symmetric_case(self):
        samples = np.array([[-1.0], [1.0]])
        hyps = lloyd_refine(samples, np.array([[-0.9], [0.9]]), L2, 5)
        np.testing.assert_allclose(np.sort(hyps.ravel()), [-1.0, 1.0], atol=1e-12)

    def test_ldp_improves_share_uniformity(self):
        # sampling oracle: shares over 1e5 draws before and after refinement
        rng = np.random.default_rng(6)
        samples = rng.standard_normal((100000, 1))
        init = samples[rng.choice(100000, 100, replace=False)]
        before = voronoi_shares(init, samples).chi_square_vs_uniform
        refined = lloyd_refine(samples, init, WtaMetric.ldp(0.005), 40)
        after = voronoi_shares(refined, samples).chi_square_vs_uniform
        assert after < before

    def test_keeps_hypothesis_count(self):
        rng = np.random.default_rng(7)
        samples = rng.standard_normal((500, 2))
        hyps = rng.standard_normal((12, 2))
        for metric in (L2, WtaMetric.ldp(0.05)):
            refined = lloyd_refine(samples, hyps, metric, 3)
            assert refined.shape == (12, 2)

    def test_empty_cell_reseeded(self):
        # one hypothesis far outside the data never wins; the repair must
        # bring it back among the samples
        samples = np.concatenate([np.random.default_rng(8).standard_normal(200),
                                  np.random.default_rng(9).standard_normal(200) + 8.0])[:, None]
        hyps = np.array([[0.0], [8.0], [100.0]])
        refined = lloyd_refine(samples, hyps, L2, 3)
        assert np.all(refined <= samples.max() + 1e-9)
        assert np.all(refined >= samples.min() - 1e-9)


class TestHypothesisCsv:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(10)
        hyps = rng.standard_normal((7, 3))
        path = tmp_path / "hyps.csv"
        save_hypotheses_csv(path, hyps)
        np.testing.assert_array_equal(load_hypotheses_csv(path), hyps)

    def test_header(self, tmp_path):
        path = tmp_path / "hyps.csv"
        save_hypotheses_csv(path, np.zeros((2, 2)))
        assert path.read_text().splitlines()[0] == "h0,h1"

    def test_rejects_foreign_csv(self, tmp_path):
        path = tmp_path / "foreign.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            load_hypotheses_csv(path)
