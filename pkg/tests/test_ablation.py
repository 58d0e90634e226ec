import pytest

from goalskew.ablation import make_imbalanced_dataset, variance_ablation
from goalskew.errors import InvalidInputError


class TestDataset:
    def test_split_fractions(self):
        data, bounds = make_imbalanced_dataset(4000, seed=0, common_fraction=0.95)
        assert data.shape == (4000, 2)
        assert bounds.contains(data).all()
        in_common = (data[:, 0] >= 5.5) & (data[:, 1] <= 5.5)
        assert abs(in_common.mean() - 0.95) < 0.02

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            make_imbalanced_dataset(1)
        with pytest.raises(InvalidInputError):
            make_imbalanced_dataset(100, common_fraction=1.5)


class TestVarianceAblation:
    def setup_method(self):
        self.data, self.bounds = make_imbalanced_dataset(2000, seed=3)

    def test_weightless_methods_match_at_alpha_zero(self):
        res = variance_ablation(self.data, self.bounds, [0.0], draws=300, seed=4)
        is_var = res[(0.0, "IS")]
        sir_var = res[(0.0, "SIR")]
        mle_var = res[(0.0, "MLE")]
        assert is_var == pytest.approx(sir_var, rel=0.25)
        assert is_var == pytest.approx(mle_var, rel=0.25)

    def test_resampling_beats_importance_weighting(self):
        res = variance_ablation(self.data, self.bounds, [-1.0], draws=300, seed=5)
        assert res[(-1.0, "SIR")] <= res[(-1.0, "IS")]

    def test_strong_skew_blows_up_importance_weighting(self):
        res = variance_ablation(self.data, self.bounds, [-3.0], draws=300, seed=6)
        assert res[(-3.0, "IS")] / res[(-3.0, "SIR")] > 10

    def test_method_and_alpha_validation(self):
        with pytest.raises(InvalidInputError):
            variance_ablation(self.data, self.bounds, [-1.0], methods=("IS", "XYZ"))
        with pytest.raises(InvalidInputError):
            variance_ablation(self.data, self.bounds, [-20.0])
        with pytest.raises(InvalidInputError):
            variance_ablation(self.data[:10], self.bounds, [-1.0], batch_size=64)

    def test_seeded_reproducibility(self):
        a = variance_ablation(self.data, self.bounds, [-1.0], draws=50, seed=7)
        b = variance_ablation(self.data, self.bounds, [-1.0], draws=50, seed=7)
        assert a == b
