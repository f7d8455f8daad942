import numpy as np
import pytest

from core import FeatureMatrix, ValidationError
from upsample import gaussian_upsample_weights, upsample_states


def test_weights_are_row_stochastic():
    w = gaussian_upsample_weights([2, 0, 3, 1], sigma_g=1.5)
    assert w.matrix.shape == (6, 4)
    np.testing.assert_allclose(w.matrix.sum(axis=1), 1.0)
    assert np.all(w.matrix > 0)


def test_centers_are_segment_midpoints():
    w = gaussian_upsample_weights([2, 0, 4])
    np.testing.assert_array_equal(w.centers, [1.0, 2.0, 4.0])


def test_single_phoneme_copies_its_vector():
    h = FeatureMatrix([[1.0, -2.0, 3.0]])
    frames = upsample_states(h, gaussian_upsample_weights([5]))
    np.testing.assert_allclose(frames.data, np.tile([1.0, -2.0, 3.0], (5, 1)))


def test_narrow_kernel_approaches_hard_repetition():
    h = FeatureMatrix([[0.0], [10.0], [20.0]])
    frames = upsample_states(h, gaussian_upsample_weights([2, 3, 2], sigma_g=0.05))
    np.testing.assert_allclose(frames.data[:, 0], [0, 0, 10, 10, 10, 20, 20], atol=1e-6)


def test_weight_peaks_at_each_phoneme_center():
    w = gaussian_upsample_weights([3, 3, 3], sigma_g=1.0)
    assert w.matrix.argmax(axis=1).tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 2]


def test_argmax_follows_segments_away_from_the_boundary():
    w = gaussian_upsample_weights([3, 5], sigma_g=1.0)
    owner = w.matrix.argmax(axis=1)
    assert owner[:3].tolist() == [0, 0, 0]
    assert owner[4:].tolist() == [1, 1, 1, 1]
    # frame 3 sits exactly between the two centres
    assert w.matrix[3, 0] == pytest.approx(w.matrix[3, 1])


def test_upsampling_is_linear_and_stays_in_range():
    gen = np.random.default_rng(11)
    for _ in range(1000):
        n = int(gen.integers(1, 6))
        durations = gen.integers(0, 6, n)
        durations[gen.integers(n)] += 1
        w = gaussian_upsample_weights(durations, sigma_g=float(gen.uniform(0.2, 3.0)))
        a = gen.normal(size=(n, 3))
        b = gen.normal(size=(n, 3))
        x, y = gen.normal(size=2)
        combined = upsample_states(FeatureMatrix(x * a + y * b), w).data
        separate = x * upsample_states(FeatureMatrix(a), w).data + y * upsample_states(FeatureMatrix(b), w).data
        np.testing.assert_allclose(combined, separate, atol=1e-9)
        frames = upsample_states(FeatureMatrix(a), w).data
        assert frames.shape == (int(durations.sum()), 3)
        assert np.all(frames >= a.min(axis=0) - 1e-12)
        assert np.all(frames <= a.max(axis=0) + 1e-12)


@pytest.mark.parametrize(
    "durations, sigma, message",
    [([], 1.0, "non-empty"), ([1, -1], 1.0, "non-negative"), ([0, 0], 1.0, "all durations are zero"), ([2], 0.0, "sigma_g")],
)
def test_bad_inputs(durations, sigma, message):
    with pytest.raises(ValidationError, match=message):
        gaussian_upsample_weights(durations, sigma)


def test_state_rows_must_match_phonemes():
    with pytest.raises(ValidationError, match="state rows"):
        upsample_states(FeatureMatrix(np.zeros((2, 3))), gaussian_upsample_weights([1, 1, 1]))
