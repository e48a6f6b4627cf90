import numpy as np

from squeezeband.rng import BLOCK_STEPS, normal_blocks, trajectory_generator


def _collect(seed, idx, n, width):
    out = np.empty((len(idx), n, width))
    for start, block in normal_blocks(seed, idx, n, width):
        out[:, start : start + block.shape[1]] = block
    return out


def test_same_seed_same_stream():
    a = trajectory_generator(5, 3).standard_normal(10)
    b = trajectory_generator(5, 3).standard_normal(10)
    assert np.array_equal(a, b)


def test_streams_differ():
    a = trajectory_generator(5, 3).standard_normal(10)
    assert not np.array_equal(a, trajectory_generator(5, 4).standard_normal(10))
    assert not np.array_equal(a, trajectory_generator(6, 3).standard_normal(10))


def test_batch_independent_of_grouping():
    n = BLOCK_STEPS + 17
    together = _collect(1, [0, 1, 2], n, 2)
    for i in range(3):
        assert np.array_equal(together[i], _collect(1, [i], n, 2)[0])


def test_prefix_stable_across_lengths():
    short = _collect(9, [4], BLOCK_STEPS - 3, 2)
    long = _collect(9, [4], 3 * BLOCK_STEPS, 2)
    assert np.array_equal(short[0], long[0, : BLOCK_STEPS - 3])


def test_blocks_cover_run():
    starts = [s for s, _ in normal_blocks(0, [0], 2 * BLOCK_STEPS + 1, 1)]
    assert starts == [0, BLOCK_STEPS, 2 * BLOCK_STEPS]
