import numpy as np

from wq.rng import Stream, as_stream, blocks, normal_blocks, parallel_map


def test_streams_are_keyed():
    a = Stream(1).child(3).generator().random(4)
    b = Stream(1, (3,)).generator().random(4)
    c = Stream(1).child(4).generator().random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_blocks_cover_range():
    assert blocks(10, 4) == [(0, 4), (1, 4), (2, 2)]
    assert blocks(0) == []


def test_normals_do_not_depend_on_worker_count():
    s = Stream(11)
    assert np.array_equal(normal_blocks(s, 9000, 3, threads=1), normal_blocks(s, 9000, 3, threads=3))


def test_parallel_map_keeps_order():
    assert parallel_map(lambda x: x * x, list(range(20)), threads=4) == [x * x for x in range(20)]


def test_thread_env_var(monkeypatch):
    from wq.rng import default_threads
    monkeypatch.setenv("WQ_THREADS", "3")
    assert default_threads() == 3


def test_int_and_stream_agree():
    assert as_stream(5) == Stream(5)
