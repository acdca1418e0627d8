import os

import pytest

from ivtrawl.runtime import parallel_map, worker_count


def _square(x):
    return x * x


def test_worker_count_explicit_wins(monkeypatch):
    monkeypatch.setenv("IVT_WORKERS", "7")
    assert worker_count(3) == 3


def test_worker_count_env_fallback(monkeypatch):
    monkeypatch.setenv("IVT_WORKERS", "5")
    assert worker_count() == 5
    monkeypatch.delenv("IVT_WORKERS")
    assert worker_count() == (os.cpu_count() or 1)


def test_worker_count_rejects_nonpositive():
    with pytest.raises(ValueError):
        worker_count(0)


def test_parallel_map_preserves_order_serial():
    assert parallel_map(_square, range(6), workers=1) == [0, 1, 4, 9, 16, 25]


def test_parallel_map_preserves_order_pooled():
    assert parallel_map(_square, range(10), workers=2) == [x * x for x in range(10)]


def test_parallel_map_empty():
    assert parallel_map(_square, [], workers=4) == []
