from concurrent.futures import ThreadPoolExecutor

from pytest import raises

from horotomo.utils import MemoCache, format_float, parse_spec


def test_parse_spec_reads_name_and_arguments():
    assert parse_spec(" zonal-bump:0.5, 2.0 ") == ("zonal-bump", [0.5, 2.0])
    assert parse_spec("zero") == ("zero", [])


def test_parse_spec_rejects_non_numbers():
    with raises(ValueError):
        parse_spec("zonal-exp:fast")


def test_format_float_keeps_seventeen_digits():
    assert format_float(1.0 / 3.0) == "0.33333333333333331"
    assert float(format_float(2.0 / 7.0)) == 2.0 / 7.0
    assert format_float(None) == ""


def test_memo_cache_keeps_the_first_value():
    cache: MemoCache[str, int] = MemoCache("test")
    assert cache.get_or_insert("a", lambda: 1) == 1
    assert cache.get_or_insert("a", lambda: 2) == 1
    assert "a" in cache
    assert len(cache) == 1
    assert cache.hits == 1
    assert cache.misses == 1


def test_memo_cache_readers_agree_under_threads():
    cache: MemoCache[int, object] = MemoCache("threads")
    with ThreadPoolExecutor(max_workers=8) as executor:
        values = list(executor.map(lambda _: cache.get_or_insert(0, object), range(64)))
    assert all(value is values[0] for value in values)
