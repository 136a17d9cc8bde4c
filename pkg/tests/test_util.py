import os

import pytest

from oscars.util import (
    atomic_write_bytes,
    atomic_write_text,
    checksum64,
    checksum64_hex,
    file_checksum_hex,
    parallel_map,
    stable_hash64,
    thread_count,
)


def test_checksum64_is_8_bytes_and_deterministic():
    a = checksum64(b"hello")
    assert len(a) == 8
    assert a == checksum64(b"hello")
    assert a != checksum64(b"hello!")
    assert checksum64_hex(b"hello") == a.hex()


def test_file_checksum_matches_content_checksum(tmp_path):
    p = tmp_path / "blob.bin"
    p.write_bytes(b"\x00\x01\x02")
    assert file_checksum_hex(p) == checksum64_hex(b"\x00\x01\x02")


def test_stable_hash64_is_stable_and_distinct():
    assert stable_hash64("anchor-1") == stable_hash64("anchor-1")
    assert stable_hash64("anchor-1") != stable_hash64("anchor-2")
    assert 0 <= stable_hash64("x") < 2**64


def test_atomic_write_replaces_and_leaves_no_temp_files(tmp_path):
    target = tmp_path / "out.txt"
    atomic_write_text(target, "first")
    atomic_write_text(target, "second")
    assert target.read_text() == "second"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


def test_atomic_write_creates_parent_dirs(tmp_path):
    target = tmp_path / "a" / "b" / "out.bin"
    atomic_write_bytes(target, b"x")
    assert target.read_bytes() == b"x"


def test_atomic_write_output_is_group_readable(tmp_path):
    target = tmp_path / "out.txt"
    atomic_write_text(target, "data")
    umask = os.umask(0)
    os.umask(umask)
    assert (target.stat().st_mode & 0o777) == (0o666 & ~umask)


def test_thread_count_parses_environment(monkeypatch):
    monkeypatch.delenv("OSCARS_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("OSCARS_THREADS", "8")
    assert thread_count() == 8
    monkeypatch.setenv("OSCARS_THREADS", "junk")
    assert thread_count() == 1
    monkeypatch.setenv("OSCARS_THREADS", "0")
    assert thread_count() == 1


@pytest.mark.parametrize("threads", ["1", "4"])
def test_parallel_map_preserves_input_order(monkeypatch, threads):
    monkeypatch.setenv("OSCARS_THREADS", threads)
    items = list(range(50))
    assert parallel_map(lambda x: x * x, items) == [x * x for x in items]
