import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logdepth.codec import CompressedBlob, rle_compress, rle_decompress, runs
from logdepth.codec.rle import (
    decode_runs,
    decode_uvarint,
    encode_runs,
    encode_uvarint,
    length_code,
)
from logdepth.errors import ConsistencyError, DecodeError, UnsupportedDepthError
from logdepth.image import Image
from logdepth.imagegen import gen_random, gen_uniform


def blob_from_runs(first, lengths, width, height):
    return CompressedBlob("toy_rle", encode_runs(first, lengths), width, height, 1, 0)


def test_manual_run_scan():
    v, n = runs(np.array([0, 0, 0, 0, 0, 1, 1, 1, 0, 0]))
    assert list(zip(v.tolist(), n.tolist())) == [(0, 5), (1, 3), (0, 2)]


def test_white_600_single_run():
    v, n = runs(gen_uniform(600, 600).pixels)
    assert v.tolist() == [0] and n.tolist() == [360000]
    assert decode_runs(rle_compress(gen_uniform(600, 600)).payload) == (0, [360000])


def test_decode_known_runs():
    img = rle_decompress(blob_from_runs(0, [5, 3, 2], 10, 1))
    assert "".join(map(str, img.pixels[0])) == "0000011100"


def test_single_black_run():
    assert rle_decompress(blob_from_runs(1, [64], 8, 8)) == gen_uniform(8, 8, 1)


def test_runs_short_of_area():
    with pytest.raises(ConsistencyError):
        rle_decompress(blob_from_runs(0, [5, 3, 1], 10, 1))


def test_depth8_rejected():
    with pytest.raises(UnsupportedDepthError):
        rle_compress(Image(np.zeros((2, 2), np.uint8), depth=8))


@given(st.integers(0, 2**63))
def test_uvarint_round_trip(n):
    assert decode_uvarint(encode_uvarint(n)) == (n, len(encode_uvarint(n)))


def test_uvarint_known_bytes():
    assert encode_uvarint(0) == b"\x00"
    assert encode_uvarint(300) == b"\xac\x02"


def test_uvarint_truncated():
    with pytest.raises(DecodeError):
        decode_uvarint(b"\x80\x80")


@pytest.mark.parametrize("k", [1, 2, 15, 16, 17, 100, 2000, 360000])
def test_length_code_cost(k):
    code = length_code(k)
    if k <= 15:
        assert len(code) == k
    else:
        assert len(code) == 15 + 2 * int(math.floor(math.log2(k - 15))) + 1


@given(st.lists(st.integers(1, 5000), min_size=1, max_size=60), st.integers(0, 1))
def test_encode_decode_runs(lengths, first):
    assert decode_runs(encode_runs(first, lengths)) == (first, lengths)


@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32), st.floats(0, 1))
def test_round_trip(w, h, seed, p):
    img = gen_random(w, h, seed, p)
    assert rle_decompress(rle_compress(img)) == img


def test_truncated_payload():
    payload = rle_compress(gen_random(30, 30, 1, 0.5)).payload
    blob = CompressedBlob("toy_rle", payload[: len(payload) // 2], 30, 30, 1, 0)
    with pytest.raises(DecodeError):
        rle_decompress(blob)


def test_nonzero_padding_rejected():
    payload = bytearray(encode_runs(0, [3]))
    payload[-1] |= 1
    with pytest.raises(DecodeError):
        decode_runs(bytes(payload))


def test_stripe_drop_close_to_2000():
    # a white 2000-bit stripe over random bits saves about 2000 - log2(2000) bits
    base = gen_random(600, 600, 8, 0.5)
    flat = base.pixels.ravel().copy()
    flat[:2000] = 0
    a = rle_compress(base).bit_length
    b = rle_compress(Image(flat.reshape(600, 600))).bit_length
    assert 1900 <= a - b <= 2000
