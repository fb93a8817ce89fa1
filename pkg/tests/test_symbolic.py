import itertools

import pytest

from shiftmetrics import Alphabet, BINARY, CapacityError, CylinderIndex, DomainError, Word
from shiftmetrics import decode_word, encode_word, enumerate_words
from shiftmetrics.symbolic import capacity, check_capacity, word_codes

ABC = Alphabet(["a", "b", "c"])


def test_encode_examples():
    assert encode_word(BINARY.word("01")) == CylinderIndex(2, 1)
    assert encode_word(BINARY.word("")) == CylinderIndex(0, 0)
    assert encode_word(ABC.word("cb")).code == 7


def test_decode_examples():
    assert str(decode_word(CylinderIndex(2, 3), BINARY)) == "11"
    assert str(decode_word(CylinderIndex(3, 0), BINARY)) == "000"
    assert str(decode_word(CylinderIndex(2, 7), ABC)) == "cb"


@pytest.mark.parametrize("code,length", [(4, 2), (-1, 1), (1, 0)])
def test_decode_out_of_range(code, length):
    with pytest.raises(DomainError):
        decode_word(CylinderIndex(length, code), BINARY)


def test_round_trip_exhaustive():
    for k in (2, 3, 4):
        alph = Alphabet([str(i) for i in range(k)])
        for n in range(0, 13 if k == 2 else 7):
            for code in range(k**n):
                c = CylinderIndex(n, code)
                assert encode_word(decode_word(c, alph)) == c


def test_round_trip_length_12_sampled():
    alph = Alphabet("wxyz")
    for code in range(0, 4**12, 9973):
        c = CylinderIndex(12, code)
        assert encode_word(decode_word(c, alph)) == c


def test_enumeration_order_and_size():
    assert [str(w) for w in enumerate_words(BINARY, 2)] == ["00", "01", "10", "11"]
    assert [len(w) for w in enumerate_words(BINARY, 0)] == [0]
    words = list(enumerate_words(Alphabet("012"), 3))
    assert len(words) == 27 and str(words[0]) == "000" and str(words[-1]) == "222"
    tuples = [w.symbols for w in words]
    assert tuples == sorted(set(tuples))
    assert tuples == list(itertools.product(range(3), repeat=3))


def test_enumeration_capacity():
    with pytest.raises(CapacityError):
        next(enumerate_words(BINARY, 64))


def test_word_codes_matches_enumeration():
    digits = word_codes(3, 4)
    assert [tuple(r) for r in digits] == [w.symbols for w in enumerate_words(Alphabet("012"), 4)]


def test_alphabet_validation():
    with pytest.raises(DomainError):
        Alphabet(["x"])
    with pytest.raises(DomainError):
        Alphabet(["x", "x"])
    with pytest.raises(DomainError):
        Word(BINARY, (2,))


def test_word_operations():
    w = BINARY.word("0110")
    assert str(w[1:3]) == "11"
    assert str(w + BINARY.word("1")) == "01101"
    assert w.labels() == ("0", "1", "1", "0")
    multi = Alphabet(["-1", "1"])
    assert str(multi.word("-1 1 1")) == "-1 1 1"


def test_capacity_env(monkeypatch):
    monkeypatch.setenv("SHIFTMETRICS_CAPACITY", "100")
    assert capacity() == 100
    with pytest.raises(CapacityError):
        check_capacity(101)
    monkeypatch.setenv("SHIFTMETRICS_CAPACITY", "lots")
    with pytest.raises(DomainError):
        capacity()
