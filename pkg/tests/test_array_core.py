import numpy as np
import pytest
from pydantic import ValidationError

from camsim.errors import DomainError
from camsim.models.array_core import (
    CamArray,
    EvaluationMode,
    SearchQuery,
    build_ml_load,
    flip_prefix,
    format_bits,
    hamming_distance,
    nominal_word,
    parse_bits,
    program_array,
    read_array_file,
    write_array_file,
    write_word,
)
from camsim.models.device_models import BiasScheme, PolarizationState


@pytest.fixture
def word16(memcap, fefet, bias):
    pattern = (1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0, 1)
    return write_word(nominal_word(16, memcap, fefet), pattern, bias), pattern


def test_write_then_read_back(memcap, fefet, bias):
    word = write_word(nominal_word(4, memcap, fefet), [1, 0, 1, 1], bias)
    assert [cell.state for cell in word.cells] == [
        PolarizationState.P_POS,
        PolarizationState.P_NEG,
        PolarizationState.P_POS,
        PolarizationState.P_POS,
    ]


def test_rewriting_contents_is_noop(memcap, fefet, bias):
    word = write_word(nominal_word(4, memcap, fefet), [0, 1, 1, 0], bias)
    assert write_word(word, word.stored_bits, bias) == word


def test_sub_coercive_write_changes_nothing(memcap, fefet, bias):
    word = write_word(nominal_word(4, memcap, fefet), [1, 1, 0, 0], bias)
    weak = BiasScheme(v_write_1=3.0, v_write_0=-3.0)
    assert write_word(word, [0, 0, 1, 1], weak).stored_bits == (1, 1, 0, 0)


def test_write_preserves_device_parameters(memcap, fefet, bias):
    blank = nominal_word(3, memcap, fefet)
    word = write_word(blank, [1, 0, 1], bias)
    assert [cell.params for cell in word.cells] == [cell.params for cell in blank.cells]


def test_write_length_mismatch(memcap, fefet, bias):
    with pytest.raises(DomainError):
        write_word(nominal_word(4, memcap, fefet), [1, 0], bias)


def test_all_match_load(word16, bias, memcap):
    word, pattern = word16
    load = build_ml_load(word, SearchQuery(bits=pattern), bias, 0.5)
    assert load == pytest.approx(5e-15 + 16 * memcap.c_lcs, rel=0.05)


def test_half_mismatch_load(word16, bias):
    word, pattern = word16
    query = SearchQuery(bits=flip_prefix(pattern, 8))
    assert build_ml_load(word, query, bias, 0.5) == pytest.approx(93e-15, rel=0.01)
    assert build_ml_load(word, query, bias, 0.5, EvaluationMode.TABLE) == pytest.approx(
        93e-15, rel=1e-12
    )


def test_load_step_per_hd(word16, bias, memcap):
    word, pattern = word16
    loads = [
        build_ml_load(word, SearchQuery(bits=flip_prefix(pattern, hd)), bias, 0.5)
        for hd in range(17)
    ]
    steps = [b - a for a, b in zip(loads, loads[1:])]
    for step in steps:
        assert step == pytest.approx(memcap.c_hcs - memcap.c_lcs, rel=0.02)


def test_load_is_permutation_invariant(word16, bias):
    word, pattern = word16
    first = flip_prefix(pattern, 3)
    last = tuple(1 - b if i >= 13 else b for i, b in enumerate(pattern))
    table = EvaluationMode.TABLE
    assert build_ml_load(word, SearchQuery(bits=first), bias, 0.0, table) == pytest.approx(
        build_ml_load(word, SearchQuery(bits=last), bias, 0.0, table), rel=1e-12
    )


@pytest.mark.parametrize("v_ml", [0.0, 0.5, 1.0])
def test_physical_load_is_invariant_under_column_permutation(word16, memcap, fefet, bias, v_ml):
    word, pattern = word16
    query = flip_prefix(pattern, 5)
    order = np.random.default_rng(7).permutation(len(pattern))
    shuffled = write_word(nominal_word(16, memcap, fefet), [pattern[i] for i in order], bias)
    shuffled_query = SearchQuery(bits=tuple(query[i] for i in order))

    assert build_ml_load(shuffled, shuffled_query, bias, v_ml) == pytest.approx(
        build_ml_load(word, SearchQuery(bits=query), bias, v_ml), rel=1e-12
    )


def test_query_width_mismatch(word16, bias):
    word, _ = word16
    with pytest.raises(DomainError):
        build_ml_load(word, SearchQuery(bits=(1, 0)), bias, 0.5)


def test_hamming_distance_examples():
    assert hamming_distance(parse_bits("0110"), parse_bits("0110")) == 0
    assert hamming_distance(parse_bits("0000"), parse_bits("1111")) == 4
    with pytest.raises(DomainError):
        hamming_distance((0, 1), (0, 1, 1))


def test_flip_prefix():
    assert flip_prefix((0, 1, 0, 1), 2) == (1, 0, 0, 1)
    with pytest.raises(DomainError):
        flip_prefix((0, 1), 3)


def test_query_bits_validated():
    with pytest.raises(ValidationError):
        SearchQuery(bits=(0, 2))
    with pytest.raises(ValidationError):
        SearchQuery(bits=())


def test_array_requires_uniform_width(memcap, fefet):
    with pytest.raises(ValidationError):
        CamArray(words=(nominal_word(4, memcap, fefet), nominal_word(5, memcap, fefet)))


def test_array_file_round_trip(tmp_path, memcap, fefet, bias):
    rows = [parse_bits("1011"), parse_bits("0001")]
    path = write_array_file(tmp_path / "rows.txt", rows)
    assert path.read_text() == "1011\n0001\n"
    assert read_array_file(path) == rows

    array = program_array(read_array_file(path), bias, memcap=memcap, fefet=fefet)
    assert [format_bits(row) for row in array.stored_rows] == ["1011", "0001"]


def test_array_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1011\n10x1\n")
    with pytest.raises(DomainError, match=":2:"):
        read_array_file(bad)

    ragged = tmp_path / "ragged.txt"
    ragged.write_text("1011\n\n101\n")
    with pytest.raises(DomainError):
        read_array_file(ragged)
