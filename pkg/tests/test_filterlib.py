import json
import math

import pytest

from ruelle_lab import filterlib
from ruelle_lab.errors import (
    DegenerateInput,
    InvalidParam,
    ParseError,
    PreconditionFailed,
    SchemaError,
    UnknownFilter,
)
from ruelle_lab.filterlib import FilterSpec
from ruelle_lab.lpoly import LaurentPoly

R2 = 1 / math.sqrt(2)


@pytest.mark.parametrize("name", filterlib.BUILTINS)
def test_builtins_are_qmf(name):
    spec = filterlib.builtin(name)
    assert spec.validation.all_ok
    assert spec.validation.qmf_residual <= 1e-15


def test_daubechies4_matches_closed_form():
    s3 = math.sqrt(3)
    exact = [(1 + s3), (3 + s3), (3 - s3), (1 - s3)]
    m0 = filterlib.builtin("daubechies4").m0
    for k, v in enumerate(exact):
        assert m0[k] == pytest.approx(v / (4 * math.sqrt(2)), abs=1e-15)


def test_stretched_haar_parameter():
    assert dict(filterlib.builtin("stretched_haar", 5).m0.items()) == pytest.approx({0: R2, 5: R2})
    assert filterlib.builtin("stretched_haar").name == "stretched_haar_3"
    for bad in (2, 1, 4.5, -3):
        with pytest.raises(InvalidParam):
            filterlib.builtin("stretched_haar", bad)


def test_unknown_builtin():
    with pytest.raises(UnknownFilter):
        filterlib.builtin("coiflet")
    assert filterlib.parse_builtin_ref("some/path.json") is None
    assert filterlib.parse_builtin_ref("stretched_haar:7").m0.degree_max == 7
    with pytest.raises(InvalidParam):
        filterlib.parse_builtin_ref("stretched_haar:x")


def test_non_qmf_three_tap():
    r = 1 / math.sqrt(3)
    spec = filterlib.validate(FilterSpec(2, LaurentPoly({0: r, 1: r, 2: r})))
    v = spec.validation
    assert not v.qmf_ok and not v.all_ok
    # autocorrelation {0: 1, +-1: 2/3, +-2: 1/3}: c_{+-2} = 1/3 spoils R1 = 1
    assert v.qmf_residual == pytest.approx(1 / 3)
    with pytest.raises(PreconditionFailed, match="R1 = 1"):
        filterlib.require_qmf(spec)


def test_wrong_normalization_is_named():
    # QMF but m0(1) = -sqrt(2)
    spec = FilterSpec(2, LaurentPoly({0: -R2, 1: -R2}))
    with pytest.raises(PreconditionFailed, match="sqrt"):
        filterlib.require_qmf(spec)


def test_degenerate_and_bad_scale():
    with pytest.raises(DegenerateInput):
        FilterSpec(2, LaurentPoly.zero())
    with pytest.raises(SchemaError):
        FilterSpec(1, LaurentPoly.constant(1.0))


def test_json_round_trip(tmp_path):
    spec = filterlib.builtin("daubechies4")
    path = tmp_path / "d4.json"
    filterlib.save(spec, path)
    back = filterlib.load(path)
    assert back.same_coefficients(spec)
    assert back.name == "daubechies4"


def test_load_reports_line_and_column(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"name": "x",\n "N": 2 "offset": 0}')
    with pytest.raises(ParseError, match="line 2"):
        filterlib.load(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(ParseError):
        filterlib.load(tmp_path / "none.json")


@pytest.mark.parametrize(
    "obj, match",
    [
        ([], "object"),
        ({"name": "x", "N": 2, "offset": 0}, "coeffs"),
        ({"name": "x", "N": 1, "offset": 0, "coeffs": [[1, 0]]}, ">= 2"),
        ({"name": "x", "N": 2.0, "offset": 0, "coeffs": [[1, 0]]}, "'N'"),
        ({"name": "x", "N": 2, "offset": "0", "coeffs": [[1, 0]]}, "offset"),
        ({"name": "x", "N": 2, "offset": 0, "coeffs": [[1]]}, r"coeffs\[0\]"),
        ({"name": "x", "N": 2, "offset": 0, "coeffs": [[0, 0]]}, "zero"),
        ({"name": "x", "N": 2, "offset": 0, "coeffs": []}, "non-empty"),
    ],
)
def test_schema_errors(obj, match):
    with pytest.raises(SchemaError, match=match):
        filterlib.from_json(obj)


def test_fixture_files(filter_dir):
    assert filterlib.load(filter_dir / "haar.json").same_coefficients(filterlib.builtin("haar"))
    assert filterlib.load(filter_dir / "stretched_haar_3.json").same_coefficients(
        filterlib.builtin("stretched_haar", 3)
    )
    assert filterlib.load(filter_dir / "daubechies4.json").same_coefficients(
        filterlib.builtin("daubechies4")
    )
    assert not filterlib.validate(filterlib.load(filter_dir / "not_qmf.json")).validation.qmf_ok
    with pytest.raises(ParseError):
        filterlib.load(filter_dir / "malformed.json")
    json.loads((filter_dir / "haar.json").read_text())
