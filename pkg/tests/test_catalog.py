import io

import pytest

from gvdlink.channel import load_bundled_catalog, load_line_catalog
from gvdlink.channel.catalog import HEADER, SpectralLine
from gvdlink.errors import CatalogParseError, EmptyCatalogError

ROW = "183.310087 2.273e-01 2.9060 14.5939 0.77 139.2850"


def test_bundled_catalog_holds_both_species():
    lines = load_bundled_catalog()
    h2o = [l for l in lines if l.species == "h2o"]
    o2 = [l for l in lines if l.species == "o2"]
    assert len(h2o) == 35 and len(o2) == 44
    freqs = {round(l.center_frequency / 1e9, 3) for l in h2o}
    assert {22.235, 183.31, 325.153, 1780.0} <= freqs
    assert any(abs(l.center_frequency - 118.750334e9) < 1e3 for l in o2)


def test_units_are_converted_to_si():
    (line,) = load_line_catalog(f"{HEADER}\n{ROW}\n".encode())
    assert line.center_frequency == pytest.approx(183.310087e9)
    assert line.air_broadening == pytest.approx(2.906e4)  # MHz/hPa -> Hz/Pa
    assert line.self_broadening == pytest.approx(14.5939e4)
    assert line.line_intensity == pytest.approx(0.2273)


def test_species_directive_and_comments():
    text = f"{HEADER}\n# comment\n\n{ROW}\n#species o2\n60.306 1e-7 0.8 0.9 0.8 100\n"
    lines = load_line_catalog(io.StringIO(text))
    assert [l.species for l in lines] == ["h2o", "o2"]


def test_cutoff_drops_high_lines():
    lines = load_bundled_catalog(cutoff_hz=1e12)
    assert max(l.center_frequency for l in lines) <= 1e12
    assert len(lines) < 79


@pytest.mark.parametrize(
    "body, row",
    [
        (f"{ROW}\n1 2 3\n", 3),
        (f"{ROW}\n1 2 x 4 5 6\n", 3),
        ("#species co2\n", 2),
        ("-5 1 1 1 0.7 0\n", 2),
    ],
)
def test_bad_rows_name_the_row(body, row):
    with pytest.raises(CatalogParseError) as exc:
        load_line_catalog(f"{HEADER}\n{body}".encode())
    assert exc.value.row == row
    assert str(exc.value).startswith(f"row {row}:")


def test_missing_header_is_row_one():
    with pytest.raises(CatalogParseError) as exc:
        load_line_catalog(ROW.encode())
    assert exc.value.row == 1


def test_empty_catalogs():
    with pytest.raises(EmptyCatalogError):
        load_line_catalog(b"")
    with pytest.raises(EmptyCatalogError):
        load_line_catalog(f"{HEADER}\n# nothing\n".encode())


def test_missing_file_names_path(tmp_path):
    missing = tmp_path / "nope.cat"
    with pytest.raises(FileNotFoundError, match="nope.cat"):
        load_line_catalog(missing)


def test_line_validation():
    with pytest.raises(ValueError):
        SpectralLine(1e9, 1.0, 0.0, 1.0, 0.7, 0.0)
    with pytest.raises(ValueError):
        SpectralLine(1e9, 1.0, 1.0, 1.0, 0.7, 0.0, species="co2")
