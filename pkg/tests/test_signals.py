"""Include resolution and the signal table."""

from pathlib import Path

import pytest

from fusegen import load_description, load_description_text
from fusegen.diagnostics import SourceError
from fusegen.signals import IncludeResolver, builtin_signals, collect_include_sources

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def test_builtin_signals_cover_reference_names() -> None:
    table = builtin_signals()
    for name in ("angle", "angularRate", "time", "distance", "ajf"):
        assert table.lookup(name) is not None, name
    assert table.lookup("angle").is_dimensionless
    assert table.lookup("angularRate").render() == "time**-1"
    assert table.lookup("ajf").render() == "length * time**-2"


def test_include_is_resolved_from_search_path(corpus: Path) -> None:
    desc, warnings = load_description(corpus / "pendulum_filter.nt", search_paths=[str(corpus)])
    assert warnings == []
    # the include's alias declarations were merged in
    assert any(sig.name == "radian" for sig in desc.signals)


def test_missing_include_is_a_warning_not_an_error() -> None:
    source = 'include "NoSuchFile.nt"\nm : invariant( a : angle, b : angle ) = { a ~ b }\n'
    resolver = IncludeResolver([])
    desc, warnings = load_description_text(source, "main.nt", resolver)
    assert len(warnings) == 1
    assert warnings[0].severity == "warning"
    assert "include 'NoSuchFile.nt' not found" in warnings[0].message


def test_explicit_sources_take_precedence(tmp_path: Path) -> None:
    (tmp_path / "inc.nt").write_text("shadowed : signal = time;\n")
    resolver = IncludeResolver(
        [str(tmp_path)], sources={"inc.nt": "explicit : signal = time;\n"}
    )
    desc, warnings = load_description_text('include "inc.nt"\n', "main.nt", resolver)
    assert warnings == []
    assert [sig.name for sig in desc.signals] == ["explicit"]


def test_nested_includes(tmp_path: Path) -> None:
    (tmp_path / "a.nt").write_text('include "b.nt"\nfromA : signal = time;\n')
    (tmp_path / "b.nt").write_text("fromB : signal = length;\n")
    resolver = IncludeResolver([str(tmp_path)])
    desc, warnings = load_description_text('include "a.nt"\n', "main.nt", resolver)
    assert warnings == []
    assert {sig.name for sig in desc.signals} == {"fromA", "fromB"}


def test_include_cycle_is_tolerated(tmp_path: Path) -> None:
    (tmp_path / "a.nt").write_text('include "b.nt"\nfromA : signal = time;\n')
    (tmp_path / "b.nt").write_text('include "a.nt"\nfromB : signal = length;\n')
    resolver = IncludeResolver([str(tmp_path)])
    desc, _ = load_description_text('include "a.nt"\n', "main.nt", resolver)
    assert {sig.name for sig in desc.signals} == {"fromA", "fromB"}


def test_include_depth_limit(tmp_path: Path) -> None:
    for i in range(12):
        (tmp_path / f"f{i}.nt").write_text(f'include "f{i + 1}.nt"\n')
    (tmp_path / "f12.nt").write_text("deep : signal = time;\n")
    resolver = IncludeResolver([str(tmp_path)])
    with pytest.raises(SourceError) as info:
        load_description_text('include "f0.nt"\n', "main.nt", resolver)
    assert "include depth" in info.value.diagnostics[0].message


def test_collect_include_sources(corpus: Path) -> None:
    source = (corpus / "pendulum_filter.nt").read_text()
    sources = collect_include_sources(source, "pendulum_filter.nt", [str(corpus)])
    assert set(sources) == {"NewtonBaseSignals.nt"}
    assert "radian" in sources["NewtonBaseSignals.nt"]
