from __future__ import annotations

from importlib import resources

from computelca import fixturegen

from conftest import CONFIGS, FIXTURES


def test_regeneration_is_byte_identical(tmp_path):
    written = fixturegen.write_fixtures(tmp_path)
    for name, path in written.items():
        assert path.read_bytes() == (FIXTURES / name).read_bytes(), name


def test_root_copies_match_package_data():
    data = resources.files("computelca") / "data"
    for name in ("runs.log", "llm_backbone.log", "manifest.json"):
        assert (data / "fixtures" / name).read_bytes() == (FIXTURES / name).read_bytes()
    assert (data / "configs" / "nabuchodonosor-fr.json").read_bytes() == \
        (CONFIGS / "nabuchodonosor-fr.json").read_bytes()


def test_other_seeds_differ_but_keep_aggregates():
    from computelca.analytics import by_run_phase
    a, _ = fixturegen.generate()
    b, _ = fixturegen.generate(seed=7)
    assert a.runs != b.runs
    ra = {k: round(v.gpu_hours) for k, v in by_run_phase(a).values.items()}
    rb = {k: round(v.gpu_hours) for k, v in by_run_phase(b).values.items()}
    assert ra == rb
