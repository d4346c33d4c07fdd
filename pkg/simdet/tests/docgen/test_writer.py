from types import SimpleNamespace

import docutils.core

from simdet.config import config_fields
from simdet.docgen import REFERENCE_DOCNAME, create_config_reference, setup, update_sphinx
from simdet.docgen.writer import ConfigReferenceWriter


def reference():
    return ConfigReferenceWriter().write_reference(config_fields())


def test_reference_lists_every_key():
    text = reference()
    for field in config_fields():
        assert f"   * - ``{field.metadata['key']}``" in text


def test_reference_shows_defaults():
    lines = reference().splitlines()
    seed = lines.index("   * - ``Seed``")
    assert lines[seed + 1] == "     - ``0``"
    n_way = lines.index("   * - ``N-Way``")
    assert lines[n_way + 1] == "     - *(empty)*"
    assert "   Track: image" in lines


def test_reference_is_valid_rst():
    doctree = docutils.core.publish_doctree(reference(), settings_overrides={"report_level": 2, "halt_level": 2})
    text = doctree.astext()
    assert "Configuration reference" in text
    assert "Retrain-With-Validation" in text


def test_update_sphinx_registers_the_page(tmp_path):
    env = SimpleNamespace(srcdir=tmp_path, found_docs=set())
    docnames = ["index"]
    create_config_reference(None, env, docnames)
    create_config_reference(None, env, docnames)
    assert docnames == ["index", REFERENCE_DOCNAME]
    assert env.found_docs == {REFERENCE_DOCNAME}
    assert (tmp_path / f"{REFERENCE_DOCNAME}.rst").read_text(encoding="utf-8") == reference()


def test_update_sphinx_returns_the_path(tmp_path):
    env = SimpleNamespace(srcdir=tmp_path, found_docs=set())
    assert update_sphinx("page", "Title\n=====\n", [], env) == tmp_path / "page.rst"


def test_setup_connects_before_reading():
    connected = []
    app = SimpleNamespace(connect=lambda event, handler: connected.append((event, handler)))
    assert setup(app) == {"parallel_read_safe": True, "parallel_write_safe": True}
    assert connected == [("env-before-read-docs", create_config_reference)]
