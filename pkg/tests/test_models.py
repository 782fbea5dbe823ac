import numpy as np
import pytest

from ergokit.models import (
    BirthDeathModel,
    DiffusionModel,
    ModelFileError,
    PositivityError,
    load_model,
    parse_model_text,
)

GAMMA2 = 'kind = birth-death\nb0 = 1\nb = "n^2"\na = "n^2"\n'
OU = 'kind = diffusion\na = "1"\nb = "-x"\n'


def test_gamma2_model():
    m = parse_model_text(GAMMA2, "gamma2")
    assert isinstance(m, BirthDeathModel)
    assert m.birth_rate(0) == 1.0
    assert m.birth_rate(3) == 9.0
    assert m.death_rate(4) == 16.0


def test_ou_model():
    m = parse_model_text(OU, "ou")
    assert isinstance(m, DiffusionModel)
    assert m.a_of(2.5) == 1.0
    assert m.b_of(2.5) == -2.5


def test_nonpositive_death_rate_reports_index():
    with pytest.raises((ModelFileError, PositivityError), match="a_1"):
        parse_model_text('kind = birth-death\nb0 = 1\nb = "n^2"\na = "0"\n')


def test_comments_and_blank_lines():
    text = "# a model\n\nkind = birth-death   # inline\nb0 = 1\nb = \"n # not a comment\"\n"
    # '#' inside quotes is content, so 'n # not a comment' fails to parse
    with pytest.raises(ModelFileError):
        parse_model_text(text)
    ok = "# chain\nkind = birth-death\nb0 = 1\nb = \"n+1\"  # birth\na = \"n+2\"\n"
    m = parse_model_text(ok)
    assert m.birth_rate(1) == 2.0


def test_missing_keys():
    with pytest.raises(ModelFileError, match="kind"):
        parse_model_text('b0 = 1\n')
    with pytest.raises(ModelFileError, match="'a'"):
        parse_model_text('kind = birth-death\nb0 = 1\nb = "n"\n')
    with pytest.raises(ModelFileError, match="'b'"):
        parse_model_text('kind = diffusion\na = "1"\n')


def test_bad_line_reports_number():
    with pytest.raises(ModelFileError, match="line 3"):
        parse_model_text('kind = birth-death\nb0 = 1\nwhatever\n')


def test_unknown_kind():
    with pytest.raises(ModelFileError, match="unknown kind"):
        parse_model_text('kind = submarine\n')


def test_overrides_shadow_expressions():
    m = parse_model_text(GAMMA2 + "b[5] = 26.0\na[5] = 24.5\n")
    assert m.birth_rate(5) == 26.0
    assert m.death_rate(5) == 24.5
    assert m.birth_rate(6) == 36.0
    rates = m.birth_rates(np.arange(4, 8))
    np.testing.assert_allclose(rates, [16.0, 26.0, 36.0, 49.0])


def test_override_never_evaluates_expression():
    # the expression is undefined at n=0, but the override takes precedence
    m = parse_model_text('kind = birth-death\nb0 = 1\nb = "n"\na = "1/n"\na[1] = 3\n')
    assert m.death_rate(1) == 3.0


def test_positivity_probed_at_load():
    with pytest.raises((ModelFileError, PositivityError), match="b_33"):
        parse_model_text('kind = birth-death\nb0 = 1\nb = "33-n"\na = "1"\n')
    with pytest.raises((ModelFileError, PositivityError)):
        parse_model_text('kind = diffusion\na = "x-1"\nb = "0"\n')


def test_unquoted_expression_rejected():
    with pytest.raises(ModelFileError, match="quoted"):
        parse_model_text('kind = birth-death\nb0 = 1\nb = n^2\na = "n^2"\n')


def test_load_model_roundtrip(tmp_path):
    p = tmp_path / "g2.model"
    p.write_text(GAMMA2, encoding="utf-8")
    m = load_model(p)
    assert m.name == "g2"
    assert m.kind == "birth-death"


def test_vectorized_rates_match_scalar():
    m = parse_model_text(GAMMA2 + "b[3] = 7.5\n")
    idx = np.arange(1, 10)
    np.testing.assert_allclose(m.birth_rates(idx), [m.birth_rate(int(i)) for i in idx])
    np.testing.assert_allclose(m.death_rates(idx), [m.death_rate(int(i)) for i in idx])


def test_q_total():
    m = parse_model_text(GAMMA2)
    assert m.q_total(0) == 1.0
    assert m.q_total(3) == 18.0
