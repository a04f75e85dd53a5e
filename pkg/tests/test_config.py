import math

import pytest

from treeirl.config import (
    DEFAULTS,
    ConfigError,
    build_config,
    derive_seed,
    grid,
    matched_eqb_alpha,
    merge,
    parse_config_text,
    preset_grid,
    split_grid,
)


def test_parse_and_coerce():
    flat = parse_config_text("""
        # comment
        branching = 15
        eta-pi = 1e-4   # trailing comment
        shaky = yes
        method = erb-eqb
        alpha_eqb = auto
    """)
    assert flat == {"branching": 15, "eta_pi": 1e-4, "shaky": True, "method": "erb_eqb",
                    "alpha_eqb": "auto"}


@pytest.mark.parametrize("text", ["branching = ten", "nonsense = 1", "method = sqil",
                                  "just words", "levels = 2.5", "shaky = maybe"])
def test_bad_lines(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_lists_only_when_allowed():
    flat = parse_config_text("method = erb, baseline\nlevels = 4", allow_lists=True)
    scalars, axes = split_grid(flat)
    assert scalars == {"levels": 4}
    assert axes == {"method": ["erb", "baseline"]}
    with pytest.raises(ConfigError):
        parse_config_text("method = erb, baseline")


def test_merge_precedence():
    flat = merge({"levels": 4, "epochs": 10}, {"levels": 6, "epochs": None})
    assert flat["levels"] == 6 and flat["epochs"] == 10
    assert flat["branching"] == DEFAULTS["branching"]


def test_grid_row_major():
    flats = grid(merge({}), {"branching": [2, 3], "method": ["erb", "bc"]})
    assert [(f["branching"], f["method"]) for f in flats] == \
        [(2, "erb"), (2, "bc"), (3, "erb"), (3, "bc")]


def test_build_config_auto_alpha():
    cfg = build_config(merge({"branching": 15, "alpha": 0.5, "alpha_eqb": "auto"}), seed=4)
    assert cfg.learner.alpha_eqb == pytest.approx(0.5 * math.log(15) / math.log(2))
    shaky = build_config(merge({"branching": 3, "shaky": True, "alpha_eqb": "auto"}))
    assert shaky.learner.alpha_eqb == pytest.approx(2.0)
    assert matched_eqb_alpha(1.0, 2) == pytest.approx(1.0)


def test_build_config_rejects_invalid_values():
    with pytest.raises(ConfigError):
        build_config(merge({"branching": 1}))
    with pytest.raises(ConfigError):
        build_config(merge({"expert_ratio": 2.0}))


def test_preset_overrides():
    flats = preset_grid("ratios", overrides={"epochs": 7}, file_layer={"epochs": 3, "levels": 5})
    assert all(f["epochs"] == 7 and f["levels"] == 5 for f in flats)
    with pytest.raises(ConfigError):
        preset_grid("mujoco")


def test_derive_seed_stable():
    assert derive_seed(0, 0) == derive_seed(0, 0)
    assert len({derive_seed(0, i) for i in range(50)}) == 50
    assert derive_seed(1, 0) != derive_seed(0, 0)


def test_override_pins_preset_axis():
    flats = preset_grid("fig2", overrides={"eta_pi": 1e-4})
    assert len(flats) == 2 * 3
    assert {f["eta_pi"] for f in flats} == {1e-4}
    flats = preset_grid("fig2", overrides={"branching": 10},
                        file_layer={"eta_pi": 1e-3, "method": ["erb", "bc"]})
    assert [(f["branching"], f["eta_pi"], f["method"]) for f in flats] == \
        [(10, 1e-3, "erb"), (10, 1e-3, "bc")]


def test_config_ids_distinguish_learner_settings():
    ids = {build_config(merge({"alpha": a, "gamma": g})).config_id
           for a in (0.5, 1.0) for g in (0.9, 1.0)}
    assert len(ids) == 4
    assert build_config(merge({"method": "baseline", "expert_ratio": 0.3})).config_id == \
        build_config(merge({"method": "baseline", "expert_ratio": 0.7})).config_id
