import json
import math

import numpy as np
import pytest

from trapsim.config import (
    ConfigError,
    DEFAULTS,
    beam_from,
    dynamics_from,
    kappa_from,
    resolve_config,
    trap_from,
)
from trapsim.potential import trap_depth


class TestResolveConfig:
    def test_defaults_returned_untouched(self):
        cfg = resolve_config(None, {})
        assert cfg == DEFAULTS
        assert cfg is not DEFAULTS

    def test_unknown_override_rejected(self):
        with pytest.raises(ConfigError, match="nope"):
            resolve_config(None, {"nope": 1})

    def test_unknown_file_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{"primary.powr_mw": 3}')
        with pytest.raises(ConfigError, match="powr"):
            resolve_config(path)

    def test_provenance_sidecar_accepted(self, tmp_path):
        path = tmp_path / "prov.json"
        path.write_text(json.dumps({"command": "depth", "config": {"seed": 77}}))
        assert resolve_config(path)["seed"] == 77

    def test_type_coercion(self):
        cfg = resolve_config(
            None,
            {
                "primary.power_mw": "12.5",
                "simulate.n_cycles": 20.0,
                "trap.zeta_applies_to_ancillary": "true",
            },
        )
        assert cfg["primary.power_mw"] == 12.5
        assert cfg["simulate.n_cycles"] == 20
        assert cfg["trap.zeta_applies_to_ancillary"] is True

    def test_non_integer_count_rejected(self):
        with pytest.raises(ConfigError):
            resolve_config(None, {"simulate.n_cycles": 2.5})

    def test_invalid_json_reported(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            resolve_config(path)


class TestBuilders:
    def test_default_beams(self):
        cfg = resolve_config(None, {})
        primary = beam_from(cfg, "primary")
        assert primary.waist_um == 1.3
        assert primary.rayleigh_um == 11.7
        assert primary.zeta == 0.33
        ancillary = beam_from(cfg, "ancillary")
        assert ancillary.direction == -1
        assert ancillary.rayleigh_um == pytest.approx(math.pi * 2.03**2 / 0.852)

    def test_invalid_beam_value_is_config_error(self):
        cfg = resolve_config(None, {"primary.waist_um": -1.0})
        with pytest.raises(ConfigError):
            beam_from(cfg, "primary")

    def test_kappa_fixed_by_default(self):
        cfg = resolve_config(None, {"trap.kappa": 0.4})
        assert kappa_from(cfg) == 0.4

    def test_kappa_from_qwp(self):
        cfg = resolve_config(
            None,
            {
                "trap.kappa_from_qwp": True,
                "primary.ellipticity": 1.0,
                "qwp.theta_deg": 53.0,
                "qwp.theta0_deg": 8.0,
            },
        )
        assert kappa_from(cfg) == pytest.approx(1.0, rel=1e-12)

    def test_n_sites_from_antinodes(self):
        cfg = resolve_config(
            None,
            {
                "dynamics.n_sites_from_antinodes": True,
                "ancillary.power_mw": 5.0,
                "trap.kappa": 1.0,
                "sites.z_min_um": -1.0,
                "sites.z_max_um": 1.0,
            },
        )
        params = dynamics_from(cfg)
        assert params.n_sites >= 4  # ~2 um span / 426 nm lattice period

    def test_count_rate_table_interpolates_at_trap_depth(self):
        table = [[0.2, 2000.0], [1.0, 500.0]]
        cfg = resolve_config(
            None, {"dynamics.count_rate_table": table, "ancillary.power_mw": 0.0}
        )
        depth = trap_depth(trap_from(cfg))
        expected = float(np.interp(depth, [0.2, 1.0], [2000.0, 500.0]))
        assert dynamics_from(cfg).atom_count_rate == pytest.approx(expected, rel=1e-12)

    def test_count_rate_table_validation(self):
        cfg = resolve_config(None, {"dynamics.count_rate_table": [[1.0, 5.0], [0.5, 3.0]]})
        with pytest.raises(ConfigError, match="increasing"):
            dynamics_from(cfg)
        cfg = resolve_config(None, {"dynamics.count_rate_table": [["x", 1]]})
        with pytest.raises(ConfigError):
            dynamics_from(cfg)
