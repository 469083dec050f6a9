"""Run configuration: INI text with unit-suffixed keys.

Every key has a type and a default, so an empty file is a complete
configuration. ``dumps`` writes every key in a fixed order, which makes the
canonical text (and its hash) independent of how the input was written.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass

import numpy as np

from .antenna import SpiralParams, TuningModel, calibrate
from .cell import CellStack
from .errors import ConfigError, InputError
from .materials import PICO, LCMaterial, get_material
from .qtensor import ELASTIC_RULES, QUARTIC_CONVENTIONS, LdGModel
from .solver2d import OpticsSetup

AUTO = "auto"


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _vector(text):
    vals = tuple(float(p) for p in text.replace(" ", "").split(","))
    if len(vals) != 3:
        raise ValueError("expected three comma-separated numbers")
    return vals


def _optional_float(text):
    t = text.strip()
    return None if t.lower() in (AUTO, "") else float(t)


def _choice(*options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {options}")
        return t

    return parse


def _fmt(value):
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# section -> key -> (parser, default)
SCHEMA = {
    "material": {
        "name": (str.strip, "RDP-84909"),
        "table_file": (str.strip, ""),
        "eps_perp": (_optional_float, None),
        "delta_eps": (_optional_float, None),
        "n_o": (_optional_float, None),
        "delta_n": (_optional_float, None),
        "k11_pN": (_optional_float, None),
        "k22_pN": (_optional_float, None),
        "k33_pN": (_optional_float, None),
        "a_coef_N_m2": (_optional_float, None),
        "b_coef_N_m2": (_optional_float, None),
        "c_coef_N_m2": (_optional_float, None),
    },
    "model": {
        "quartic_convention": (_choice(*QUARTIC_CONVENTIONS), "tr_q2_sq"),
        "elastic_rule": (_choice(*ELASTIC_RULES), "k11"),
        "s_ref": (_optional_float, None),
    },
    "cell": {
        "lc_thickness_um": (float, 80.0),
        "dielectric_thickness_um": (float, 50.0),
        "dielectric_eps": (float, 3.5),
        "dielectric_position": (_choice("outside", "inside"), "outside"),
        "electrode_pattern": (_choice("grid", "plate"), "grid"),
        "electrode_width_um": (float, 1.0),
        "electrode_gap_um": (float, 49.0),
        "electrode_offset_um": (float, 0.0),
        "easy_axis": (_vector, (1.0, 0.0, 0.0)),
        "anchoring_mode": (_choice("strong", "free"), "strong"),
        "grid_nz": (int, 129),
        "grid_nx": (int, 128),
    },
    "sweep": {
        "start_V": (float, 0.0),
        "stop_V": (float, 3.0),
        "count": (int, 31),
        "averaging": (_choice("mean", "series"), "mean"),
        "warm_start": (_bool, True),
    },
    "solver": {
        "tol_q": (float, 1e-4),
        "tol_energy": (float, 1e-10),
        "max_steps": (int, 500_000),
        "dt0": (float, 1e-3),
        "perturbation_rad": (float, 1e-3),
        "poisson_method": (_choice("direct", "sor"), "direct"),
    },
    "optics": {
        "enabled": (_bool, True),
        "voltage_V": (float, 1.0),
        "wavelength_nm": (float, 532.0),
        "ambient_index": (float, 1.0),
        "cover_index": (float, 1.70),
        "ito_index_real": (float, 1.95),
        "ito_index_imag": (float, 0.02),
        "ito_thickness_nm": (float, 150.0),
        "bandwidth_nm": (float, 10.0),
        "band_samples": (int, 101),
    },
    "antenna": {
        "eps_low": (float, 8.0),
        "f_low_GHz": (float, 4.15),
        "eps_high": (float, 47.1),
        "f_high_GHz": (float, 3.09),
        "q_factor": (_optional_float, None),
        "c_p_pF": (float, 0.8),
        "z0_ohm": (float, 50.0),
        "band_low_GHz": (float, 3.3),
        "band_high_GHz": (float, 3.8),
        "s11_eps": (float, 20.0),
        "s11_span_MHz": (float, 200.0),
        "s11_points": (int, 4001),
    },
    "spiral": {
        "form": (_choice("archimedean", "exponential"), "archimedean"),
        "r0_mm": (float, 4.5),
        "r1_mm": (float, 4.7),
        "alpha": (_optional_float, None),
        "phi_max_pi": (float, 6.0),
        "samples_per_turn": (int, 64),
    },
}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key):
        section, name = key
        return self.values[section][name]

    # derived objects ------------------------------------------------------

    def material(self) -> LCMaterial:
        mat = self.values["material"]
        base = get_material(mat["name"], mat["table_file"] or None)
        fields = {
            "eps_perp": mat["eps_perp"],
            "delta_eps": mat["delta_eps"],
            "n_o": mat["n_o"],
            "delta_n": mat["delta_n"],
            "k11": None if mat["k11_pN"] is None else mat["k11_pN"] * PICO,
            "k22": None if mat["k22_pN"] is None else mat["k22_pN"] * PICO,
            "k33": None if mat["k33_pN"] is None else mat["k33_pN"] * PICO,
            "a_coef": mat["a_coef_N_m2"],
            "b_coef": mat["b_coef_N_m2"],
            "c_coef": mat["c_coef_N_m2"],
        }
        overrides = {k: v for k, v in fields.items() if v is not None}
        if not overrides:
            return base
        from dataclasses import replace

        return replace(base, **overrides)

    def model(self) -> LdGModel:
        m = self.values["model"]
        return LdGModel(self.material(), m["quartic_convention"], m["elastic_rule"], m["s_ref"])

    def cell(self, **changes) -> CellStack:
        c = self.values["cell"]
        um = 1e-6
        stack = CellStack(
            lc_thickness=c["lc_thickness_um"] * um,
            dielectric_layers=((c["dielectric_thickness_um"] * um, c["dielectric_eps"]),),
            dielectric_position=c["dielectric_position"],
            electrode_pattern=c["electrode_pattern"],
            electrode_width=c["electrode_width_um"] * um,
            electrode_gap=c["electrode_gap_um"] * um,
            electrode_offset=c["electrode_offset_um"] * um,
            easy_axis=tuple(np.asarray(c["easy_axis"]) / np.linalg.norm(c["easy_axis"])),
            anchoring_mode=c["anchoring_mode"],
            grid_nz=c["grid_nz"],
            grid_nx=c["grid_nx"],
        )
        return stack.replace(**changes) if changes else stack

    def voltages(self):
        s = self.values["sweep"]
        return np.linspace(s["start_V"], s["stop_V"], s["count"])

    def solver_options(self) -> dict:
        s = self.values["solver"]
        return {
            "tol_q": s["tol_q"],
            "tol_energy": s["tol_energy"],
            "max_steps": s["max_steps"],
            "dt0": s["dt0"],
            "perturbation": s["perturbation_rad"],
        }

    def optics_setup(self) -> OpticsSetup:
        o = self.values["optics"]
        return OpticsSetup(
            ambient_index=o["ambient_index"],
            cover_index=o["cover_index"],
            ito_index=complex(o["ito_index_real"], o["ito_index_imag"]),
            ito_thickness=o["ito_thickness_nm"] * 1e-9,
            bandwidth=o["bandwidth_nm"] * 1e-9,
            band_samples=o["band_samples"],
        )

    def tuning_model(self) -> TuningModel:
        a = self.values["antenna"]
        return calibrate(
            a["eps_low"],
            a["f_low_GHz"] * 1e9,
            a["eps_high"],
            a["f_high_GHz"] * 1e9,
            q_factor=a["q_factor"],
            c_p=a["c_p_pF"] * PICO,
            z0=a["z0_ohm"],
        )

    def band(self):
        a = self.values["antenna"]
        return a["band_low_GHz"] * 1e9, a["band_high_GHz"] * 1e9

    def spiral_params(self) -> SpiralParams:
        s = self.values["spiral"]
        return SpiralParams(
            r0=s["r0_mm"] * 1e-3,
            r1=s["r1_mm"] * 1e-3,
            alpha=s["alpha"],
            phi_max=s["phi_max_pi"] * np.pi,
            form=s["form"],
        )

    def switches(self) -> dict:
        """Convention switches recorded in output headers."""
        return {
            "quartic_convention": self["model", "quartic_convention"],
            "elastic_rule": self["model", "elastic_rule"],
            "averaging": self["sweep", "averaging"],
            "dielectric_position": self["cell", "dielectric_position"],
        }

    def digest(self) -> str:
        return hashlib.sha256(dumps(self).encode("utf-8")).hexdigest()


def _validate(values):
    s = values["sweep"]
    if s["count"] < 2:
        raise ConfigError("sweep count must be at least 2")
    if not s["start_V"] < s["stop_V"]:
        raise ConfigError("sweep start_V must be below stop_V")
    if s["start_V"] < 0:
        raise ConfigError("voltages must be non-negative")


def loads(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep unit suffix case
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        given = dict(parser.items(section)) if parser.has_section(section) else {}
        unknown = set(given) - set(keys)
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
        for key, (parse, default) in keys.items():
            if key in given:
                try:
                    values[section][key] = parse(given[key])
                except ValueError as exc:
                    raise ConfigError(f"[{section}] {key}: {exc}") from None
            else:
                values[section][key] = default
    extra = set(parser.sections()) - set(SCHEMA)
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")
    _validate(values)
    cfg = RunConfig(values)
    try:
        cfg.model()
        cfg.cell()
    except (InputError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def default() -> RunConfig:
    return loads("")


def dumps(cfg: RunConfig) -> str:
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(cfg.values[section][key])}")
        lines.append("")
    return "\n".join(lines)
