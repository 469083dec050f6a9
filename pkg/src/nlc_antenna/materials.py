"""Liquid-crystal material records and the bundled material table."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import InputError

EPS0 = 8.8541878128e-12  # F/m

PICO = 1e-12


@dataclass(frozen=True)
class LCMaterial:
    """Dielectric, optical and elastic constants of one nematic mixture.

    Elastic constants are stored in newtons (``k11=4.6e-12``), the
    thermotropic coefficients ``a_coef``, ``b_coef``, ``c_coef`` in N/m^2.
    Refractive indices refer to 532 nm.
    """

    name: str
    eps_perp: float
    delta_eps: float
    n_o: float
    delta_n: float
    k11: float
    k22: float
    k33: float
    a_coef: float = -6.5e5
    b_coef: float = -16e5
    c_coef: float = 39e5
    clearing_temp: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        if not self.eps_perp > 0:
            raise InputError(f"{self.name}: eps_perp must be positive")
        if not (self.k11 > 0 and self.k22 > 0 and self.k33 > 0):
            raise InputError(f"{self.name}: elastic constants must be positive")
        if not self.c_coef > 0:
            raise InputError(f"{self.name}: c_coef must be positive")
        if not self.n_o > 1:
            raise InputError(f"{self.name}: n_o must exceed 1")

    @property
    def eps_par(self) -> float:
        return self.eps_perp + self.delta_eps

    @property
    def eps_mean(self) -> float:
        return (2.0 * self.eps_perp + self.eps_par) / 3.0

    @property
    def n_e(self) -> float:
        return self.n_o + self.delta_n

    def as_dict(self) -> dict:
        return asdict(self)


def _parse_table(text: str) -> dict[str, LCMaterial]:
    rows = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    out = {}
    for rec in csv.DictReader(io.StringIO("\n".join(rows))):
        mat = LCMaterial(
            name=rec["name"].strip(),
            eps_perp=float(rec["eps_perp"]),
            delta_eps=float(rec["delta_eps"]),
            n_o=float(rec["n_o"]),
            delta_n=float(rec["delta_n"]),
            k11=float(rec["k11_pN"]) * PICO,
            k22=float(rec["k22_pN"]) * PICO,
            k33=float(rec["k33_pN"]) * PICO,
            a_coef=float(rec["a_coef"]),
            b_coef=float(rec["b_coef"]),
            c_coef=float(rec["c_coef"]),
            clearing_temp=float(rec["clearing_temp_C"]),
        )
        out[mat.name] = mat
    return out


@lru_cache(maxsize=None)
def _builtin() -> dict[str, LCMaterial]:
    text = resources.files("nlc_antenna").joinpath("data/materials.csv").read_text(encoding="utf-8")
    return _parse_table(text)


def load_materials(path: str | Path | None = None) -> dict[str, LCMaterial]:
    """Return the material table, optionally merged with a user CSV file.

    User records with the same name replace the built-in ones.
    """
    table = dict(_builtin())
    if path is not None:
        table.update(_parse_table(Path(path).read_text(encoding="utf-8")))
    return table


def get_material(name: str, path: str | Path | None = None) -> LCMaterial:
    table = load_materials(path)
    try:
        return table[name]
    except KeyError:
        raise InputError(f"unknown material {name!r}; known: {', '.join(table)}") from None
