"""Command-line pipelines.

Examples:
  nlc-antenna materials
  nlc-antenna freedericksz --config run.ini --out results --jobs 4
  nlc-antenna tune --out results
  nlc-antenna optics --out results
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, solver1d, solver2d
from .antenna import band_coverage, bandwidth_minus10db, frequency_from_eps, s11_curve, spiral_inductance_estimate, spiral_path, tuning_curve
from .config import RunConfig, default, load
from .equilibrium import freedericksz_curve, locate_threshold, max_slope_voltage
from .errors import ConfigError, InputError, NoBandwidthError, SolverError
from .materials import load_materials
from .optics import PlaneWaveSpec, column_transmittance
from .qtensor import LdGModel, director_and_order, equilibrium_order, freedericksz_threshold

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("nlc_antenna")


def _num(x) -> str:
    return format(float(x), ".12g")


class CsvOut:
    """CSV writer with the provenance header; numbers use a fixed format."""

    def __init__(self, path: Path, cfg: RunConfig, columns, note=None):
        self.path = path
        self.fh = open(path, "w", encoding="utf-8", newline="\n")
        self.fh.write(f"# nlc-antenna {__version__}\n")
        self.fh.write(f"# config_sha256 {cfg.digest()}\n")
        self.fh.write("# " + " ".join(f"{k}={v}" for k, v in cfg.switches().items()) + "\n")
        if note:
            for line in note:
                self.fh.write(f"# {line}\n")
        self.fh.write(",".join(columns) + "\n")

    def row(self, *values):
        self.fh.write(",".join(_num(v) for v in values) + "\n")

    def comment(self, text):
        self.fh.write(f"# {text}\n")

    def close(self):
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_table(path, cfg, columns, rows, note=None):
    with CsvOut(path, cfg, columns, note) as out:
        for r in rows:
            out.row(*r)


# commands ------------------------------------------------------------------


def cmd_materials(cfg: RunConfig, args) -> int:
    table = load_materials(cfg["material", "table_file"] or None)
    head = f"{'name':<10} {'T_NI':>6} {'eps_perp':>8} {'d_eps':>6} {'eps_par':>7} {'n_o':>6} {'d_n':>7} {'K11':>5} {'K22':>5} {'K33':>5} {'S_eq':>6} {'V_c':>7}"
    print(head)
    for name, m in table.items():
        s_eq = equilibrium_order(m, cfg["model", "quartic_convention"])
        vc = freedericksz_threshold(m)
        print(
            f"{name:<10} {m.clearing_temp:6.1f} {m.eps_perp:8.2f} {m.delta_eps:6.2f} {m.eps_par:7.2f} "
            f"{m.n_o:6.4f} {m.delta_n:7.4f} {m.k11 * 1e12:5.1f} {m.k22 * 1e12:5.1f} {m.k33 * 1e12:5.1f} "
            f"{s_eq:6.4f} {vc:7.4f}"
        )
    print("K in pN, V_c in V")
    return EXIT_OK


def _sweep(cfg: RunConfig, args, out: Path):
    stack = cfg.cell()
    model = cfg.model()
    jobs = max(1, args.jobs)
    warm = cfg["sweep", "warm_start"] and jobs == 1
    path = out / "freedericksz.csv"
    curve = freedericksz_curve(
        stack,
        model,
        cfg.voltages(),
        averaging=cfg["sweep", "averaging"],
        warm_start=warm,
        jobs=jobs,
        keep_states=args.profiles,
        raise_on_failure=False,
        **cfg.solver_options(),
    )
    with CsvOut(path, cfg, ["voltage_V", "eps_eff", "midplane_tilt_rad", "energy"]) as fh:
        for r in curve.rows:
            fh.row(r.voltage, r.eps_eff, r.midplane_tilt, r.energy)
        if curve.failure is not None:
            fh.comment(f"FAILED at V={curve.failure.voltage}: {curve.failure}")
    if args.profiles:
        for state in curve.states:
            n, s = director_and_order(state.q)
            rows = np.column_stack([state.z, n, s])
            write_table(out / f"director_{state.applied_voltage:.4f}V.csv", cfg, ["z_m", "nx", "ny", "nz", "S"], rows)
    return curve, model


def _report_curve(curve):
    v, e = curve.voltages, curve.eps
    if v.size >= 3:
        try:
            print(f"threshold (onset) {locate_threshold(v, e):.4f} V; steepest rise near {max_slope_voltage(v, e):.3f} V")
        except InputError as exc:
            print(f"threshold not located: {exc}")


def cmd_freedericksz(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    curve, model = _sweep(cfg, args, out)
    print(f"analytic threshold {freedericksz_threshold(model.material):.4f} V")
    _report_curve(curve)
    print(f"wrote {out / 'freedericksz.csv'}")
    if curve.failure is not None:
        print(f"error: {curve.failure}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_tune(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    curve, model = _sweep(cfg, args, out)
    if curve.failure is not None:
        print(f"error: {curve.failure}", file=sys.stderr)
        return EXIT_SOLVER
    tm = cfg.tuning_model()
    table = tuning_curve(curve.voltages, curve.eps, tm)
    write_table(out / "tuning.csv", cfg, ["voltage_V", "eps_eff", "f_res_hz"], table)
    eps_grid = np.linspace(cfg["antenna", "eps_low"], cfg["antenna", "eps_high"], 80)
    write_table(
        out / "eps_frequency.csv",
        cfg,
        ["eps_eff", "f_res_hz"],
        np.column_stack([eps_grid, frequency_from_eps(tm, eps_grid)]),
        note=[f"x_a={tm.x_a!r} x_b={tm.x_b!r} q_factor={tm.q_factor!r}"],
    )
    band = cfg.band()
    v_lo, v_hi = band_coverage(table[:, 0], table[:, 2], band)
    f = table[:, 2]
    lines = [
        f"nlc-antenna {__version__}",
        f"config_sha256 {cfg.digest()}",
        f"material {model.material.name}",
        f"frequency at first sweep point: {f[0] / 1e9:.4f} GHz (V = {table[0, 0]:.3g} V)",
        f"frequency at last sweep point: {f[-1] / 1e9:.4f} GHz (V = {table[-1, 0]:.3g} V)",
        f"calibration anchors: {frequency_from_eps(tm, cfg['antenna', 'eps_low']) / 1e9:.4f} GHz at eps={cfg['antenna', 'eps_low']}, "
        f"{frequency_from_eps(tm, cfg['antenna', 'eps_high']) / 1e9:.4f} GHz at eps={cfg['antenna', 'eps_high']}",
        f"maximum tunability: {(frequency_from_eps(tm, cfg['antenna', 'eps_low']) - frequency_from_eps(tm, cfg['antenna', 'eps_high'])) / 1e6:.1f} MHz",
    ]
    if v_lo is None or v_hi is None:
        lines.append(f"band {band[0] / 1e9:.3f}-{band[1] / 1e9:.3f} GHz not covered by the sweep")
    else:
        lines.append(f"band {band[0] / 1e9:.3f}-{band[1] / 1e9:.3f} GHz covered for V in [{v_lo:.4f}, {v_hi:.4f}] V")
    text = "\n".join(lines) + "\n"
    (out / "band_report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_optics(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    if not cfg["optics", "enabled"]:
        raise ConfigError("optics is disabled in the config")
    model: LdGModel = cfg.model()
    setup = cfg.optics_setup()
    lam = cfg["optics", "wavelength_nm"] * 1e-9
    voltage = cfg["optics", "voltage_V"]
    opts = cfg.solver_options()
    stack = cfg.cell()
    plate = stack.replace(electrode_pattern="plate")
    one = solver1d.relax(plate, model, voltage, **opts)
    opts_2d = {k: v for k, v in opts.items() if k != "perturbation"}
    state = solver2d.relax(stack, model, voltage, initial=_tile(one, stack), poisson_method=cfg["solver", "poisson_method"], **opts_2d)
    x, t, r = solver2d.transmittance_profile_2d(state, stack, model, lam, setup)
    _, tp, rp = solver2d.transmittance_profile_2d(one, plate, model, lam, setup)
    eps = solver2d.effective_permittivity(state, stack, model, cfg["sweep", "averaging"])
    note = [f"voltage_V={_num(voltage)} period_average_T={_num(t.mean())} plate_T={_num(tp[0])} eps_eff={_num(eps)}"]
    write_table(out / "transmittance.csv", cfg, ["x_m", "T", "R"], np.column_stack([x, t, r]), note)
    write_table(out / "director_2d.csv", cfg, ["x_m", "z_m", "nx", "ny", "nz", "S"], solver2d.director_table(state))
    # coherent spectrum of the plate cell, no band averaging
    eps_col, h = solver2d.column_layers(one.q, model, setup, plate, True, True)
    lams = np.linspace(lam - 5e-9, lam + 5e-9, 401)
    wave = PlaneWaveSpec(lam, 0.0, setup.ambient_index, setup.ambient_index)
    ts, rs = column_transmittance(eps_col[None], h[None], lams, wave)
    write_table(out / "spectrum.csv", cfg, ["wavelength_m", "T", "R"], np.column_stack([lams, ts[0], rs[0]]))
    print(f"T(x) in [{t.min():.4f}, {t.max():.4f}], period average {t.mean():.4f}; plate electrodes {tp[0]:.4f}")
    print(f"eps_eff ({cfg['sweep', 'averaging']}) {eps:.4f}")
    return EXIT_OK


def _tile(state1d, stack):
    from .cell import CellState

    q = np.tile(state1d.q[None], (stack.grid_nx, 1, 1))
    return CellState(2, q, np.zeros(0), state1d.applied_voltage, state1d.z)


def cmd_spiral(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    params = cfg.spiral_params()
    path = spiral_path(params, cfg["spiral", "samples_per_turn"])
    write_table(out / "spiral.csv", cfg, ["x_m", "y_m"], path)
    print(f"{path.shape[0]} points; current-sheet inductance estimate {spiral_inductance_estimate(params) * 1e9:.2f} nH (not calibrated)")
    return EXIT_OK


def cmd_s11(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    tm = cfg.tuning_model()
    eps = cfg["antenna", "s11_eps"]
    f0 = frequency_from_eps(tm, eps)
    span = cfg["antenna", "s11_span_MHz"] * 1e6
    freqs = np.linspace(f0 - span / 2, f0 + span / 2, cfg["antenna", "s11_points"])
    f, s = s11_curve(tm, eps, freqs)
    write_table(out / "s11.csv", cfg, ["freq_hz", "s11_db"], np.column_stack([f, s]), [f"eps={_num(eps)} q_factor={_num(tm.q_factor)}"])
    try:
        bw = f"{bandwidth_minus10db(f, s) / 1e6:.2f} MHz"
    except NoBandwidthError as exc:
        bw = f"n/a ({exc})"
    print(f"resonance {f0 / 1e9:.4f} GHz at eps={eps}; -10 dB bandwidth {bw}")
    return EXIT_OK


COMMANDS = {
    "materials": cmd_materials,
    "freedericksz": cmd_freedericksz,
    "tune": cmd_tune,
    "optics": cmd_optics,
    "spiral": cmd_spiral,
    "s11": cmd_s11,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlc-antenna", description="LC-tunable antenna substrate simulations")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI run configuration (defaults apply to missing keys)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="concurrent sweep points (disables warm start)")
        p.add_argument("--profiles", action="store_true", help="also write one director profile per voltage")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(args.config) if args.config else default()
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except InputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
