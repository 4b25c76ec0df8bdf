"""Command-line front end.

Subcommands ``poles``, ``scan``, ``oracle2d`` and ``fit`` each write CSV
files, a JSON run manifest, a gnuplot script and PNG figures into ``--out``.
The primary CSV is echoed on stdout unless ``--quiet`` is given.

Exit codes: 0 success, 1 other toolkit error, 2 configuration or input
error, 3 no usable poles or no emission channel, 4 dimension cap exceeded,
5 fit did not converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .errors import (
    ConfigError,
    DarkCavityError,
    DegenerateWidths,
    DimensionCap,
    DomainError,
    FitDiverged,
    NoEmissionChannel,
    NoStablePoles,
    NoTransitionState,
)
from .feshbach2d import DIMENSION_CAP_2D, ProductBasisSpec, compare_adiabatic, solve_2d_resonances
from .polariton import (
    PolaritonSetup,
    epsilon_from_geometry,
    exceptional_point_alpha,
    gamma_min_closed_form,
    mirror_distance,
    scan_minimum,
    scan_rate,
)
from .potentials import fit_tabulated, read_tabulated_csv
from .resonances import PoleSet, classify_poles, find_resonances, transition_dipole

log = logging.getLogger("darkcavity")

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_NO_POLES, EXIT_CAP, EXIT_FIT = 0, 1, 2, 3, 4, 5


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, DomainError)):
        return EXIT_CONFIG
    if isinstance(exc, (NoStablePoles, NoEmissionChannel, NoTransitionState)):
        return EXIT_NO_POLES
    if isinstance(exc, DimensionCap):
        return EXIT_CAP
    if isinstance(exc, FitDiverged):
        return EXIT_FIT
    return EXIT_ERROR


# ---------------------------------------------------------------------------
# run bookkeeping


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    out_dir: Path
    config_name: str | None = None
    config_hash: str | None = None
    started: str = field(default_factory=_now)
    finished: str | None = None
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.files.append(name)
        return path

    def add_file(self, name: str) -> None:
        if (self.out_dir / name).is_file():
            self.files.append(name)

    def finish(self) -> Path:
        self.finished = _now()
        missing = [f for f in self.files if not (self.out_dir / f).is_file() or (self.out_dir / f).stat().st_size == 0]
        if missing:
            raise DarkCavityError(f"manifest lists missing or empty files: {missing}")
        doc = {
            "toolkit_version": __version__,
            "command": self.command,
            "config_name": self.config_name,
            "config_hash": self.config_hash,
            "started": self.started,
            "finished": self.finished,
            "files": sorted(self.files),
            "summary": self.summary,
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(doc, indent=2, default=str) + "\n")
        return path


def _wavefunction_csv(grid, pole) -> str:
    lines = ["x_bohr,re_psi,im_psi,abs2"]
    for x, v in zip(grid.points, pole.eigenvector):
        lines.append(f"{x:.10g},{v.real:.12e},{v.imag:.12e},{abs(v) ** 2:.12e}")
    return "\n".join(lines) + "\n"


def _potential_csv(channel, grid) -> tuple[np.ndarray, np.ndarray, str]:
    x = grid.points
    v = np.real(channel(x))
    body = "x_bohr,v_ad_hartree\n" + "".join(f"{a:.10g},{b:.12e}\n" for a, b in zip(x, v))
    return x, v, body


def _render(figures: bool, fn, *args) -> bool:
    if not figures:
        return False
    try:
        fn(*args)
    except ImportError:  # matplotlib missing: scripts and CSVs still stand
        log.warning("matplotlib is not available; skipping PNG output")
        return False
    return True


# ---------------------------------------------------------------------------
# pipeline steps


def compute_poles(cfg: ScenarioConfig, theta_override: float | None = None) -> tuple[PoleSet, bool]:
    """Stable poles, classified when the channel allows it.

    Returns ``(poles, classified)``; a channel without a transition state
    still yields its poles, just unclassified.
    """
    channel, grid = cfg.channel(), cfg.grid()
    center, span, n = cfg.scaling(theta_override)
    poles = find_resonances(channel, grid, center, span, n)
    try:
        return classify_poles(poles), True
    except (NoTransitionState, NoEmissionChannel) as exc:
        log.warning("poles left unclassified: %s", exc)
        return poles, False


def select_db(poles: PoleSet, selection: dict):
    """The DB pole coupled to the TS: chosen by node count or by index.

    Only DB poles below the TS can emit into the cavity; ``db_index`` counts
    them downward from the TS.
    """
    ts = poles.ts
    below = sorted((p for p in poles.by_class("DB") if p.energy < ts.energy), key=lambda p: -p.energy)
    if not below:
        raise NoEmissionChannel("no DB pole lies below the TS, so the cavity has nothing to bridge")
    if "db_nodes" in selection:
        for p in below:
            if p.node_count == selection["db_nodes"]:
                return p
        found = sorted({p.node_count for p in below})
        raise NoEmissionChannel(f"no DB pole with {selection['db_nodes']} nodes below the TS (found {found})")
    k = selection.get("db_index", 0)
    if k >= len(below):
        raise NoEmissionChannel(f"db_index {k} out of range: {len(below)} DB poles lie below the TS")
    return below[k]


def run_poles(cfg: ScenarioConfig, out: Path, theta_override=None, figures=True) -> tuple[RunManifest, str]:
    from . import plotting

    man = RunManifest("poles", out, cfg.name, cfg.digest)
    poles, classified = compute_poles(cfg, theta_override)
    grid, channel = poles.grid, poles.channel
    csv_text = poles.to_csv()
    man.write_text("poles.csv", csv_text)
    for i, p in enumerate(poles):
        man.write_text(f"wavefunctions/pole_{i:03d}.csv", _wavefunction_csv(grid, p))
    x, v, body = _potential_csv(channel, grid)
    man.write_text("potential.csv", body)
    man.write_text("poles.gp", plotting.poles_gnuplot("poles.csv", "potential.csv"))
    if _render(figures, plotting.render_poles, out / "poles.png", x, v, poles.poles):
        man.add_file("poles.png")
    if _render(figures, plotting.render_wavefunctions, out / "wavefunctions.png", x, poles.poles):
        man.add_file("wavefunctions.png")
    man.summary = {
        "n_poles": len(poles),
        "classified": classified,
        "theta": poles.theta_center,
        "thetas": list(poles.thetas),
        "classes": {c: len(poles.by_class(c)) for c in ("TS", "DB", "nonphysical", "bound")},
    }
    return man, csv_text


def build_setup(cfg: ScenarioConfig, poles: PoleSet):
    """PolaritonSetup from the TS and the selected DB, plus provenance."""
    if poles.ts is None:
        raise NoTransitionState("the scan needs a classified TS pole")
    ts, db = poles.ts, select_db(poles, cfg.selection)
    dipole = transition_dipole(ts, db, poles.channel, poles.grid)
    cav = cfg.cavity
    omega = ts.energy - db.energy
    length = mirror_distance(omega, cav.get("convention", "half_wavelength"))
    setup = PolaritonSetup.from_poles(
        ts, db, dipole,
        detuning_tol=cav.get("detuning_tol", 1e-3),
        mirror_distance=length,
        mirror_area=cav["mirror_area"],
        n_molecules=cav.get("n_molecules", 1),
    )
    meta = {
        "scenario": cfg.name,
        "config_hash": cfg.digest,
        "theta": repr(ts.theta_used),
        "grid": f"{poles.grid.x_min!r}:{poles.grid.x_max!r}:{poles.grid.n_points}",
        "TS_nodes": ts.node_count,
        "DB_nodes": db.node_count,
    }
    return setup, meta


def reference_geometry(cfg: ScenarioConfig) -> dict:
    """Mirror distance and field strength for a quoted cavity frequency."""
    cav = cfg.cavity
    if "reference_omega_cav" not in cav:
        return {}
    omega = cav["reference_omega_cav"]
    length = mirror_distance(omega, cav.get("convention", "half_wavelength"))
    eps = epsilon_from_geometry(omega, length, cav["mirror_area"], cav.get("n_molecules", 1))
    return {"reference_omega_cav": omega, "reference_L_bohr": length, "reference_epsilon_au": eps}


def run_scan(cfg: ScenarioConfig, out: Path, theta_override=None, figures=True) -> tuple[RunManifest, str]:
    from . import plotting

    if not cfg.cavity:
        raise ConfigError("scan needs a cavity section in the scenario")
    man = RunManifest("scan", out, cfg.name, cfg.digest)
    poles, classified = compute_poles(cfg, theta_override)
    if not classified:
        # re-raise the classification failure as the scan's verdict
        classify_poles(poles)
    setup, meta = build_setup(cfg, poles)
    ref = reference_geometry(cfg)
    meta.update({k: repr(v) for k, v in ref.items()})
    eps = cfg.epsilon_values(setup.omega_cav, setup.mirror_distance)
    scan = scan_rate(setup, eps, meta)
    csv_text = scan.to_csv()
    man.write_text("poles.csv", poles.to_csv())
    man.write_text("scan.csv", csv_text)
    man.write_text("scan.gp", plotting.scan_gnuplot("scan.csv"))
    if _render(figures, plotting.render_scan, out / "scan.png", scan):
        man.add_file("scan.png")

    eps_min, g_min = scan_minimum(scan)
    summary = {
        "E_TS": setup.e_ts, "Gamma_TS": setup.gamma_ts, "E_DB": setup.e_db, "Gamma_DB": setup.gamma_db,
        "omega_cav": setup.omega_cav, "L_bohr": setup.mirror_distance,
        "epsilon_geometry": epsilon_from_geometry(setup.omega_cav, setup.mirror_distance, setup.mirror_area, setup.n_molecules),
        "dipole": [setup.dipole.real, setup.dipole.imag],
        "max_enhancement": float(np.max(scan.enhancement())),
        "scan_min_epsilon": eps_min, "scan_min_gamma": g_min,
        **ref,
    }
    if setup.dipole.imag == 0:
        summary["alpha_ep"] = exceptional_point_alpha(setup.gamma_ts, setup.gamma_db, setup.dipole)
    try:
        gm = gamma_min_closed_form(setup)
        summary["gamma_min_closed_form"] = {
            "plus": [gm.plus.real, gm.plus.imag], "minus": [gm.minus.real, gm.minus.imag],
            "alpha": [gm.alpha.real, gm.alpha.imag], "complex_branch": gm.complex_branch,
        }
    except DegenerateWidths as exc:
        summary["gamma_min_closed_form"] = str(exc)
    man.summary = summary
    return man, csv_text


def run_oracle2d(cfg: ScenarioConfig, out: Path, theta_override=None, figures=True) -> tuple[RunManifest, str]:
    spec = cfg.document.get("oracle2d")
    if spec is None:
        raise ConfigError("oracle2d needs an oracle2d section in the scenario")
    man = RunManifest("oracle2d", out, cfg.name, cfg.digest)
    channel, grid = cfg.channel(), cfg.grid()
    from .potentials import RphSurface

    if channel.frequency is None or isinstance(channel.frequency, tuple):
        raise ConfigError("the 2D oracle needs exactly one perpendicular frequency profile")
    surface = RphSurface(channel.static_barrier, channel.frequency, channel.mu)
    cap = spec.get("cap", DIMENSION_CAP_2D)
    if "omega_ref" in spec:
        basis = ProductBasisSpec(grid, spec["n_y_basis"], spec["omega_ref"])
    else:
        basis = ProductBasisSpec.at_barrier_top(surface, grid, spec["n_y_basis"])
    if basis.dimension > cap:
        raise DimensionCap(f"2D dimension {basis.dimension} exceeds the cap {cap}")
    center, span, n = cfg.scaling(theta_override)
    poles_1d = find_resonances(surface.channel(0), grid, center, span, n)
    poles_2d = solve_2d_resonances(surface, basis, center, span, n, cap=cap)
    report = compare_adiabatic(poles_2d, poles_1d, spec.get("match_distance"))
    csv_text = report.to_csv()
    man.write_text("agreement.csv", csv_text)
    man.write_text("poles_1d.csv", poles_1d.to_csv())
    man.write_text("poles_2d.csv", poles_2d.to_csv())
    man.summary = {
        "dimension": basis.dimension, "omega_ref": basis.omega_ref, "n_pairs": len(report.pairs),
        "max_rel_energy": report.max_rel_energy, "max_rel_width": report.max_rel_width,
        "max_abs_error": report.max_abs_error,
        "unmatched_1d": len(report.unmatched_1d), "unmatched_2d": len(report.unmatched_2d),
    }
    return man, csv_text


def run_fit(table: Path, out: Path, n_terms: int, reference: float, tolerance, basis: str) -> tuple[RunManifest, str]:
    man = RunManifest("fit", out)
    if not Path(table).is_file():
        raise ConfigError(f"table not found: {table}")
    curve = read_tabulated_csv(table, reference)
    profile = fit_tabulated(curve, basis=basis, n_terms=n_terms, tolerance=tolerance)
    resid = profile(curve.x) - curve.values
    body = "x_bohr,value_hartree,fit_hartree,residual_hartree\n" + "".join(
        f"{x:.10g},{v:.12e},{f:.12e},{r:.3e}\n" for x, v, f, r in zip(curve.x, curve.values, profile(curve.x), resid)
    )
    man.write_text("fit_residuals.csv", body)
    params = profile.to_dict()
    man.write_text("fit.json", json.dumps(params, indent=2) + "\n")
    man.summary = {"table": str(table), "n_terms": n_terms, "max_residual": profile.max_residual}
    return man, body


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="darkcavity", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="scenario JSON file or shipped scenario name")
            p.add_argument("--theta-override", type=float, default=None, metavar="RAD",
                           help="replace the scenario's central scaling angle")
        p.add_argument("--out", type=Path, default=None, metavar="DIR", help="output directory")
        p.add_argument("--quiet", action="store_true", help="no CSV echo, warnings only")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    common(sub.add_parser("poles", help="stable complex poles, classified, with wavefunctions"))
    common(sub.add_parser("scan", help="polariton decay rate against field strength"))
    common(sub.add_parser("oracle2d", help="2D Feshbach poles against the adiabatic 1D poles"))
    fit = sub.add_parser("fit", help="fit a tabulated frequency profile to tanh plus Gaussians")
    fit.add_argument("table", type=Path, help="CSV with header x_bohr,value_hartree")
    fit.add_argument("--basis", default="tanh_plus_gaussians")
    fit.add_argument("--n-terms", type=int, default=1)
    fit.add_argument("--reference-frequency", type=float, default=0.0,
                     help="added to every tabulated value (Hartree)")
    fit.add_argument("--tolerance", type=float, default=None, help="max residual (Hartree)")
    common(fit, needs_config=False)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s: %(message)s")
    try:
        if args.command == "fit":
            out = args.out or Path("darkcavity_fit")
            man, text = run_fit(args.table, out, args.n_terms, args.reference_frequency, args.tolerance, args.basis)
        else:
            cfg = ScenarioConfig.load(args.config)
            default_out = cfg.document.get("output", {}).get("directory", f"darkcavity_{cfg.name}_{args.command}")
            out = args.out or Path(default_out)
            runner = {"poles": run_poles, "scan": run_scan, "oracle2d": run_oracle2d}[args.command]
            man, text = runner(cfg, out, args.theta_override, not args.no_figures)
        man.finish()
    except (DarkCavityError, ValueError) as exc:
        code = exit_code_for(exc)
        print(f"darkcavity {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    if not args.quiet:
        sys.stdout.write(text)
    log.info("wrote %d files to %s", len(man.files) + 1, out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
