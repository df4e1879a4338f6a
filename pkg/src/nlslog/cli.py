"""Command-line entry point: ``nlslog <subcommand> [flags]``.

Exit codes: 0 success, 1 numerical failure (diagnostic JSON on stderr),
2 usage error (unknown flag, invalid value).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import acceptance
from . import evolution as ev
from . import phase_plane as pp
from . import profile as pr
from . import spectral as spc
from .errors import StepError
from .graph import GraphDomain, VertexCondition
from .report import ReportBundle, csv_text, default_out_dir, dumps, emit, write_text

DEFAULT_H = 1e-3
LAPLACIAN_R = 40.0


@dataclass
class RunConfig:
    command: str = ""
    c: float = 0.0
    L: float = math.pi
    Z: float = 0.0
    grid_ring: int | None = None
    grid_tail: int | None = None
    R: float | None = None
    dt: float = 1e-3
    t_end: float = 10.0
    eta: float = 0.0
    n_trunc: int = 50
    seed: int = 0
    operator: str = "L1"
    k: int = 6
    eigvecs: int = 0
    r_from: float = 0.05
    r_to: float = math.e - 0.01
    points: int = 200
    only: list | None = None
    out: str | None = None
    format: str | None = None

    def to_json(self) -> str:
        return dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


class UsageError(ValueError):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlslog", description="Standing waves of the log-NLS on a tadpole graph.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, wave=True):
        sp.add_argument("--L", type=float, help="ring half-length (default pi)")
        if wave:
            sp.add_argument("--c", type=float, help="frequency (default 0)")
        sp.add_argument("--grid-ring", type=int, dest="grid_ring", help="intervals on the ring")
        sp.add_argument("--grid-tail", type=int, dest="grid_tail", help="intervals on the tail")
        sp.add_argument("--R", type=float, help="tail truncation length (default a + 8)")
        sp.add_argument("--out", help="output file (default: stdout, or $NLSLOG_OUT_DIR)")
        sp.add_argument("--format", choices=("json", "csv"))

    sp = sub.add_parser("profile", help="standing wave samples and functionals")
    common(sp)

    sp = sub.add_parser("period-scan", help="period function table")
    sp.add_argument("--from", type=float, dest="r_from")
    sp.add_argument("--to", type=float, dest="r_to")
    sp.add_argument("--points", type=int)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "csv"))

    sp = sub.add_parser("spectrum", help="lowest eigenvalues of L1, L2 or the vertex Laplacian")
    common(sp)
    sp.add_argument("--operator", choices=("L1", "L2", "laplacian"))
    sp.add_argument("--Z", type=float, help="delta strength for the Laplacian")
    sp.add_argument("--k", type=int, help="number of eigenvalues (<= 20)")
    sp.add_argument("--eigvecs", type=int, help="write this many eigenvector CSVs next to --out")

    for name, text in (("evolve", "time evolution from a (perturbed) standing wave"),
                       ("stability", "orbital stability experiment")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.add_argument("--config", help="JSON file {c, L, dt, t_end, eta, n_trunc, grid}")
        sp.add_argument("--dt", type=float)
        sp.add_argument("--t-end", type=float, dest="t_end")
        sp.add_argument("--eta", type=float)
        sp.add_argument("--n-trunc", type=int, dest="n_trunc")
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("verify-all", help="run the acceptance suite")
    sp.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    sp.add_argument("--out", help="directory for report.json and table.txt")
    return p


def _config_file(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    allowed = {"c", "L", "dt", "t_end", "eta", "n_trunc", "grid", "seed"}
    unknown = set(data) - allowed
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    grid = data.pop("grid", None)
    if isinstance(grid, dict):
        for key, target in (("n_ring", "grid_ring"), ("n_tail", "grid_tail"), ("R", "R")):
            if key in grid:
                data[target] = grid[key]
    elif grid is not None:
        raise UsageError("config 'grid' must be an object with n_ring / n_tail / R")
    return data


def build_config(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command)
    values = {}
    if getattr(ns, "config", None):
        values.update(_config_file(ns.config))
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is not None and f.name != "command":
            values[f.name] = v
    for k, v in values.items():
        setattr(cfg, k, v)
    return cfg


def domain_for(cfg: RunConfig, wave: bool = True) -> GraphDomain:
    if wave:
        R = cfg.R if cfg.R is not None else pp.shift_from_r0(pr.matched_r0(cfg.L)) + pr.DEFAULT_MARGIN
    else:
        R = cfg.R if cfg.R is not None else LAPLACIAN_R
    n_ring = cfg.grid_ring if cfg.grid_ring is not None else 2 * math.ceil(cfg.L / DEFAULT_H - 1e-9)
    n_tail = cfg.grid_tail if cfg.grid_tail is not None else math.ceil(R / DEFAULT_H - 1e-9)
    return GraphDomain(float(cfg.L), float(R), int(n_ring), int(n_tail))


def _output(cfg: RunConfig, default_name: str, text: str, stdout) -> Path | None:
    target = cfg.out
    if target is None:
        out_dir = default_out_dir()
        if out_dir is None:
            stdout.write(text)
            return None
        target = out_dir / default_name
    return write_text(target, text)


def _sibling(path: Path | None, suffix: str, cfg: RunConfig, default_name: str) -> Path | None:
    if path is not None:
        return path.with_name(path.stem + suffix)
    out_dir = default_out_dir()
    return None if out_dir is None else out_dir / default_name


def cmd_profile(cfg: RunConfig, stdout) -> int:
    d = domain_for(cfg)
    wave = pr.assemble_standing_wave(cfg.c, cfg.L, d)
    u = wave.function()
    fv = pr.functionals(u, cfg.c, d)
    side = {"c": cfg.c, "L": cfg.L, "r0": wave.r0, "a": wave.a,
            "mass": fv.mass, "energy": fv.energy, "action": fv.action}
    if cfg.format == "json":
        _output(cfg, "profile.json", dumps(side), stdout)
        return 0
    path = _output(cfg, "profile.csv", u.to_csv(d), stdout)
    sidecar = _sibling(path, ".json", cfg, "profile.json")
    if sidecar is not None:
        write_text(sidecar, dumps(side))
    return 0


def cmd_period_scan(cfg: RunConfig, stdout) -> int:
    if cfg.points < 2:
        raise UsageError("--points must be at least 2")
    rows = pp.period_scan(cfg.r_from, cfg.r_to, cfg.points)
    header = ("r0", "T", "Tprime", "r_plus", "E0")
    if cfg.format == "json":
        text = dumps([dict(zip(header, r)) for r in rows])
        _output(cfg, "period_scan.json", text, stdout)
    else:
        _output(cfg, "period_scan.csv", csv_text(header, rows), stdout)
    return 0


def cmd_spectrum(cfg: RunConfig, stdout) -> int:
    if cfg.operator == "laplacian":
        vc = VertexCondition() if cfg.Z == 0 else VertexCondition.delta(cfg.Z)
        d = domain_for(cfg, wave=False)
        rep = spc.eigen_lowest(spc.assemble("laplacian", vc, None, d), cfg.k)
        if cfg.Z > 0:
            rho = spc.transcendental_rho(cfg.Z, cfg.L)
            rep.diagnostics = {"rho": rho, "minus_rho_squared": -rho * rho,
                               "eigenfunction_cosine": spc.cosine(rep.eigenvectors[0],
                                                                  spc.laplacian_eigenfunction(cfg.Z, cfg.L, d), d)}
    else:
        if cfg.Z != 0:
            raise UsageError("standing waves exist only for Z = 0; drop --Z for L1/L2")
        d = domain_for(cfg)
        wave = pr.assemble_standing_wave(cfg.c, cfg.L, d)
        analyze = spc.analyze_L1 if cfg.operator == "L1" else spc.analyze_L2
        rep = analyze(wave, d, k=cfg.k)
        if cfg.operator == "L1":
            rep.diagnostics["split"] = spc.split_compare(wave, d)
    out = rep.summary()
    out.update({"operator": cfg.operator, "c": cfg.c, "L": cfg.L, "Z": cfg.Z,
                "grid": {"n_ring": d.n_ring, "n_tail": d.n_tail, "R": d.R}})
    path = _output(cfg, "spectrum.json", dumps(out), stdout)
    for j in range(min(cfg.eigvecs, len(rep.eigenvectors))):
        target = _sibling(path, f"_eigvec{j}.csv", cfg, f"spectrum_eigvec{j}.csv")
        if target is None:
            raise UsageError("--eigvecs needs --out or NLSLOG_OUT_DIR")
        write_text(target, rep.eigenvectors[j].to_csv(d))
    return 0


def _trajectory_csv(rec: ev.TrajectoryRecord) -> str:
    return csv_text(("t", "mass", "energy", "d"), rec.rows())


def _evolution_config(cfg: RunConfig) -> ev.EvolutionConfig:
    every = max(1, int(round(0.01 / cfg.dt)))
    return ev.EvolutionConfig(dt=cfg.dt, t_end=cfg.t_end, n_trunc=cfg.n_trunc, record_every=every)


def cmd_evolve(cfg: RunConfig, stdout) -> int:
    d = domain_for(cfg)
    wave = pr.assemble_standing_wave(cfg.c, cfg.L, d)
    u0 = wave.function()
    if cfg.eta:
        u0 = u0 + ev.perturbation(wave, cfg.seed).scale(cfg.eta)
    rec = ev.run(u0, _evolution_config(cfg), d, ref=wave)
    if cfg.format == "json":
        text = dumps({"t": rec.times, "mass": rec.mass_series, "energy": rec.energy_series,
                      "d": rec.orbital_distance_series, "error": rec.error})
        _output(cfg, "evolve.json", text, stdout)
    else:
        _output(cfg, "evolve.csv", _trajectory_csv(rec), stdout)
    if rec.error:
        raise StepError(rec.error, rec.error_diagnostics)
    return 0


def cmd_stability(cfg: RunConfig, stdout) -> int:
    d = domain_for(cfg)
    eta = cfg.eta if cfg.eta else 1e-2
    res = ev.stability_experiment(cfg.c, eta, _evolution_config(cfg), d, seed=cfg.seed, L=cfg.L)
    rec = res.record
    if cfg.format == "json":
        text = dumps({"c": res.c, "eta": res.eta, "seed": res.seed, "sup_distance": res.sup_distance,
                      "K": res.K, "t": rec.times, "d": rec.orbital_distance_series, "error": rec.error})
        _output(cfg, "stability.json", text, stdout)
    else:
        path = _output(cfg, "stability.csv", _trajectory_csv(rec), stdout)
        summary = _sibling(path, ".json", cfg, "stability.json")
        if summary is not None:
            write_text(summary, dumps({"c": res.c, "eta": res.eta, "seed": res.seed,
                                       "sup_distance": res.sup_distance, "K": res.K}))
    if rec.error:
        raise StepError(rec.error, rec.error_diagnostics)
    return 0


def cmd_verify_all(cfg: RunConfig, stdout) -> int:
    numbers = cfg.only or sorted(acceptance.CRITERIA)
    bad = [n for n in numbers if n not in acceptance.CRITERIA]
    if bad:
        raise UsageError(f"unknown criteria {bad}")
    results = acceptance.run_all(numbers, echo=lambda line: (stdout.write(line + "\n"), stdout.flush()))
    all_passed = all(r.passed for r in results)
    bundle = ReportBundle(
        data={"criteria": [r.as_dict() for r in results], "all_passed": all_passed},
        table=[r.line() for r in results],
    )
    out_dir = Path(cfg.out) if cfg.out else default_out_dir()
    if out_dir is not None:
        emit(bundle, out_dir)
    passed = sum(r.passed for r in results)
    stdout.write(f"{passed}/{len(results)} criteria passed\n")
    return 0 if all_passed else 1


COMMANDS = {
    "profile": cmd_profile,
    "period-scan": cmd_period_scan,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "stability": cmd_stability,
    "verify-all": cmd_verify_all,
}


def dispatch(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        cfg = build_config(ns)
        return COMMANDS[cfg.command](cfg, stdout)
    except ArithmeticError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc),
                "diagnostics": getattr(exc, "diagnostics", {})}
        stderr.write(dumps(diag))
        return 1
    except (ValueError, OSError) as exc:
        stderr.write(f"nlslog {ns.command}: error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
