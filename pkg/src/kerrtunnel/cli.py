"""Command-line driver: one subcommand per computation, CSV + JSON sidecar output.

Options can come from flags or from a flat ``key = value`` config file given
with ``--config``. Keys may sit in a ``[kerrtunnel]`` section (shared) or in
a section named after the command; flags always win. Exit status is 0 on
success, 1 for invalid input and 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError

from kerrtunnel import __version__
from kerrtunnel import classical, dynamics, phasespace, semiclassical, spectral
from kerrtunnel.hilbert import TRUNCATION_CAP, ModelParams, Parity, TruncationOverflow
from kerrtunnel.output import ArtifactWriter, husimi_bytes

logger = logging.getLogger("kerrtunnel")

OUTPUT_ENV = "KERRTUNNEL_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Opt:
    name: str
    kind: Callable
    default: Any = None
    required: bool = False
    help: str = ""
    check: Optional[Callable[[Any], Optional[str]]] = None


def _positive(v):
    return None if v > 0 else "must be > 0"


def _non_negative(v):
    return None if v >= 0 else "must be >= 0"


def _at_least(n):
    return lambda v: None if v >= n else f"must be >= {n}"


def _parse_bool(text):
    if isinstance(text, bool):
        return text
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


DELTA = Opt("delta", float, required=True, help="detuning delta/K")
EPS2 = Opt("eps2", float, required=True, help="squeezing drive eps2/K (> 0)", check=_positive)
N_BLOCK = Opt("n_block", int, None, help="Fock states per parity block (default: automatic)", check=_at_least(4))
SEED = Opt("seed", int, 0, help="Monte Carlo seed", check=_non_negative)
GRID = [
    Opt("delta_min", float, required=True, help="first delta of the sweep"),
    Opt("delta_max", float, required=True, help="last delta of the sweep"),
    Opt("delta_step", float, 0.05, help="sweep step", check=_positive),
]

COMMANDS: dict[str, list[Opt]] = {
    "spectrum": [DELTA, EPS2, Opt("levels", int, 200, help="levels per parity", check=_at_least(1)),
                 Opt("tail_tol", float, 1e-10, help="truncation tail tolerance", check=_positive), N_BLOCK],
    "dos": [DELTA, EPS2, Opt("emin", float, 0.0, help="window start (excitation energy)"),
            Opt("emax", float, required=True, help="window end (excitation energy)"),
            Opt("bin_width", float, None, help="histogram bin width (default: window/200)", check=_positive),
            Opt("n_block", int, 2000, help="Fock states per parity block", check=_at_least(4))],
    "sweep": [EPS2, *GRID, Opt("levels", int, 20, help="levels per parity", check=_at_least(2)),
              Opt("n_block", int, 200, help="Fock states per parity block", check=_at_least(4))],
    "crossings": [EPS2, *GRID, Opt("levels", int, 40, help="levels per parity", check=_at_least(2)),
                  Opt("n_block", int, 200, help="Fock states per parity block", check=_at_least(4)),
                  Opt("gap_tol", float, 1e-8, help="gap below which a crossing is real", check=_positive)],
    "husimi-eigen": [DELTA, EPS2, Opt("index", int, None, help="level index in the combined spectrum"),
                     Opt("count", int, 4, help="levels just above the separatrix energy when no index is given",
                         check=_at_least(1)),
                     Opt("resolution", int, 201, help="grid points per axis", check=_at_least(2)),
                     Opt("samples", int, 200_000, help="Monte Carlo samples for the region volumes",
                         check=_at_least(phasespace.MIN_SAMPLES)),
                     SEED, Opt("n_block", int, 800, help="Fock states per parity block", check=_at_least(4))],
    "pr": [DELTA, EPS2, Opt("emax", float, required=True, help="largest excitation energy"),
           Opt("n_block", int, 800, help="Fock states per parity block", check=_at_least(4))],
    "classical": [DELTA, EPS2, Opt("q0", float, None, help="trajectory start q"),
                  Opt("p0", float, None, help="trajectory start p"),
                  Opt("t_end", float, 10.0, help="trajectory length", check=_positive),
                  Opt("dt", float, 0.01, help="trajectory sampling step", check=_positive)],
    "ebk": [DELTA, EPS2, Opt("ordering", str, "normal", help="classical symbol: normal or weyl",
                              check=lambda v: None if v in ("normal", "weyl") else "must be normal or weyl")],
}
TUNNEL = [EPS2, Opt("delta", float, None, help="single delta (writes the full trace)"),
          Opt("delta_min", float, None, help="sweep start"), Opt("delta_max", float, None, help="sweep end"),
          Opt("delta_step", float, 1.0, help="sweep step", check=_positive),
          Opt("t0", float, 0.0, help="window start Kt"), Opt("t1", float, None, help="window end Kt"),
          Opt("time_points", int, 101, help="time samples in the window", check=_at_least(2)),
          Opt("samples", int, 200_000, help="Monte Carlo samples per time point",
              check=_at_least(phasespace.MIN_SAMPLES)),
          SEED, Opt("n_block", int, 800, help="Fock states per parity block", check=_at_least(4)),
          Opt("offset", float, dynamics.DEFAULT_OFFSET, help="energy offset of coherent centres (fraction of e_esqpt)",
              check=_positive),
          Opt("delta0", float, dynamics.DEFAULT_QUENCH_FROM, help="pre-quench delta")]
TUNNEL_KINDS = {"coherent-out": "coherent_out", "hyperbolic": "coherent_hyperbolic", "quench": "quench"}
TUNNEL_WINDOW = {"coherent_out": 10.0, "coherent_hyperbolic": 10.0, "quench": 20.0}


@dataclass
class RunConfig:
    command: str
    values: dict
    sources: dict
    overridden: list
    output_dir: Path
    scenario: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.values["delta"], self.values["eps2"])

    def resolved(self) -> dict:
        return {
            "command": self.command, "scenario": self.scenario, "values": self.values,
            "sources": self.sources, "flag_overrides_file": self.overridden,
            "output_dir": str(self.output_dir),
        }


def _options_for(command: str) -> list[Opt]:
    return TUNNEL if command == "tunnel" else COMMANDS[command]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kerrtunnel", description="Squeeze-driven Kerr oscillator toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(p, opts):
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--out", type=Path, help=f"output directory (default ${OUTPUT_ENV} or .)")
        p.add_argument("-v", "--verbose", action="store_true")
        for opt in opts:
            flag = "--" + opt.name.replace("_", "-")
            # parse as text; conversion and validation happen after merging with the file
            p.add_argument(flag, dest=opt.name, default=None, help=opt.help)

    for name, opts in COMMANDS.items():
        add(sub.add_parser(name, help=f"{name} computation"), opts)
    tunnel = sub.add_parser("tunnel", help="effective tunneling dynamics")
    kinds = tunnel.add_subparsers(dest="scenario", required=True)
    for kind in TUNNEL_KINDS:
        add(kinds.add_parser(kind), TUNNEL)
    return parser


def _read_config(path: Path, command: str) -> dict:
    if not path.is_file():
        raise ConfigError(f"config: file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        text = path.read_text()
        if not text.lstrip().startswith("["):
            text = "[kerrtunnel]\n" + text
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"config: cannot parse {path}: {exc}") from exc
    values = {}
    for section in ("kerrtunnel", command):
        if cp.has_section(section):
            for key, val in cp.items(section):
                values[key.replace("-", "_")] = val
    unknown = set(cp.sections()) - {"kerrtunnel", command}
    for section in unknown:
        if section not in COMMANDS and section != "tunnel":
            raise ConfigError(f"config: unknown section [{section}]")
    return values


def _convert(opt: Opt, raw) -> Any:
    if raw is None:
        return None
    try:
        value = _parse_bool(raw) if opt.kind is bool else opt.kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{opt.name}: expected {opt.kind.__name__}, got {raw!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"{opt.name}: must be finite, got {raw!r}")
    if opt.check is not None:
        problem = opt.check(value)
        if problem:
            raise ConfigError(f"{opt.name}: {problem} (got {raw!r})")
    return value


def parse_config(argv: Optional[list] = None) -> RunConfig:
    """Parse flags and the optional config file into a validated ``RunConfig``."""
    args = build_parser().parse_args(argv)
    command = args.command
    opts = _options_for(command)
    scenario = TUNNEL_KINDS[args.scenario] if command == "tunnel" else None
    file_values = _read_config(args.config, command) if args.config else {}
    known = {o.name for o in opts}
    for key in file_values:
        if key not in known:
            raise ConfigError(f"{key}: unknown key for command {command}")

    values, sources, overridden = {}, {}, []
    for opt in opts:
        flag_raw = getattr(args, opt.name)
        file_raw = file_values.get(opt.name)
        if flag_raw is not None:
            values[opt.name] = _convert(opt, flag_raw)
            sources[opt.name] = "flag"
            if file_raw is not None and _convert(opt, file_raw) != values[opt.name]:
                overridden.append(opt.name)
        elif file_raw is not None:
            values[opt.name] = _convert(opt, file_raw)
            sources[opt.name] = "file"
        else:
            if opt.required:
                raise ConfigError(f"{opt.name}: missing required field")
            values[opt.name] = opt.default
            sources[opt.name] = "default"

    if command == "tunnel":
        single = values["delta"] is not None
        ranged = values["delta_min"] is not None or values["delta_max"] is not None
        if single == ranged:
            raise ConfigError("delta: give either --delta or both --delta-min and --delta-max")
        if ranged and (values["delta_min"] is None or values["delta_max"] is None):
            raise ConfigError("delta_max: both --delta-min and --delta-max are required for a sweep")
        if values["t1"] is None:
            values["t1"] = TUNNEL_WINDOW[scenario]
            sources["t1"] = "default"
        if not values["t1"] > values["t0"]:
            raise ConfigError("t1: window end must exceed t0")
        if scenario == "coherent_hyperbolic" and not values["offset"] < 1:
            raise ConfigError("offset: must be < 1 for the hyperbolic scenario")
    if "delta_min" in values and command != "tunnel" and not values["delta_max"] > values["delta_min"]:
        raise ConfigError("delta_max: must exceed delta_min")
    if command == "dos" and not values["emax"] > values["emin"]:
        raise ConfigError("emax: must exceed emin")
    if command == "classical" and (values["q0"] is None) != (values["p0"] is None):
        raise ConfigError("p0: give both q0 and p0 for a trajectory")

    out = args.out or Path(os.environ.get(OUTPUT_ENV, "."))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return RunConfig(command, values, sources, overridden, out, scenario)


# ---------------------------------------------------------------------------
# commands


def _grid(values) -> np.ndarray:
    lo, hi, step = values["delta_min"], values["delta_max"], values["delta_step"]
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


def _converged_spectrum(params: ModelParams, levels: int, n_block: Optional[int], tail_tol: float):
    """Lowest ``levels`` per parity; grows the block until their tails pass ``tail_tol``."""
    if n_block is not None:
        spec = spectral.solve_spectrum(params, max(n_block, levels), count=levels)
        return spec, max(n_block, levels), "fixed"
    n = max(2 * levels, 32)
    while n <= TRUNCATION_CAP:
        spec = spectral.solve_spectrum(params, n, count=levels)
        if spec.max_tail_weight() < tail_tol:
            return spec, n, "automatic"
        n = int(math.ceil(n * 1.25))
    raise TruncationOverflow(f"truncation overflow: {levels} levels not converged below {TRUNCATION_CAP} states")


def run_spectrum(cfg: RunConfig, out: ArtifactWriter) -> None:
    v = cfg.values
    params = cfg.params
    spec, n_block, how = _converged_spectrum(params, v["levels"], v["n_block"], v["tail_tol"])
    rows = []
    for parity in Parity:
        blk = spec.block(parity)
        tails = blk.tail_weights()
        for k, e in enumerate(blk.energies):
            rows.append((parity.name.lower(), k, e, e - spec.ground_energy, tails[k]))
    rows.sort(key=lambda r: r[2])
    worst = max(r[4] for r in rows)
    out.csv(
        "spectrum.csv", ["parity", "k", "energy", "excitation", "tail_weight"], rows,
        [f"kerrtunnel {__version__} spectrum delta={params.delta!r} eps2={params.eps2!r}"],
        {"truncation": {"n_block": n_block, "mode": how},
         "tail_check": {"max_tail_weight": worst, "tolerance": v["tail_tol"]}},
    )


def run_dos(cfg: RunConfig, out: ArtifactWriter) -> None:
    v = cfg.values
    params = cfg.params
    lo, hi = v["emin"], v["emax"]
    width = v["bin_width"] or (hi - lo) / 200.0
    nbins = max(1, int(round((hi - lo) / width)))
    spec = spectral.solve_spectrum(params, v["n_block"])
    excitations, _ = spec.excitation_energies()
    tail = spec.max_tail_weight(hi)
    counts, edges = np.histogram(excitations, bins=nbins, range=(lo, hi))
    density = counts / (edges[1] - edges[0])
    e_min = classical.minimum_energy(params)
    singular = semiclassical.singular_energies(params)
    rows = []
    for i in range(nbins):
        center = 0.5 * (edges[i] + edges[i + 1])
        e_cl = e_min + center
        rho = (float("nan") if any(e == e_cl for e in singular)
               else semiclassical.semiclassical_dos(params, e_cl))
        rows.append((edges[i], edges[i + 1], int(counts[i]), density[i], rho))
    feats = spectral.locate_dos_features(excitations, (lo, hi), width)
    crit = classical.esqpt_energies(params)
    out.csv(
        "dos.csv", ["e_lo", "e_hi", "count", "quantum_density", "semiclassical_density"], rows,
        [f"kerrtunnel {__version__} dos delta={params.delta!r} eps2={params.eps2!r}",
         "densities in levels per unit excitation energy"],
        {"truncation": {"n_block": v["n_block"], "mode": "fixed"},
         "tail_check": {"max_tail_weight_in_window": tail},
         "features": {"peak": feats.peak, "step": feats.step, "jump": feats.jump},
         "critical_energies": {"e_esqpt": crit.e_esqpt, "e_step": crit.e_step}},
    )


def run_sweep(cfg: RunConfig, out: ArtifactWriter) -> None:
    v = cfg.values
    sweep = spectral.sweep_levels(v["eps2"], _grid(v), v["levels"], v["n_block"])
    rows = [(d, k, p.name.lower(), e) for d, k, p, e in sweep.rows()]
    out.csv("sweep.csv", ["delta", "index", "parity", "excitation"], rows,
            [f"kerrtunnel {__version__} sweep eps2={v['eps2']!r}"],
            {"truncation": {"n_block": v["n_block"], "mode": "fixed"}})


def run_crossings(cfg: RunConfig, out: ArtifactWriter) -> None:
    v = cfg.values
    sweep = spectral.sweep_levels(v["eps2"], _grid(v), v["levels"], v["n_block"])
    records = spectral.find_crossings(sweep, gap_tol=v["gap_tol"])
    rows = [(r.kind, r.delta, r.levels[0][0], r.levels[0][1].name.lower(), r.levels[1][0],
             r.levels[1][1].name.lower(), r.gap, r.energy) for r in records]
    predicted = semiclassical.predicted_crossings(v["eps2"], v["delta_min"], v["delta_max"])
    out.csv("crossings.csv", ["kind", "delta", "level_a", "parity_a", "level_b", "parity_b", "gap", "excitation"],
            rows, [f"kerrtunnel {__version__} crossings eps2={v['eps2']!r}"],
            {"truncation": {"n_block": v["n_block"], "mode": "fixed"}, "predicted_integer_deltas": predicted})


def run_husimi_eigen(cfg: RunConfig, out: ArtifactWriter) -> None:
    v = cfg.values
    params = cfg.params
    spec = spectral.solve_spectrum(params, v["n_block"])
    energies, parities = spec.levels()
    excitations = energies - spec.ground_energy
    order_in_block = {}
    labels = []
    for e, par in zip(energies, parities):
        k = order_in_block.get(par, 0)
        order_in_block[par] = k + 1
        labels.append((Parity(int(par)), k))
    if v["index"] is not None:
        if not 0 <= v["index"] < energies.size:
            raise ConfigError(f"index: must lie in [0, {energies.size - 1}]")
        chosen = [v["index"]]
    else:
        crit = classical.esqpt_energies(params)
        if crit.e_esqpt is None:
            raise ConfigError("index: required outside Case III")
        first = int(np.searchsorted(excitations, crit.e_esqpt))
        chosen = list(range(first, min(first + v["count"], energies.size)))
    radius_all = 0.0
    vol_rows = []
    for idx in chosen:
        parity, k = labels[idx]
        blk = spec.block(parity)
        state = blk.fock_vector(k, spec.n_fock)
        if blk.tail_weights()[k] > 1e-10:
            raise spectral.EigensolverError(f"level {idx} is not converged at n_block={v['n_block']}")
        radius = phasespace.containing_radius(state)
        radius_all = max(radius_all, radius)
        field_ = phasespace.husimi_grid(state, (-radius, radius, -radius, radius), v["resolution"])
        grid_rows = ((q, p, field_.values[i, j]) for i, p in enumerate(field_.p) for j, q in enumerate(field_.q))
        meta = {"level": idx, "parity": parity.name.lower(), "k": k, "excitation": excitations[idx],
                "truncation": {"n_block": v["n_block"], "mode": "fixed"}, "tail_check": {"tail": blk.tail_weights()[k]}}
        out.csv(f"husimi_{idx}.csv", ["q", "p", "Q"], grid_rows,
                [f"kerrtunnel {__version__} husimi level={idx} delta={params.delta!r} eps2={params.eps2!r}"], meta)
        out.binary(f"husimi_{idx}.bin", husimi_bytes(field_.q, field_.p, field_.values), meta)
        if classical.classify_regime(params) is classical.Regime.III:
            est = phasespace.estimate_volumes(state, params, v["samples"], v["seed"])
            for r in classical.Region:
                vol_rows.append((idx, parity.name.lower(), excitations[idx], r.label,
                                 est.volumes[int(r)], est.stderr[int(r)]))
    if vol_rows:
        out.csv("husimi_volumes.csv", ["level", "parity", "excitation", "region", "volume", "stderr"], vol_rows,
                [f"kerrtunnel {__version__} husimi volumes delta={params.delta!r} eps2={params.eps2!r}"],
                {"seed": v["seed"], "samples": v["samples"], "truncation": {"n_block": v["n_block"]}})


def run_pr(cfg: RunConfig, out: ArtifactWriter) -> None:
    v = cfg.values
    params = cfg.params
    spec = spectral.solve_spectrum(params, v["n_block"])
    tail = spec.max_tail_weight(v["emax"])
    rows = []
    for parity in Parity:
        blk = spec.block(parity)
        for k, e in enumerate(blk.energies):
            ex = e - spec.ground_energy
            if ex <= v["emax"]:
                rows.append((parity.name.lower(), k, ex, spectral.participation_ratio(blk.vectors[:, k])))
    rows.sort(key=lambda r: r[2])
    out.csv("pr.csv", ["parity", "k", "excitation", "participation_ratio"], rows,
            [f"kerrtunnel {__version__} participation ratio delta={params.delta!r} eps2={params.eps2!r}"],
            {"truncation": {"n_block": v["n_block"], "mode": "fixed"}, "tail_check": {"max_tail_weight": tail}})


def run_classical(cfg: RunConfig, out: ArtifactWriter) -> None:
    v = cfg.values
    params = cfg.params
    e_min = classical.minimum_energy(params)
    rows = [(sp.label, sp.location.q, sp.location.p, sp.energy, sp.energy - e_min, sp.stability.value)
            for sp in classical.stationary_points(params)]
    crit = classical.esqpt_energies(params)
    meta = {"regime": classical.classify_regime(params).value,
            "critical_energies": {"e_esqpt": crit.e_esqpt, "e_step": crit.e_step}}
    out.csv("stationary_points.csv", ["label", "q", "p", "energy", "excitation", "stability"], rows,
            [f"kerrtunnel {__version__} classical delta={params.delta!r} eps2={params.eps2!r}"], meta)
    if v["q0"] is not None:
        path = classical.integrate_trajectory(params, (v["q0"], v["p0"]), v["t_end"], v["dt"])
        times = v["dt"] * np.arange(path.shape[0])
        energy = classical.classical_energy(params, path[:, 0], path[:, 1])
        out.csv("trajectory.csv", ["t", "q", "p", "energy"],
                ((t, q, p, e) for t, (q, p), e in zip(times, path, energy)),
                [f"kerrtunnel {__version__} trajectory delta={params.delta!r} eps2={params.eps2!r}"], meta)


def run_ebk(cfg: RunConfig, out: ArtifactWriter) -> None:
    v = cfg.values
    params = cfg.params
    if classical.classify_regime(params) is not classical.Regime.III:
        raise ConfigError("delta: EBK levels need delta > 2 eps2")
    levels = semiclassical.ebk_spectrum(params, v["ordering"])
    e_min = classical.minimum_energy(params)
    rows = [(lv.branch.value, lv.n, lv.energy, lv.energy - e_min) for lv in levels]
    pairs = [(a.n, b.n, a.energy, b.energy) for a, b in semiclassical.crossing_pairs(params)]
    out.csv("ebk.csv", ["branch", "n", "energy", "excitation"], rows,
            [f"kerrtunnel {__version__} ebk delta={params.delta!r} eps2={params.eps2!r} ordering={v['ordering']}",
             "excitation is measured from the classical minimum"],
            {"maslov": {"mu": semiclassical.MASLOV_MU, "b": semiclassical.MASLOV_B},
             "integer_delta_pairs": pairs})


def run_tunnel(cfg: RunConfig, out: ArtifactWriter) -> None:
    v = cfg.values
    window = (v["t0"], v["t1"])
    deltas = [v["delta"]] if v["delta"] is not None else list(_grid(v))
    res = dynamics.tunneling_sweep(
        cfg.scenario, v["eps2"], deltas, window, v["samples"], v["seed"], v["n_block"],
        v["time_points"], v["offset"], v["delta0"], keep_traces=v["delta"] is not None,
    )
    meta = {"truncation": {"n_block": v["n_block"], "mode": "fixed"}, "sweep": res.metadata}
    stem = f"tunnel_{cfg.scenario}"
    out.csv(f"{stem}_mean.csv", ["delta", "region", "mean_T", "stderr"], res.rows(),
            [f"kerrtunnel {__version__} {cfg.scenario} eps2={v['eps2']!r} window={window!r}",
             dynamics.MEAN_FORMULA], meta)
    if res.traces:
        trace = res.traces[0]
        out.csv(f"{stem}_trace.csv", ["t", "region", "V", "V_stderr", "T", "T_stderr"], trace.rows(),
                [f"kerrtunnel {__version__} {cfg.scenario} delta={v['delta']!r} eps2={v['eps2']!r}"],
                dict(meta, trace=trace.metadata))


RUNNERS = {
    "spectrum": run_spectrum, "dos": run_dos, "sweep": run_sweep, "crossings": run_crossings,
    "husimi-eigen": run_husimi_eigen, "pr": run_pr, "classical": run_classical, "ebk": run_ebk,
    "tunnel": run_tunnel,
}
NUMERIC_ERRORS = (
    spectral.EigensolverError, TruncationOverflow, dynamics.SpectralCompletenessError,
    phasespace.DiskTooSmall, phasespace.TruncationError, LinAlgError, ArithmeticError, RuntimeError,
)


def run_scenario(cfg: RunConfig) -> int:
    base = {"tool": "kerrtunnel", "version": __version__, "config": cfg.resolved(),
            "seed": cfg.values.get("seed")}
    out = ArtifactWriter(cfg.output_dir, base)
    try:
        RUNNERS[cfg.command](cfg, out)
    except (ConfigError, dynamics.InitialStateError, classical.RegionError) as exc:
        out.discard()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NUMERIC_ERRORS as exc:
        out.discard()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BaseException:
        out.discard()
        raise
    for path in out.written:
        logger.info("wrote %s", path)
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INVALID if exc.code else EXIT_OK
    return run_scenario(cfg)


if __name__ == "__main__":
    sys.exit(main())
