"""``multivenc`` command line.

Exit codes: 0 success, 2 configuration/input error, 3 irrational or
incommensurable moments, 4 rank deficiency.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, load_config, parse_config
from .csvio import RunManifest, fmt, read_measurements, write_key_values, write_lattice_exports
from .encoding import BUILTIN_PREPROCESSORS, BUILTIN_SCHEMES, build_difference_system, builtin_preprocessor, with_snr
from .errors import ConfigError, IrrationalEntryError, MultivencError, RankDeficiencyError
from .estimator import (
    JointEstimator,
    noise_covariance,
    noise_sensitivity,
    phase_differences,
    preprocessed_sensitivity,
)
from .lattice import (
    ambiguity_lattice,
    compute_search_box,
    enumerate_lattice_points,
    extract_basis,
    preprocessed_range_volume,
)
from .simulator import TrialConfig, run_campaign

EXIT_CONFIG = 2
EXIT_IRRATIONAL = 3
EXIT_RANK = 4


def _load(args) -> RunConfig:
    if getattr(args, "scheme", None) and getattr(args, "config", None):
        raise ConfigError("--config and --scheme are mutually exclusive")
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    elif getattr(args, "scheme", None):
        cfg = parse_config({"scheme": args.scheme})
    else:
        raise ConfigError("give --config PATH or --scheme NAME")
    return cfg


def _manifest(args, cfg: RunConfig, seed=None, **extra) -> RunManifest:
    params = dict(cfg.resolved)
    params.update({k: v for k, v in extra.items() if v is not None})
    return RunManifest(command=args.command, config_path=cfg.path, parameters=params,
                       version=__version__, seed=seed)


def _print_kv(out, items):
    width = max(len(k) for k, _ in items)
    for k, v in items:
        out.write(f"{k.ljust(width)}  {fmt(v)}\n")


def cmd_range(args, out=None) -> int:
    out = out or sys.stdout
    cfg = _load(args)
    d = build_difference_system(cfg.scheme)
    box = compute_search_box(d)
    points = enumerate_lattice_points(d, box)
    lat = extract_basis(points)
    manifest = _manifest(args, cfg)
    out.write(manifest.text())
    items = [(f"basis v{i + 1}", " ".join(fmt(x) for x in lat.basis[:, i])) for i in range(3)]
    items += [
        ("volume", lat.volume),
        ("volume_exact", lat.exact_volume if lat.exact_volume is not None else "n/a"),
        ("condition_number", lat.condition_number),
        ("search_box_half_extents", " ".join(fmt(x) for x in box.half_extents)),
        ("lattice_points", len(points)),
    ]
    _print_kv(out, items)
    export_dir = getattr(args, "export_dir", None)
    if export_dir:
        for p in write_lattice_exports(export_dir, points, lat, manifest):
            out.write(f"wrote {p}\n")
    return 0


def cmd_export(args, out=None) -> int:
    out = out or sys.stdout
    return cmd_range(args, out)


def cmd_compare(args, out=None) -> int:
    out = out or sys.stdout
    cfg = _load(args)
    scheme = cfg.scheme if args.snr is None else with_snr(cfg.scheme, args.snr)
    d = build_difference_system(scheme)
    if args.preprocessor:
        pre = builtin_preprocessor(args.preprocessor, d)
    elif cfg.preprocessor is not None:
        pre = cfg.preprocessor
    else:
        raise ConfigError("no preprocessor: pass --preprocessor or set it in the config")

    lat = ambiguity_lattice(d)
    rng_vol = preprocessed_range_volume(pre, d, samples=args.samples, seed=args.seed)
    items = []
    for model in ("first_order", "second_order"):
        nm = noise_covariance(scheme, model=model)
        eta = noise_sensitivity(d, nm)
        eta_p = preprocessed_sensitivity(pre, d, nm)
        items += [
            (f"eta[{model}]", eta),
            (f"eta_P[{model}]", eta_p),
            (f"eta_P/eta[{model}]", eta_p / eta),
            (f"degradation_percent[{model}]", 100 * (eta_p / eta - 1)),
        ]
    items += [
        ("joint_volume", lat.volume),
        ("preprocessed_volume", rng_vol.volume),
        ("preprocessed_volume_stderr", rng_vol.stderr),
        ("preprocessed_range_method", rng_vol.method),
        ("volume_ratio_joint_over_preprocessed", lat.volume / rng_vol.volume),
    ]
    if args.mc_trials:
        v = _parse_velocity(args.velocity) if args.velocity else (0.0, 0.0, 0.0)
        rep = run_campaign(TrialConfig(scheme, v, trials=args.mc_trials, seed=args.seed), preprocessor=pre)
        if rep.preprocessed_covariance is not None:
            items.append(("mc_eta_P/eta",
                          float(np.linalg.det(rep.preprocessed_covariance) / np.linalg.det(rep.empirical_covariance))))
    out.write(_manifest(args, cfg, seed=args.seed, preprocessor=pre.name, samples=args.samples,
                        snr=args.snr, mc_trials=args.mc_trials or None).text())
    _print_kv(out, items)
    return 0


def cmd_estimate(args, out=None) -> int:
    out = out or sys.stdout
    cfg = _load(args)
    d = build_difference_system(cfg.scheme)
    y = read_measurements(args.measurements, cfg.scheme.L)
    est = JointEstimator(d, noise_covariance(cfg.scheme, coils=y.shape[0]))
    e = est.estimate(phase_differences(y))
    items = [(f"v_hat_{c}", x) for c, x in zip("xyz", e.v_hat)]
    items += [(f"k_hat_{i}_{j}", int(k)) for (i, j), k in zip(d.pair_order, e.k_hat)]
    items.append(("cost", e.cost))
    items += [(f"cov_{r + 1}{c + 1}", e.covariance[r, c]) for r in range(3) for c in range(3)]
    manifest = _manifest(args, cfg, measurements=str(args.measurements), coils=y.shape[0])
    if args.output:
        write_key_values(args.output, items, manifest)
        out.write(f"wrote {args.output}\n")
    else:
        write_key_values(out, items, manifest)
    return 0


def _parse_velocity(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"--velocity expects x,y,z, got {text!r}") from None
    if len(parts) != 3:
        raise ConfigError(f"--velocity expects three components, got {text!r}")
    return parts


def cmd_simulate(args, out=None) -> int:
    out = out or sys.stdout
    cfg = _load(args)
    sim = cfg.simulation

    def pick(name, key, default):
        v = getattr(args, name)
        return v if v is not None else sim.get(key, default)

    snr = pick("snr", "snr", None)
    scheme = cfg.scheme if snr is None else with_snr(cfg.scheme, float(snr))
    vel = args.velocity if args.velocity is not None else sim.get("velocity", [0.0, 0.0, 0.0])
    v = _parse_velocity(vel) if isinstance(vel, str) else tuple(float(x) for x in vel)
    tc = TrialConfig(
        scheme=scheme,
        true_velocity=v,
        background_phase=float(sim.get("background_phase", 0.0)),
        coils=int(pick("coils", "coils", 1)),
        trials=int(pick("trials", "trials", 1000)),
        seed=int(pick("seed", "seed", 0)),
    )
    rep = run_campaign(tc)
    manifest = _manifest(args, cfg, seed=tc.seed, snr=snr, velocity=",".join(fmt(x) for x in v),
                         trials=tc.trials, coils=tc.coils, background_phase=tc.background_phase)
    rows = [("trials", rep.trials), ("wrap_errors", rep.wrap_errors), ("wrap_error_rate", rep.wrap_error_rate),
            ("det_ratio_empirical_over_predicted", rep.det_ratio), ("mean_cost", rep.mean_cost)]
    rows += [(f"bias_{c}", b) for c, b in zip("xyz", rep.bias)]
    rows += [(f"empirical_cov_{r + 1}{c + 1}", rep.empirical_covariance[r, c]) for r in range(3) for c in range(3)]
    rows += [(f"predicted_cov_{r + 1}{c + 1}", rep.predicted_covariance[r, c]) for r in range(3) for c in range(3)]
    if args.output:
        write_key_values(args.output, rows, manifest)
    out.write(manifest.text())
    out.write(
        f"{tc.trials} trials, SNR {fmt(max(scheme.magnitudes) / scheme.noise_std)}: "
        f"wrap-error rate {fmt(rep.wrap_error_rate)}, "
        f"det(empirical)/det(predicted) = {fmt(rep.det_ratio)}\n"
    )
    if not args.output:
        write_key_values(out, rows)
    else:
        out.write(f"wrote {args.output}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multivenc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_source(p):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--scheme", choices=sorted(BUILTIN_SCHEMES), help="built-in encoding")

    p = sub.add_parser("range", help="unambiguous velocity parallelepiped")
    add_source(p)
    p.add_argument("--export-dir", help="also write plotting CSVs here")
    p.set_defaults(func=cmd_range)

    p = sub.add_parser("export", help="write lattice_points/parallelepiped/basis CSVs")
    add_source(p)
    p.add_argument("--export-dir", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("compare", help="joint processing versus a pre-processor")
    add_source(p)
    p.add_argument("--preprocessor", choices=sorted(BUILTIN_PREPROCESSORS))
    p.add_argument("--snr", type=float, help="override noise level as max(a)/sigma")
    p.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo samples for slab volumes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-trials", type=int, default=0, help="also estimate eta_P/eta empirically")
    p.add_argument("--velocity", help="true velocity x,y,z for --mc-trials")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("estimate", help="joint estimate from a measurement CSV")
    add_source(p)
    p.add_argument("--measurements", required=True, help="CSV rows coil,point_index,re,im")
    p.add_argument("--output", help="CSV destination (default stdout)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="Monte Carlo campaign")
    add_source(p)
    p.add_argument("--snr", type=float)
    p.add_argument("--velocity", help="x,y,z")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--coils", type=int)
    p.add_argument("--output", help="CSV report destination")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IrrationalEntryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IRRATIONAL
    except RankDeficiencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANK
    except (ConfigError, MultivencError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
