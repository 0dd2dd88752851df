"""Command-line entry point for reproducible experiment runs.

Subcommands::

    gen       generate a detection or localization dataset
    detect    run a classical fault detector over a dataset or synthetic trials
    localize  fingerprint k-NN localization from a database dataset
    sweep     detection accuracy versus SNR
    split     split a dataset file into train/test files
    score     re-score a predictions file against its dataset

Exit codes: 0 success, 2 usage error, 3 data error.  Every run writes a
``<out>.run.json`` record with the full configuration, seeds, and output
checksums, sufficient to regenerate the outputs.  All randomness flows from
``--seed``; when omitted a seed is drawn from OS entropy and printed.
Worker count comes from ``--threads``, then the ``RISFAULTSIM_THREADS``
environment variable, then the CPU count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import channelgeom as cg
from . import dataset as ds
from . import estimators as est
from . import evaluation as ev
from . import signal as sig
from .errors import RisSimError, SolverError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    """Bad flag combination detected after argparse."""


def _parse_shape(text: str) -> tuple[int, int]:
    """'9x9' -> (9, 9); a bare integer N becomes an N x 1 line panel."""
    if "x" in text:
        a, b = text.lower().split("x", 1)
        return (int(a), int(b))
    return (int(text), 1)


def _parse_snr_list(text: str) -> list[float]:
    """Comma list '0,10,20' or inclusive range 'start:stop:step'."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad SNR range {text!r}, expected start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise UsageError(f"bad SNR range {text!r}: need step > 0 and stop >= start")
        points = []
        v = start
        while v <= stop + 1e-9:
            points.append(round(v, 9))
            v += step
        return points
    try:
        return [float(p) for p in text.split(",") if p != ""]
    except ValueError as e:
        raise UsageError(f"bad SNR list {text!r}") from e


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = int.from_bytes(os.urandom(8), "little") >> 1
    print(f"seed drawn from entropy: {seed}")
    return seed


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("RISFAULTSIM_THREADS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def _file_checksum(path: Path) -> str:
    h = hashlib.blake2b(digest_size=8)
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_run_record(out_prefix: str, args, seed: int | None, outputs: list[Path]):
    record = {
        "tool_version": __version__,
        "command": vars(args).copy(),
        "seed": seed,
        "outputs": {str(p): _file_checksum(p) for p in outputs},
    }
    record["command"].pop("func", None)
    path = Path(str(out_prefix) + ".run.json")
    path.write_text(json.dumps(record, indent=2, default=str) + "\n")
    return path


# --- gen ---------------------------------------------------------------


def cmd_gen(args) -> int:
    seed = _resolve_seed(args)
    threads = _resolve_threads(args)
    overrides = dict(
        split_ratio=args.split_ratio,
        max_faulty=args.max_faulty,
        snr_db_choices=tuple(_parse_snr_list(args.snr)),
        path_count_mu_ris=args.paths[0],
        path_count_ris_bs=args.paths[1],
        gain_scale=args.gain_scale,
        carrier_hz=args.carrier,
        sa_count=args.sa,
        anchor_gain=args.anchor_gain,
        anchor_ref_distance=args.anchor_ref_distance,
    )
    lam = cg.wavelength_of(args.carrier)
    overrides["bs_shape"] = _parse_shape(args.bs)
    overrides["ris_shape"] = _parse_shape(args.ris)
    overrides["bs_spacing"] = lam / 2.0
    overrides["ris_spacing"] = lam / 2.0
    if args.kind == "detect":
        if args.fixed_ris_bs_link:
            raise UsageError("--fixed-ris-bs-link applies to localization datasets only")
        overrides["redraw_channels"] = not args.fixed_channel
        overrides["isolation_mode"] = args.isolation
        overrides["channel_seed"] = args.channel_seed
        manifest = ds.default_detection_manifest(args.count, seed, **overrides)
    else:
        if args.fixed_channel or args.isolation:
            raise UsageError("--fixed-channel/--isolation apply to detection datasets only")
        overrides["fixed_ris_bs_link"] = args.fixed_ris_bs_link
        overrides["channel_seed"] = args.channel_seed
        if args.grid:
            x0, y0, side, heights = args.grid.split(",", 3)
            overrides["grid"] = ds.GridSpec(
                x0=float(x0),
                y0=float(y0),
                side=float(side),
                heights=tuple(float(h) for h in heights.split(":")),
            )
        manifest = ds.default_localization_manifest(args.count, seed, **overrides)

    out = Path(args.out if args.out.endswith(".bin") else args.out + ".bin")
    checksum = ds.write_dataset(out, manifest, ds.generate_samples(manifest, threads=threads))
    print(f"wrote {out} ({manifest.sample_count} {manifest.kind} samples)")
    print(f"manifest: {ds.manifest_path_for(out)}")
    print(f"dataset checksum: {checksum}")
    _write_run_record(str(out), args, seed, [out, ds.manifest_path_for(out)])
    return EXIT_OK


# --- detect ------------------------------------------------------------


def _detect_on_dataset(args) -> ev.DetectionReport:
    manifest, samples = ds.read_dataset(args.dataset)
    if manifest.kind != ds.KIND_DETECTION:
        raise UsageError("detect needs a detection dataset")
    if args.alg == "exhaustive" and manifest.n_elements > est.MAX_EXHAUSTIVE_N:
        raise UsageError(
            f"exhaustive detection refused for N={manifest.n_elements} elements"
        )
    phases = np.ones(manifest.n_elements, dtype=np.complex128)
    pilot = sig.Pilot()
    estimates, truths = [], []
    for i, s in enumerate(samples):
        g_ur, h_rb = ds.channels_for_sample(manifest, i)
        a = sig.effective_bs_matrix(h_rb, g_ur, pilot)
        y = s.bs_signal.astype(np.complex128)
        if args.alg == "greedy":
            tol = est.default_greedy_tol(y, s.snr_db)
            r = est.detect_faults_greedy(y, a, phases, manifest.max_faulty, tol)
        else:
            r = est.detect_faults_exhaustive(y, a, phases)
        estimates.append(r.estimated_statuses)
        truths.append(s.element_statuses)
    return ev.detection_accuracy(estimates, truths)


def _detect_synthetic(args, seed: int) -> ev.DetectionReport:
    config = ev.SweepConfig(
        bs_shape=_parse_shape(args.m),
        ris_shape=_parse_shape(args.n),
        max_faulty=args.max_faulty,
    )
    points = ev.snr_sweep(config, [args.snr], args.alg, args.trials, seed)
    return points[0][1]


def cmd_detect(args) -> int:
    if (args.dataset is None) == (args.n is None):
        raise UsageError("give exactly one of --dataset or --n (synthetic mode)")
    seed = _resolve_seed(args) if args.dataset is None else args.seed
    if args.dataset is not None:
        report = _detect_on_dataset(args)
    else:
        report = _detect_synthetic(args, seed)
    out_json = ev.emit_results(report, args.out + ".json", "json")
    out_csv = ev.emit_results(report, args.out + ".csv", "csv")
    print(
        f"scenario accuracy {report.scenario_accuracy:.4f}, "
        f"elementwise {report.elementwise_accuracy:.4f} over {report.trials} trials"
    )
    _write_run_record(args.out, args, seed, [out_json, out_csv])
    return EXIT_OK


# --- localize ----------------------------------------------------------


def cmd_localize(args) -> int:
    db_manifest, db_samples = ds.read_dataset(args.db)
    q_manifest, q_samples = ds.read_dataset(args.query)
    if db_manifest.kind != ds.KIND_LOCALIZATION or q_manifest.kind != ds.KIND_LOCALIZATION:
        raise UsageError("localize needs localization datasets")
    if args.k > len(db_samples):
        raise UsageError(f"k={args.k} exceeds database size {len(db_samples)}")
    db = est.build_fingerprint_db(db_samples, args.fingerprint)
    estimates, truths = [], []
    for s in q_samples:
        query = s.bs_signal if args.fingerprint == "bs" else s.ris_signal_complete
        r = est.fingerprint_localize_nn(db, query.astype(np.complex128), args.k)
        estimates.append(r.estimate)
        truths.append(s.mu_position)
    report = ev.LocalizationReport(nmse=est.nmse(estimates, truths), trials=len(truths))
    out_json = ev.emit_results(report, args.out + ".json", "json")
    out_csv = ev.emit_results(report, args.out + ".csv", "csv")
    print(f"nmse {report.nmse:.6f} over {report.trials} queries ({args.fingerprint} fingerprints)")
    _write_run_record(args.out, args, None, [out_json, out_csv])
    return EXIT_OK


# --- sweep -------------------------------------------------------------


def cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    points = _parse_snr_list(args.snr)
    config = ev.SweepConfig(
        bs_shape=_parse_shape(args.m),
        ris_shape=_parse_shape(args.n),
        max_faulty=args.max_faulty,
    )
    sweep = ev.snr_sweep(config, points, args.alg, args.trials, seed)
    out_csv = ev.emit_results(sweep, args.out + ".csv", "csv")
    out_json = ev.emit_results(sweep, args.out + ".json", "json")
    for snr, rep in sweep:
        print(f"snr {snr:6.1f} dB: scenario {rep.scenario_accuracy:.4f}")
    _write_run_record(args.out, args, seed, [out_csv, out_json])
    return EXIT_OK


# --- split -------------------------------------------------------------


def cmd_split(args) -> int:
    manifest, samples = ds.read_dataset(args.dataset)
    ratio = args.ratio if args.ratio is not None else manifest.split_ratio
    train, test = ds.split(samples, ratio, manifest.master_seed)
    outputs = []
    for part, out in ((train, args.out_train), (test, args.out_test)):
        out = Path(out if out.endswith(".bin") else out + ".bin")
        d = manifest.to_json_dict()
        d["sample_count"] = len(part)
        sub_manifest = ds.DatasetManifest.from_json_dict(d)
        checksum = ds.write_dataset(out, sub_manifest, part)
        print(f"wrote {out}: {len(part)} samples, checksum {checksum}")
        outputs += [out, ds.manifest_path_for(out)]
    _write_run_record(args.out_train, args, None, outputs)
    return EXIT_OK


# --- score -------------------------------------------------------------


def cmd_score(args) -> int:
    report = ev.import_neural_results(args.predictions, args.dataset)
    out_json = ev.emit_results(report, args.out + ".json", "json")
    if isinstance(report, ev.DetectionReport):
        print(
            f"scenario accuracy {report.scenario_accuracy:.4f}, "
            f"elementwise {report.elementwise_accuracy:.4f} over {report.trials} records"
        )
    else:
        print(f"nmse {report.nmse:.6f} over {report.trials} records")
    _write_run_record(args.out, args, None, [out_json])
    return EXIT_OK


# --- parser ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risfaultsim", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a dataset")
    g.add_argument("kind", choices=["detect", "loc"])
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--max-faulty", type=int, default=15)
    g.add_argument("--snr", default="30", help="per-sample SNR choices, comma list or range")
    g.add_argument("--ris", default="9x9", help="panel shape, e.g. 9x9")
    g.add_argument("--bs", default="4x4", help="receiver shape, e.g. 4x4")
    g.add_argument("--carrier", type=float, default=90e9)
    g.add_argument("--sa", type=int, default=9, help="sub-array count")
    g.add_argument("--paths", type=int, nargs=2, default=[10, 10], metavar=("P", "J"))
    g.add_argument("--gain-scale", type=float, default=1.0)
    g.add_argument(
        "--anchor-gain",
        choices=["random", "fixed", "geometric"],
        default="random",
        help="gain of the geometric first path: a random complex draw, the "
        "fixed value gain_scale*sqrt(10), or that value with free-space-style "
        "distance decay",
    )
    g.add_argument(
        "--anchor-ref-distance",
        type=float,
        default=1.0,
        help="reference distance in meters for geometric anchor-gain decay",
    )
    g.add_argument("--split-ratio", type=float, default=0.8)
    g.add_argument("--fixed-channel", action="store_true", help="one shared channel draw")
    g.add_argument(
        "--channel-seed",
        type=int,
        default=None,
        help="seed of the shared channel draw (fixed-channel mode); lets paired "
        "datasets probe the same physical channel",
    )
    g.add_argument("--isolation", action="store_true", help="single-SA probing records")
    g.add_argument(
        "--fixed-ris-bs-link",
        action="store_true",
        help="hold the panel->receiver link fixed across localization samples "
        "(static endpoints); the user-side link still varies with position",
    )
    g.add_argument("--grid", default=None, help="x0,y0,side,h1:h2:... (loc only)")
    g.add_argument("--threads", type=int, default=None)
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("detect", help="classical fault detection")
    d.add_argument("--alg", choices=["greedy", "exhaustive"], required=True)
    d.add_argument("--dataset", default=None)
    d.add_argument("--n", default=None, help="panel shape for synthetic mode")
    d.add_argument("--m", default="4x4", help="receiver shape for synthetic mode")
    d.add_argument("--trials", type=int, default=100)
    d.add_argument("--snr", type=float, default=30.0)
    d.add_argument("--max-faulty", type=int, default=2)
    d.add_argument("--seed", type=int, default=None)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_detect)

    l = sub.add_parser("localize", help="fingerprint k-NN localization")
    l.add_argument("--db", required=True)
    l.add_argument("--query", required=True)
    l.add_argument("--k", type=int, default=1)
    l.add_argument("--fingerprint", choices=["ris", "bs"], required=True)
    l.add_argument("--out", required=True)
    l.set_defaults(func=cmd_localize)

    s = sub.add_parser("sweep", help="detection accuracy vs SNR")
    s.add_argument("--snr", required=True, help="comma list or start:stop:step")
    s.add_argument("--n", required=True)
    s.add_argument("--m", default="4x4")
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--max-faulty", type=int, default=2)
    s.add_argument("--alg", choices=["greedy", "exhaustive"], default="greedy")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("split", help="split a dataset into train/test files")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--out-train", required=True)
    sp.add_argument("--out-test", required=True)
    sp.add_argument("--ratio", type=float, default=None)
    sp.set_defaults(func=cmd_split)

    sc = sub.add_parser("score", help="re-score a predictions file")
    sc.add_argument("--predictions", required=True)
    sc.add_argument("--dataset", required=True)
    sc.add_argument("--out", required=True)
    sc.set_defaults(func=cmd_score)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, SolverError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (RisSimError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
