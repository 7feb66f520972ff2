"""Command-line front end.

Exit codes: 0 on success (whatever the verdict), 2 on configuration errors,
3 when no visibility can be estimated.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import config as cfg
from .coherent import (
    EstimationError,
    VisibilityEstimate,
    max_visibility,
    simulate_visibility_counts,
    visibility_surface,
)
from .discriminator import coherent_verdict, single_photon_verdict, verdict_record
from .fock import simulate_fock_experiment
from .polarization import (
    PolarizationState,
    RandomRotation,
    TemporalProfile,
    TimeEntanglement,
    apply_time_entanglement_channel,
    dop,
)
from .rng import RandomStreams

EXIT_CONFIG = 2
EXIT_ESTIMATION = 3

DOP_COLUMNS = ("tau", "tau_c", "dop")
SURFACE_COLUMNS = ("mu", "alpha0", "visibility", "sigma", "n_pairs")
FOCK_COLUMNS = (
    "n_pairs",
    "coincidences",
    "singles_1",
    "singles_2",
    "rate",
    "kind",
    "alpha0_estimate",
    "ci_low",
    "ci_high",
    "alpha0_upper_bound",
    "confidence",
)
DISCRIMINATE_COLUMNS = (
    "kind",
    "alpha0_estimate",
    "ci_low",
    "ci_high",
    "required_sigma",
    "visibility",
    "sigma",
    "epsilon",
    "v_max",
    "margin",
    "mu",
    "k_sigma",
    "n_pairs",
    "coincidences_channel",
    "coincidences_reference",
    "source",
)


def _seed(raw: cfg.RawConfig) -> RandomStreams:
    seed = raw.get("seed")
    if seed is None:
        raise cfg.ConfigError(f"{raw.source}: seed: Monte Carlo commands need --seed (or a seed key)")
    if not 0 <= seed < 1 << 64:
        raise raw.error(("seed",), "seed must be an unsigned 64-bit integer")
    return RandomStreams(seed)


def cmd_dop_sweep(raw: cfg.RawConfig, threads: int = 1) -> list[dict]:
    """Degree of polarization behind the time-entangling channel over a (tau, tau_c) grid."""
    taus = cfg.grid(raw, "sweep", "tau")
    tau_cs = cfg.grid(raw, "sweep", "tau_c")
    psi = PolarizationState.balanced(cfg.number(raw, "delta", default=0.0))
    rows = []
    for tau_c in tau_cs:
        for tau in taus:
            try:
                profile = TemporalProfile(tau_c=tau_c, tau=tau)
            except ValueError as exc:
                raise raw.error(("sweep",), str(exc)) from None
            rows.append({"tau": tau, "tau_c": tau_c, "dop": dop(apply_time_entanglement_channel(psi, profile))})
    return rows


def cmd_fock_run(raw: cfg.RawConfig, threads: int = 1) -> list[dict]:
    """Single-photon apparatus run followed by the single-photon verdict."""
    channel = cfg.channel_model(raw)
    det = cfg.detector_params(raw)
    n_pairs = cfg.count(raw, "n_pairs")
    confidence = cfg.number(raw, "confidence", default=0.95, unit_open=True)
    streams = _seed(raw)
    psi = PolarizationState.balanced(cfg.number(raw, "delta", default=0.0))
    try:
        counts = simulate_fock_experiment(channel, n_pairs, det, streams, psi, threads)
    except ValueError as exc:
        raise raw.error(("channel",), str(exc)) from None
    p_differ = channel.pairing.p_differ if isinstance(channel, RandomRotation) else 0.5
    verdict = single_photon_verdict(counts.coincidences, n_pairs, det, confidence, p_differ)
    record = {
        "n_pairs": n_pairs,
        "coincidences": counts.coincidences,
        "singles_1": counts.singles[0],
        "singles_2": counts.singles[1],
        "rate": counts.rate,
    }
    record.update({k: v for k, v in verdict_record(verdict).items() if k in FOCK_COLUMNS})
    return [record]


def cmd_visibility_sweep(raw: cfg.RawConfig, threads: int = 1) -> list[dict]:
    """Visibility surface over the (mu, alpha0) grid."""
    channel = cfg.channel_model(raw)
    if not isinstance(channel, (RandomRotation, TimeEntanglement)):
        raise raw.error(("channel", "kind"), "visibility sweeps need time_entanglement or random_rotation")
    kind = "random_rotation" if isinstance(channel, RandomRotation) else "time_entanglement"
    pairing = channel.pairing if isinstance(channel, RandomRotation) else None
    mus = cfg.grid(raw, "sweep", "mu")
    alphas = cfg.grid(raw, "sweep", "alpha0") if raw.get("sweep", "alpha0") is not None else [0.0]
    n_pairs = cfg.count(raw, "n_pairs")
    det = cfg.detector_params(raw)
    streams = _seed(raw)
    kwargs = {"pairing": pairing} if pairing else {}
    cells = visibility_surface(mus, alphas, kind, det, n_pairs, streams, threads=threads, **kwargs)
    return [
        {"mu": c.mu, "alpha0": c.alpha0, "visibility": c.visibility, "sigma": c.sigma, "n_pairs": n_pairs}
        for c in cells
    ]


def cmd_discriminate(raw: cfg.RawConfig, threads: int = 1) -> list[dict]:
    """Coherent-state discrimination from a simulated run or from recorded counts."""
    mu = cfg.number(raw, "mu", positive=True)
    det = cfg.detector_params(raw)
    k_sigma = cfg.number(raw, "k_sigma", default=2.0, positive=True)
    measured = raw.get("measurement")
    if measured is not None:
        est = VisibilityEstimate.from_counts(
            cfg.count(raw, "measurement", "n_pairs"),
            cfg.count(raw, "measurement", "coincidences_channel", minimum=0),
            cfg.count(raw, "measurement", "coincidences_reference", minimum=0),
        )
        source = "measured"
    else:
        channel = cfg.channel_model(raw)
        n_pairs = cfg.count(raw, "n_pairs")
        streams = _seed(raw)
        psi = PolarizationState.balanced(cfg.number(raw, "delta", default=0.0))
        try:
            run = simulate_visibility_counts(channel, mu, n_pairs, det, streams, psi, threads=threads)
        except ValueError as exc:
            raise raw.error(("channel",), str(exc)) from None
        est = run.estimate()
        source = "simulated"
    pairing = None
    if measured is None and isinstance(channel, RandomRotation):
        pairing = channel.pairing
    verdict = coherent_verdict(est, mu, det, k_sigma, **({"pairing": pairing} if pairing else {}))
    v_max = max_visibility(mu, det)
    record = {k: v for k, v in verdict_record(verdict).items() if k in DISCRIMINATE_COLUMNS}
    record.update(
        visibility=est.v,
        sigma=est.sigma,
        epsilon=k_sigma * est.sigma,
        v_max=v_max,
        margin=v_max - est.v,
        mu=mu,
        k_sigma=k_sigma,
        n_pairs=est.n_pairs,
        coincidences_channel=est.coincidences_channel,
        coincidences_reference=est.coincidences_reference,
        source=source,
    )
    return [record]


COMMANDS = {
    "dop-sweep": (cmd_dop_sweep, DOP_COLUMNS),
    "fock-run": (cmd_fock_run, FOCK_COLUMNS),
    "visibility-sweep": (cmd_visibility_sweep, SURFACE_COLUMNS),
    "discriminate": (cmd_discriminate, DISCRIMINATE_COLUMNS),
}


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def format_rows(rows: list[dict], columns, fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="raise")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _clean(row.get(k)) for k in columns})
    else:
        for row in rows:
            buf.write(json.dumps({k: _clean(row.get(k)) for k in columns}, allow_nan=False) + "\n")
    return buf.getvalue()


def read_table(text: str, fmt: str) -> list[dict]:
    """Parse an emitted table back into rows of floats/ints/strings (``None`` for empty cells)."""
    if fmt == "jsonl":
        return [json.loads(line) for line in text.splitlines() if line]
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append({k: _parse_cell(v) for k, v in row.items()})
    return rows


def _parse_cell(text: str):
    if text == "":
        return None
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homdepol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, _) in COMMANDS.items():
        p = sub.add_parser(name, help=func.__doc__.splitlines()[0])
        p.add_argument("--config", type=Path, help="YAML experiment file")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides the file)")
        p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
        p.add_argument("--out", type=Path, help="output file (default: stdout)")
        p.add_argument("--format", choices=cfg.FORMATS, help="output format (default: csv)")
        p.add_argument("--n-pairs", type=int, dest="n_pairs", help="override n_pairs")
        p.add_argument("--mu", type=float, help="override mu")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func, columns = COMMANDS[args.command]
    try:
        raw = cfg.load_config(args.config) if args.config else cfg.RawConfig(source="<flags>")
        for key in ("seed", "n_pairs", "mu"):
            value = getattr(args, key)
            if value is not None:
                raw.data[key] = value
                raw.lines[(key,)] = None
        if args.threads < 1:
            raise cfg.ConfigError("--threads must be at least 1")
        fmt = args.format or raw.get("output", "format", default="csv")
        if fmt not in cfg.FORMATS:
            raise raw.error(("output", "format"), f"unknown format {fmt!r}")
        out = args.out or raw.get("output", "path")
        rows = func(raw, args.threads)
    except cfg.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EstimationError as exc:
        print(f"estimation impossible: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    text = format_rows(rows, columns, fmt)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
