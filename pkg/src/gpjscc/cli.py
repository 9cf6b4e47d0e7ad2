"""Command-line front end.

Exit codes: 0 success, 1 internal error, 2 configuration or parse error,
3 no result in range (no threshold found, search exhausted).
"""
from __future__ import annotations

import hashlib
import json
import math
import sys
import time
from dataclasses import fields, replace
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import NoThresholdError, ParseError, SearchExhaustedError, UnencodableError
from .protomatrix import Protomatrix, format_protomatrix, load_protomatrix

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_NO_RESULT = 0, 1, 2, 3

PROFILES = {"desk": 400, "full": None}


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def _manifest(command: str, seed: int | None, code_files=(), config=None, t0=None) -> dict:
    return {
        "command": command,
        "config_digest": _digest(json.dumps(config, sort_keys=True, default=str).encode()),
        "code_digests": {str(p): _digest(Path(p).read_bytes()) for p in code_files},
        "seed": seed,
        "tool_version": __version__,
        "wall_clock_s": None if t0 is None else round(time.perf_counter() - t0, 3),
    }


def _write_outputs(out: str | None, text: str, manifest: dict) -> None:
    if out is None:
        return
    p = Path(out)
    p.write_text(text)
    manifest = {**manifest, "output": p.name}
    Path(str(p) + ".manifest.json").write_text(json.dumps(manifest, indent=2))


def _load_code(path: str) -> Protomatrix:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"code file not found: {path}")
    return load_protomatrix(p)


def _load_json(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path} must hold a JSON object")
    return data


def _threshold_cfg(data: dict, source: bool):
    from .exit.threshold import ThresholdConfig, channel_config, source_config

    known = {f.name for f in fields(ThresholdConfig)}
    bad = set(data) - known
    if bad:
        raise ParseError(f"unknown threshold config keys: {sorted(bad)}")
    try:
        return source_config(**data) if source else channel_config(**data)
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from exc


def _check_p1(p1: float) -> None:
    if not (0.0 < p1 < 0.5):
        raise ParseError("p1 must lie in (0, 0.5)")


@click.group()
@click.version_option(__version__)
def cli() -> None:
    """Threshold analysis, lifting, simulation and search for JSCC protographs."""


@cli.command("channel-threshold")
@click.option("--code", "code", required=True, help="Protomatrix file.")
@click.option("--p1", type=float, required=True, help="Source probability of a one.")
@click.option("--config", "config", default=None, help="JSON threshold configuration.")
@click.option("--method", type=click.Choice(["linear", "bisect"]), default=None)
@click.option("--out", default=None, help="Write the JSON record here.")
def channel_threshold_cmd(code, p1, config, method, out):
    """Lowest converging Es/N0 (dB)."""
    from .exit.threshold import channel_threshold

    t0 = time.perf_counter()
    _check_p1(p1)
    b = _load_code(code)
    data = _load_json(config)
    cfg = _threshold_cfg(data, source=False)
    if method:
        cfg = replace(cfg, method=method)
    res = channel_threshold(b, p1, cfg)
    rec = res.to_record(b.name or Path(code).stem, "p1", p1)
    click.echo(f"{res.value:.3f}")
    _write_outputs(out, json.dumps(rec) + "\n", _manifest("channel-threshold", None, [code], data, t0))


@cli.command("source-threshold")
@click.option("--code", "code", required=True, help="Protomatrix file.")
@click.option("--config", "config", default=None, help="JSON threshold configuration.")
@click.option("--method", type=click.Choice(["linear", "bisect"]), default=None)
@click.option("--out", default=None, help="Write the JSON record here.")
def source_threshold_cmd(code, config, method, out):
    """Largest converging p1 of the untransmitted block."""
    from .exit.threshold import source_threshold

    t0 = time.perf_counter()
    b = _load_code(code)
    data = _load_json(config)
    cfg = _threshold_cfg(data, source=True)
    if method:
        cfg = replace(cfg, method=method)
    res = source_threshold(b, cfg=cfg)
    rec = res.to_record(b.name or Path(code).stem, "es_n0_db", None)
    click.echo(f"{res.value:.3f}")
    _write_outputs(out, json.dumps(rec) + "\n", _manifest("source-threshold", None, [code], data, t0))


@cli.command("chart")
@click.option("--code", "code", required=True, help="Protomatrix file.")
@click.option("--p1", "p1s", type=float, multiple=True, help="Repeat for several curves.")
@click.option("--points", type=int, default=101, help="Grid points on [0, 1].")
@click.option("--out", default=None, help="CSV path (stdout when omitted).")
def chart_cmd(code, p1s, points, out):
    """EXIT-chart curves of the untransmitted block as CSV."""
    from .exit.chart import export_exit_chart
    from .protomatrix import split_sub

    t0 = time.perf_counter()
    for p in p1s:
        _check_p1(p)
    b = _load_code(code)
    grid = np.linspace(0.0, 1.0, points)
    text = export_exit_chart(split_sub(b).b_p, b.n_r, p1s, grid)
    if out is None:
        click.echo(text, nl=False)
    _write_outputs(out, text, _manifest("chart", None, [code], {"p1": p1s, "points": points}, t0))


def _profile_z(b: Protomatrix, profile: str) -> int:
    if profile == "desk":
        return PROFILES["desk"]
    return {2: 6400, 3: 4288}.get(b.n_r, math.ceil(12800 / b.n_r))


@cli.command("lift")
@click.option("--code", "code", required=True)
@click.option("--z", type=int, default=None, help="Lifting factor (default from profile).")
@click.option("--profile", type=click.Choice(["desk", "full"]), default="desk")
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, help="Output stem for .alist and .json.")
def lift_cmd(code, z, profile, seed, out):
    """PEG-lift a protomatrix."""
    from .lifting import peg_lift, save_lifted

    b = _load_code(code)
    z = z or _profile_z(b, profile)
    lifted = peg_lift(b, z, seed)
    a, j = save_lifted(lifted, out)
    click.echo(f"{a} {j} girth={lifted.girth}")


_SIM_KEYS = {"z", "lift_seed", "strict"}


@cli.command("simulate")
@click.option("--code", "code", required=True)
@click.option("--config", "config", default=None, help="JSON simulation configuration.")
@click.option("--p1", type=float, default=None)
@click.option("--es-n0", "es_n0", type=float, multiple=True, help="Repeat for a sweep.")
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--profile", type=click.Choice(["desk", "full"]), default="desk")
@click.option("--checkpoint", default=None, help="JSON checkpoint for resuming.")
@click.option("--out", default=None, help="CSV path (stdout when omitted).")
def simulate_cmd(code, config, p1, es_n0, seed, workers, profile, checkpoint, out):
    """Monte Carlo SSER/TBER/FER sweep."""
    from .codec import build_encoder
    from .lifting import peg_lift
    from .sim import SimConfig, run_sweep

    t0 = time.perf_counter()
    b = _load_code(code)
    data = _load_json(config)
    sim_keys = {f.name for f in fields(SimConfig)}
    bad = set(data) - sim_keys - _SIM_KEYS
    if bad:
        raise ParseError(f"unknown simulation config keys: {sorted(bad)}")
    kw = {k: v for k, v in data.items() if k in sim_keys}
    if p1 is not None:
        kw["p1"] = p1
    if es_n0:
        kw["es_n0_db"] = es_n0
    if seed is not None:
        kw["seed"] = seed
    if workers is not None:
        kw["workers"] = workers
    try:
        cfg = SimConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid simulation config: {exc}") from exc
    _check_p1(cfg.p1)
    z = int(data.get("z") or _profile_z(b, profile))
    lifted = peg_lift(b, z, int(data.get("lift_seed", cfg.seed)), girth=False)
    enc = build_encoder(lifted, strict=bool(data.get("strict", False)))
    rep = run_sweep(cfg, lifted, enc, checkpoint=checkpoint)
    text = rep.to_csv()
    if out is None:
        click.echo(text, nl=False)
    man = _manifest("simulate", cfg.seed, [code], {**data, **kw, "z": z, "profile": profile}, t0)
    man["points"] = [p.to_dict() for p in rep.points]
    man["pinned_source_positions"] = int(enc.pinned_src.size)
    _write_outputs(out, text, man)


@cli.command("optimize")
@click.option("--config", "config", required=True, help="JSON search configuration.")
@click.option("--log", "log_path", default=None, help="JSONL search log (default <out>.jsonl).")
@click.option("--out", required=True, help="Best-matrix output file.")
@click.option("--resume", is_flag=True, help="Continue DE runs recorded in the log.")
@click.option("--seed", type=int, default=None)
def optimize_cmd(config, log_path, out, resume, seed):
    """Two-stage protomatrix search."""
    from .optimize import DeParams, DeState, fstct, load_search_config

    t0 = time.perf_counter()
    c, d, opts = load_search_config(config)
    if seed is not None:
        d = replace(d or DeParams(), seed=seed)
    log_file = Path(log_path or (str(out) + ".jsonl"))
    states: dict[str, DeState] = {}
    if resume and log_file.exists():
        for line in log_file.read_text().splitlines():
            rec = json.loads(line)
            if rec.get("event") == "generation":
                # last record per stage wins; a finished stage replays no generations
                states[rec["stage"]] = DeState.from_record(rec, rec["stage"] == "bp")
    elif log_file.exists():
        log_file.unlink()

    def log(rec: dict) -> None:
        with log_file.open("a") as fh:
            fh.write(json.dumps({**rec, "seed": None if d is None else d.seed}, default=str) + "\n")

    res = fstct(c, d, backend=opts.get("backend", "auto"), stage2_pool=opts.get("stage2_pool"),
                log=log, resume=states or None)
    b = Protomatrix(res.best, c.n_r, c.n_p, name="best")
    head = [
        f"source threshold p1_th = {res.p1_th:.3f}",
        f"channel threshold = {res.es_n0_th:.3f} dB at p1 = {c.p1}",
        f"backend = {res.backend}",
    ]
    text = format_protomatrix(b, head)
    click.echo(text, nl=False)
    _write_outputs(out, text, _manifest("optimize", None if d is None else d.seed, [], json.loads(Path(config).read_text()), t0))


def main(argv=None) -> int:
    """Entry point mapping exceptions to exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except click.exceptions.Abort:
        return EXIT_INTERNAL
    except (ParseError, FileNotFoundError, UnencodableError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_CONFIG
    except (NoThresholdError, SearchExhaustedError) as exc:
        click.echo(f"no result: {exc}", err=True)
        nearest = getattr(exc, "nearest", None)
        if nearest:
            click.echo(f"nearest miss: {json.dumps(nearest)}", err=True)
        return EXIT_NO_RESULT
    except Exception as exc:  # noqa: BLE001
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
