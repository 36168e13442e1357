"""Command line front end.

Subcommands
    analyze   absorption statistics and cdf for a configured chain
    simulate  Monte Carlo escape statistics across starting positions
    eye       RC-ladder eye diagram and folded crossing histogram
    compare   settling-time reduction techniques
    sweep     cycles-at-confidence across window widths

All commands read a YAML config (--config) and write CSV plus a
summary.json into --out.  Runs are deterministic for a given config and
seed; files are written atomically and carry no timestamps, so a rerun
is byte-identical.

Exit codes: 0 ok, 2 bad config or usage, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np
import yaml

from . import jitter, markov, reduction, sim

SCHEMA_VERSION = 1

_MISSING = object()


class ConfigError(ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.12g" % float(v)


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(path: str, obj: dict) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _pop(cfg: dict, key: str, default=_MISSING):
    if key in cfg:
        return cfg.pop(key)
    if default is _MISSING:
        raise ConfigError(f"missing required key {key!r}")
    return default


def _done(cfg: dict, context: str) -> None:
    if cfg:
        raise ConfigError(f"unknown {context} keys: {sorted(cfg)}")


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed YAML: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    version = _pop(cfg, "schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    return cfg


def _as_int(v, key: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return v


def _as_float(v, key: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    return float(v)


def _require_seed(args) -> int:
    if args.seed is None:
        raise ConfigError("this command needs --seed")
    return args.seed


def _source_from(cfg: dict) -> sim.BitSource:
    kind = _pop(cfg, "source", "bernoulli")
    if kind == "bernoulli":
        return sim.BitSource.bernoulli(_as_float(_pop(cfg, "bit_probability", 0.5), "bit_probability"))
    if kind == "training":
        return sim.BitSource.training_biased()
    if kind == "alternating":
        return sim.BitSource.alternating()
    if kind == "explicit":
        return sim.BitSource.explicit(_pop(cfg, "pattern_bits"))
    raise ConfigError(f"unknown source {kind!r}")


def _window_from(cfg: dict) -> jitter.WindowSpec:
    width = _as_int(_pop(cfg, "width_steps"), "width_steps")
    offset = _pop(cfg, "initial_offset_steps", None)
    if offset is not None:
        offset = _as_int(offset, "initial_offset_steps")
    try:
        return jitter.WindowSpec(width, offset)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _initial_vector(chain: markov.AbsorbingChain, position) -> np.ndarray:
    """Point mass at a labeled position; uniform over memory states."""
    labels = chain.labels
    hits = [
        i
        for i, lab in enumerate(labels)
        if i not in chain.absorbing
        and (lab[0] if isinstance(lab, tuple) else lab) == position
    ]
    if not hits:
        raise ConfigError(f"initial position {position} is not a transient state")
    p0 = np.zeros(chain.n_states)
    p0[hits] = 1.0 / len(hits)
    return p0


def _chain_from(cfg: dict) -> tuple[markov.AbsorbingChain, object, dict]:
    """Build (chain, initial position label, description) from config."""
    model = _pop(cfg, "model")
    desc: dict = {"model": model}
    if model == "isi1":
        window = _window_from(cfg)
        chain = jitter.build_isi1_chain(window)
        init = window.initial
        desc["width_steps"] = window.width_steps
    elif model == "isi2":
        subs = _pop(cfg, "sub_windows_steps", None)
        if subs is None:
            pct = _pop(cfg, "sub_windows_percent_ui")
            step = _as_float(_pop(cfg, "step_percent_ui", 0.35), "step_percent_ui")
            subs = jitter.sub_windows_to_steps(tuple(pct), step)
        if not (isinstance(subs, (list, tuple)) and len(subs) == 3):
            raise ConfigError("sub_windows_steps must be three integers")
        subs = tuple(_as_int(s, "sub_windows_steps") for s in subs)
        chain = jitter.build_isi2_chain(*subs)
        width = sum(subs)
        init = _pop(cfg, "initial_offset_steps", width // 2)
        desc["sub_windows_steps"] = list(subs)
        desc["width_steps"] = width
    elif model == "gaussian":
        spec = jitter.GaussianJitterSpec(
            sigma_steps=_as_float(_pop(cfg, "sigma_steps"), "sigma_steps"),
            truncation_sigmas=_as_float(_pop(cfg, "truncation_sigmas", 3.0), "truncation_sigmas"),
            transition_probability=_as_float(
                _pop(cfg, "transition_probability", 0.5), "transition_probability"
            ),
        )
        chain = jitter.build_gaussian_chain(spec)
        init = _pop(cfg, "initial_offset_steps", 0)
        desc["sigma_steps"] = spec.sigma_steps
    elif model == "combined":
        probs = _pop(cfg, "trace_probabilities", [0.25, 0.25, 0.5])
        spec = jitter.CombinedJitterSpec(
            sigma_steps=_as_float(_pop(cfg, "sigma_steps"), "sigma_steps"),
            w_ab_steps=_as_int(_pop(cfg, "w_ab_steps"), "w_ab_steps"),
            trace_probabilities=tuple(float(p) for p in probs),
        )
        chain = jitter.build_combined_chain(spec)
        init = _pop(cfg, "initial_offset_steps", spec.w_ab_steps // 2)
        desc["sigma_steps"] = spec.sigma_steps
        desc["w_ab_steps"] = spec.w_ab_steps
    elif model == "biased":
        window = _window_from(cfg)
        mismatch = _pop(cfg, "mismatch_percent")
        base = jitter.build_isi1_chain(window)
        chain = jitter.build_biased_chain(base, mismatch)
        init = window.initial  # aligned on the tau grid
        desc["width_steps"] = window.width_steps
        desc["mismatch_percent"] = mismatch
    else:
        raise ConfigError(f"unknown model {model!r}")
    return chain, init, desc


def cmd_analyze(args, outdir: str) -> dict:
    cfg = _load_config(args.config)
    confidence = _as_float(_pop(cfg, "confidence", 0.99), "confidence")
    max_transitions = _as_int(
        _pop(cfg, "max_transitions", markov.DEFAULT_MAX_TRANSITIONS), "max_transitions"
    )
    try:
        chain, init, desc = _chain_from(cfg)
        _done(cfg, "analyze")
        p0 = _initial_vector(chain, init)
    except ValueError as e:
        raise ConfigError(str(e)) from e

    positions, mean, std = jitter.position_profile(chain)
    _write_csv(
        os.path.join(outdir, "mean_std.csv"),
        ["position_tau", "mean_cycles", "std_cycles"],
        zip(positions, mean, std),
    )

    series = markov.absorption_series(
        chain, p0, target_confidence=confidence, max_n=max_transitions
    )
    n_conf = int(np.argmax(series.cdf >= confidence))
    _write_csv(
        os.path.join(outdir, "absorption_cdf.csv"),
        ["n", "cdf", "pmf"],
        zip(range(series.cdf.size), series.cdf, series.pmf),
    )

    at = int(np.argmin(np.abs(positions - float(init))))
    return {
        "command": "analyze",
        **desc,
        "initial_position": float(init),
        "confidence": confidence,
        "n_at_confidence": n_conf,
        "mean_cycles_at_initial": float(mean[at]),
        "std_cycles_at_initial": float(std[at]),
        "n_states": chain.n_states,
    }


def _trial_config_from(cfg: dict, record: bool = False) -> tuple[sim.TrialConfig, dict]:
    window = _window_from(cfg)
    source = _source_from(cfg)
    mismatch = _pop(cfg, "mismatch_percent", 0)
    max_cycles = _as_int(_pop(cfg, "max_cycles", 1_000_000), "max_cycles")
    coarse_cfg = _pop(cfg, "coarse", None)
    coarse = None
    if coarse_cfg is not None:
        if not isinstance(coarse_cfg, dict):
            raise ConfigError("coarse must be a mapping")
        coarse = sim.CoarseFirstSpec(
            coarse_step_steps=_as_int(coarse_cfg.pop("step_steps", 1), "coarse.step_steps"),
            duration_cycles=_as_int(coarse_cfg.pop("duration_cycles"), "coarse.duration_cycles"),
        )
        _done(coarse_cfg, "coarse")
    sigma = _pop(cfg, "jitter_sigma_steps", None)
    jit = None
    if sigma is not None:
        jit = jitter.GaussianJitterSpec(sigma_steps=_as_float(sigma, "jitter_sigma_steps"))
    trace = jitter.isi1_trace(window.width_steps)
    config = sim.TrialConfig(
        channel=sim.ChannelModel.discrete(trace, jitter=jit),
        source=source,
        window=window,
        max_cycles=max_cycles,
        mismatch_percent=mismatch,
        coarse_first=coarse,
        record_trajectory=record,
    )
    meta = {
        "window_steps": window.width_steps,
        "source": source.kind,
        "mismatch_percent": float(mismatch),
        "jitter_sigma_steps": None if jit is None else jit.sigma_steps,
        "coarse": coarse is not None,
        "max_cycles": max_cycles,
    }
    return config, meta


def _default_positions(width: int) -> list[int]:
    if width <= 11:
        return list(range(1, width))
    pts = np.unique(np.round(np.linspace(1, width - 1, 10)).astype(int))
    return [int(p) for p in pts]


def cmd_simulate(args, outdir: str) -> dict:
    seed = _require_seed(args)
    cfg = _load_config(args.config)
    cfg_trials = _pop(cfg, "trials", 100)
    trials = _as_int(args.trials if args.trials is not None else cfg_trials, "trials")
    positions = _pop(cfg, "positions_steps", None)
    record = bool(_pop(cfg, "record_trajectory", True))
    try:
        base_config, meta = _trial_config_from(cfg)
        _done(cfg, "simulate")
    except ValueError as e:
        raise ConfigError(str(e)) from e
    width = base_config.window.width_steps
    if positions is None:
        positions = _default_positions(width)
    positions = [_as_int(p, "positions_steps") for p in positions]
    rows = []
    for i, pos in enumerate(positions):
        cfg_i = replace(base_config, initial_position=pos)
        res = sim.run_monte_carlo(cfg_i, trials, (seed, i))
        rows.append((pos, res.mean_cycles, res.std_cycles, res.stderr_cycles, trials))
    _write_csv(
        os.path.join(outdir, "escape_stats.csv"),
        ["position", "mean", "std", "stderr", "trials"],
        rows,
    )

    if record:
        cfg_0 = replace(base_config, initial_position=positions[0], record_trajectory=True)
        tr = sim.run_trial(cfg_0, (seed, 0, 0))
        traj = tr.trajectory
        _write_csv(
            os.path.join(outdir, "trajectory.csv"),
            ["cycle", "position_tau"],
            zip(range(traj.size), traj),
        )

    return {
        "command": "simulate",
        **meta,
        "seed": seed,
        "trials": trials,
        "positions": positions,
        "mean_cycles": [float(r[1]) for r in rows],
    }


def _channel_from(cfg: dict) -> sim.ChannelModel:
    preset = _pop(cfg, "channel", None)
    if preset is not None:
        if preset not in sim.REFERENCE_CHANNELS:
            raise ConfigError(
                f"unknown channel preset {preset!r}; pick from {sorted(sim.REFERENCE_CHANNELS)}"
            )
        return sim.REFERENCE_CHANNELS[preset]
    return sim.ChannelModel.rc(
        r=_as_float(_pop(cfg, "r_per_section", 1.0), "r_per_section"),
        c=_as_float(_pop(cfg, "c_per_section_ui"), "c_per_section_ui"),
        samples_per_ui=_as_int(_pop(cfg, "samples_per_ui"), "samples_per_ui"),
        sections=_as_int(_pop(cfg, "sections", 20), "sections"),
    )


def cmd_eye(args, outdir: str) -> dict:
    seed = _require_seed(args)
    cfg = _load_config(args.config)
    try:
        channel = _channel_from(cfg)
        source = _source_from(cfg)
        bits_total = _as_int(_pop(cfg, "bits_total", 400), "bits_total")
        warmup_ui = _as_int(_pop(cfg, "warmup_ui", 30), "warmup_ui")
        bins = _as_int(_pop(cfg, "histogram_bins", 100), "histogram_bins")
        gap = _as_float(_pop(cfg, "cluster_gap_ui", 0.02), "cluster_gap_ui")
        segments = _as_int(_pop(cfg, "overlay_segments", 40), "overlay_segments")
        _done(cfg, "eye")
        if bits_total <= warmup_ui + 2:
            raise ConfigError("bits_total must exceed warmup_ui by at least 3")
    except ValueError as e:
        raise ConfigError(str(e)) from e

    rng = np.random.default_rng(seed)
    bits = sim.generate_bits(source, bits_total, rng)
    wave = sim.propagate_rc(channel, bits)
    hist = sim.crossing_histogram(
        wave, channel.samples_per_ui, warmup_ui=warmup_ui, bins=bins, cluster_gap_ui=gap
    )
    overlay = sim.eye_traces(wave, channel.samples_per_ui, skip_ui=warmup_ui, n_segments=segments)

    spu = channel.samples_per_ui
    t_ui = np.arange(spu) / spu
    eye_rows = (
        (seg, t_ui[j], overlay[seg, j])
        for seg in range(overlay.shape[0])
        for j in range(spu)
    )
    _write_csv(os.path.join(outdir, "eye.csv"), ["segment", "time_ui", "value"], eye_rows)
    _write_csv(
        os.path.join(outdir, "crossings.csv"),
        ["bin_center", "count"],
        zip(hist.bin_centers, hist.counts),
    )
    return {
        "command": "eye",
        "seed": seed,
        "source": source.kind,
        "sections": channel.sections,
        "rc_per_section_ui": channel.section_tau_ui,
        "samples_per_ui": spu,
        "bits_total": bits_total,
        "n_crossings": int(hist.crossings_ui.size),
        "n_clusters": hist.n_clusters,
        "window_ui": float(hist.window_ui),
        "horizontal_eye_opening_ui": float(hist.eye_opening_ui),
        "cluster_centers_ui": [float(c) for c in hist.cluster_centers],
        "sub_gaps_ui": [float(g) for g in hist.sub_gaps_ui],
    }


def cmd_compare(args, outdir: str) -> dict:
    cfg = _load_config(args.config)
    technique = _pop(cfg, "technique")
    header = [
        "position",
        "baseline_mean",
        "treated_mean",
        "reduction_fraction",
        "baseline_std",
        "treated_std",
    ]
    if technique == "mismatch":
        try:
            width = _as_int(_pop(cfg, "width_steps"), "width_steps")
            mismatch = _pop(cfg, "mismatch_percent")
            _done(cfg, "compare")
            report = reduction.compare_mismatch(width, mismatch)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        center = report.at_position(width // 2)
        summary = {
            "command": "compare",
            "technique": "mismatch",
            "width_steps": width,
            "mismatch_percent": float(mismatch),
            "center": center,
            "max_reduction_mean": float(report.reduction_mean.max()),
        }
    elif technique == "training":
        seed = _require_seed(args)
        cfg_trials = _pop(cfg, "trials", 1000)
        trials = _as_int(args.trials if args.trials is not None else cfg_trials, "trials")
        try:
            config, meta = _trial_config_from(cfg)
            _done(cfg, "compare")
        except ValueError as e:
            raise ConfigError(str(e)) from e
        report, _, _ = reduction.compare_training(config, trials, seed)
        summary = {
            "command": "compare",
            "technique": "training",
            **meta,
            "seed": seed,
            "trials": trials,
            "p_value": report.p_value,
            "baseline_mean": float(report.baseline_mean[0]),
            "treated_mean": float(report.treated_mean[0]),
            "reduction_mean": float(report.reduction_mean[0]),
        }
    elif technique == "coarse":
        try:
            window = _window_from(cfg)
            confidence = _as_float(_pop(cfg, "confidence", 0.99), "confidence")
            period = _as_float(_pop(cfg, "divided_period_ns", 4.0), "divided_period_ns")
            _done(cfg, "compare")
            est = reduction.coarse_first_confidence(window, confidence, period)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return {
            "command": "compare",
            "technique": "coarse",
            "width_steps": window.width_steps,
            "confidence": confidence,
            "divided_period_ns": period,
            "cycles": est.cycles,
            "time_ns": est.time_ns,
        }
    else:
        raise ConfigError(f"unknown technique {technique!r}")

    rows = zip(
        report.positions,
        report.baseline_mean,
        report.treated_mean,
        report.reduction_mean,
        report.baseline_std,
        report.treated_std,
    )
    _write_csv(os.path.join(outdir, "reduction.csv"), header, rows)
    return summary


def cmd_sweep(args, outdir: str) -> dict:
    cfg = _load_config(args.config)
    try:
        widths = _pop(cfg, "widths_steps")
        confidence = _as_float(_pop(cfg, "confidence", 0.99), "confidence")
        max_transitions = _as_int(
            _pop(cfg, "max_transitions", markov.DEFAULT_MAX_TRANSITIONS), "max_transitions"
        )
        _done(cfg, "sweep")
        if not isinstance(widths, (list, tuple)) or not widths:
            raise ConfigError("widths_steps must be a nonempty list")
        widths = [_as_int(w, "widths_steps") for w in widths]
    except ValueError as e:
        raise ConfigError(str(e)) from e

    rows = []
    for w in widths:
        window = jitter.WindowSpec(w)
        chain = jitter.build_isi1_chain(window)
        p0 = markov.point_mass(chain, window.initial)
        series = markov.absorption_series(
            chain, p0, target_confidence=confidence, max_n=max_transitions
        )
        rows.append((w, int(np.argmax(series.cdf >= confidence))))
    _write_csv(os.path.join(outdir, "sweep.csv"), ["window_steps", "n_at_confidence"], rows)
    return {
        "command": "sweep",
        "confidence": confidence,
        "widths_steps": [r[0] for r in rows],
        "n_at_confidence": [r[1] for r in rows],
    }


_COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "eye": cmd_eye,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mesosettle",
        description="settling-time analysis of mesochronous clock-retiming loops",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="YAML config path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="base RNG seed (u64)")
        p.add_argument("--trials", type=int, default=None, help="override trial count")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must fit in u64", file=sys.stderr)
        return 2
    if args.trials is not None and args.trials < 1:
        print("error: --trials must be positive", file=sys.stderr)
        return 2
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as e:
        print(f"error: cannot create output directory: {e}", file=sys.stderr)
        return 4
    try:
        summary = _COMMANDS[args.command](args, args.out)
        path = os.path.join(args.out, "summary.json")
        _write_json(path, summary)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except markov.ConfidenceNotReached as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except (np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 4
    _say(args, f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
