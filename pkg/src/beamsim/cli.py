"""Command-line entry point: run / compare / validate.

``run`` executes one (stack, direction) campaign and writes report and CDF
files; ``compare`` runs both stacks over the identical scenario realisation
(same seeds, hence same terminal positions and channel states) and emits
gain tables; ``validate`` only checks the config.  Exit codes: 0 success,
1 configuration error, 2 runtime failure.
"""

import argparse
import sys
from pathlib import Path

from . import config, engine, stats


def _add_common(p):
    p.add_argument("--config", required=True, help="scenario YAML")
    p.add_argument("--seed", type=int, help="override drops.master_seed")
    p.add_argument("--drops", type=int, help="override drops.count")
    p.add_argument("--out-dir", default="results", help="output directory")
    p.add_argument("--tiers", type=int, help="override geometry.tiers")
    p.add_argument("--stack", choices=config.STACKS, help="override stack")
    p.add_argument("--direction", choices=config.DIRECTIONS, help="override direction")
    p.add_argument("--event-log", action="store_true", help="write per-block event logs")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="beamsim",
        description="Multi-beam GEO satellite access-network system-level simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "run one campaign and write reports"),
        ("compare", "run both stacks on the shared scenario and emit gain tables"),
        ("validate", "check the configuration only"),
    ):
        _add_common(sub.add_parser(name, help=help_text))
    return parser


def _load_with_overrides(args) -> config.ScenarioConfig:
    cfg = config.load_config(args.config)
    data = config.scenario_to_dict(cfg)
    if args.seed is not None:
        data["drops"]["master_seed"] = args.seed
    if args.drops is not None:
        data["drops"]["count"] = args.drops
    if args.tiers is not None:
        data["geometry"]["tiers"] = args.tiers
    if args.stack is not None:
        data["stack"] = args.stack
    if args.direction is not None:
        data["direction"] = args.direction
    return config.scenario_from_dict(data)


def _write_campaign(out: Path, cfg, result, stack: str):
    directions = ("dl", "ul") if cfg.direction == "both" else (cfg.direction,)
    for d in directions:
        report = result.reports[d]
        stats.write_csv(
            out / f"user_stats_{stack}_{d}.csv",
            stats.USER_CSV_COLUMNS,
            [stats.user_csv_row(d, cfg.sub_scenario, stack, report)],
        )
        stats.write_csv(
            out / f"beam_stats_{stack}_{d}.csv",
            stats.BEAM_CSV_COLUMNS,
            [stats.beam_csv_row(d, cfg.sub_scenario, stack, report)],
        )
        for metric, points in report.cdfs.items():
            stats.write_cdf_csv(out / f"cdf_{metric}_{stack}_{d}.csv", points)


def _write_event_logs(out: Path, result, stack: str):
    for i, drop in enumerate(result.drops):
        if drop.event_log is None:
            continue
        path = out / f"events_{stack}_drop{i}.log"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("time_s,beam,terminal,direction,scheme,sinr_db,bits,success\n")
            for t, beam, tid, d, scheme, sinr, bits, ok in drop.event_log:
                fh.write(f"{t:.9f},{beam},{tid},{d},{scheme},{sinr:.4f},{bits},{ok}\n")


def _cmd_run(args) -> int:
    cfg = _load_with_overrides(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = engine.run_campaign(cfg, collect_event_log=args.event_log)
    _write_campaign(out, cfg, result, cfg.stack)
    if args.event_log:
        _write_event_logs(out, result, cfg.stack)
    print(f"wrote reports for stack={cfg.stack} direction={cfg.direction} to {out}")
    return 0


def _cmd_compare(args) -> int:
    base = config.scenario_to_dict(_load_with_overrides(args))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    results = {}
    for stack in config.STACKS:
        data = dict(base)
        data["stack"] = stack
        cfg = config.scenario_from_dict(data)
        results[stack] = (cfg, engine.run_campaign(cfg, collect_event_log=args.event_log))

    cfg_dvb, res_dvb = results["dvb"]
    _cfg_nr, res_nr = results["nr"]
    if res_dvb.positions_hashes != res_nr.positions_hashes:
        print("error: terminal positions differ between stacks", file=sys.stderr)
        return 2
    print(f"terminal positions identical across stacks: {res_dvb.positions_hashes}")

    directions = ("dl", "ul") if cfg_dvb.direction == "both" else (cfg_dvb.direction,)
    user_rows = []
    beam_rows = []
    for d in directions:
        rep_dvb = res_dvb.reports[d]
        rep_nr = res_nr.reports[d]
        dvb_mean = rep_dvb.metrics["user_tput_kbps"].mean
        nr_mean = rep_nr.metrics["user_tput_kbps"].mean
        rep_dvb.gain_vs_comparison_pct = stats.gain_pct(dvb_mean, nr_mean)
        rep_nr.gain_vs_comparison_pct = stats.gain_pct(nr_mean, dvb_mean)
        tech_dvb = "dvb-s2x" if d == "dl" else "dvb-rcs2"
        tech_nr = "nr-pdsch" if d == "dl" else "nr-pusch"
        user_rows.append(stats.user_csv_row(d, cfg_dvb.sub_scenario, tech_dvb, rep_dvb))
        user_rows.append(stats.user_csv_row(d, cfg_dvb.sub_scenario, tech_nr, rep_nr))
        beam_rows.append(stats.beam_csv_row(d, cfg_dvb.sub_scenario, tech_dvb, rep_dvb))
        beam_rows.append(stats.beam_csv_row(d, cfg_dvb.sub_scenario, tech_nr, rep_nr))
        print(
            f"[{d}] avg user tput: dvb {dvb_mean:.1f} kbps, nr {nr_mean:.1f} kbps, "
            f"dvb-vs-nr gain {rep_dvb.gain_vs_comparison_pct:+.1f}%"
        )
        for stack, (cfg_s, res_s) in results.items():
            for metric, points in res_s.reports[d].cdfs.items():
                stats.write_cdf_csv(out / f"cdf_{metric}_{stack}_{d}.csv", points)

    stats.write_csv(out / "compare_user.csv", stats.USER_CSV_COLUMNS, user_rows)
    stats.write_csv(out / "compare_beam.csv", stats.BEAM_CSV_COLUMNS, beam_rows)
    if args.event_log:
        for stack, (_c, res) in results.items():
            _write_event_logs(out, res, stack)
    print(f"wrote comparison tables to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            _load_with_overrides(args)
            return 0
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_compare(args)
    except config.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
