"""Command-line interface.

Subcommands: ``run`` cleans a recording and writes the result with a
stage log, QA tables and figures; ``qa`` compares two recordings;
``eval`` scores staged outputs by decodability; ``synth`` generates a
benchmark recording with ground truth.

Exit codes: 0 on success, 1 for invalid input or configuration, 2 when a
processing stage fails (a partial stage log is still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import figures, io_store, mleval, qa
from .channels import channel_sd
from .errors import (
    ConfigError,
    FormatError,
    NeurocleanError,
    PipelineFailure,
    ValidationError,
)
from .model import PipelineConfig, Recording, require_valid
from .pipeline import STAGE_ORDER, run_pipeline
from .qa import retention_ratios
from .synth import SynthSpec, generate


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neuroclean", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", parents=[], help="clean a recording end to end")
    run_p.add_argument("--input", required=True, help="payload file (.ncr) or delimited .csv")
    run_p.add_argument("--sidecar", help="JSON sidecar (default: <input>.json)")
    run_p.add_argument("--config", help="pipeline configuration JSON")
    run_p.add_argument("--output", required=True, help="output directory")
    run_p.add_argument("--epoch", action="store_true", help="cut trials around events after cleaning")
    run_p.add_argument(
        "--keep-intermediates", action="store_true", help="write every stage output recording"
    )
    run_p.add_argument("--seed", type=int, help="override the configured random seed")
    run_p.add_argument("--line-freq", type=float, choices=(50.0, 60.0), help="mains frequency")
    run_p.add_argument("--zapline-nremove", help="'auto' or a fixed component count")
    run_p.add_argument("--dbscan-eps", type=float, help="clustering radius for component screening")
    run_p.add_argument("--dbscan-min-samples", type=int, help="core-point threshold")
    run_p.add_argument(
        "--mara-standardize", choices=("on", "off"), help="z-score component features before clustering"
    )
    run_p.add_argument("--sampling-rate", type=float, help="sampling rate in Hz (CSV input only)")
    run_p.set_defaults(func=cmd_run)

    qa_p = sub.add_parser("qa", help="compare two recordings")
    qa_p.add_argument("--before", required=True, help="reference payload (.ncr)")
    qa_p.add_argument("--before-sidecar", help="sidecar for --before (default: <before>.json)")
    qa_p.add_argument("--after", required=True, help="processed payload (.ncr)")
    qa_p.add_argument("--after-sidecar", help="sidecar for --after (default: <after>.json)")
    qa_p.add_argument("--output", help="directory for qa.json, qa.csv and figures")
    qa_p.set_defaults(func=cmd_qa)

    eval_p = sub.add_parser("eval", help="score staged outputs by decodability")
    eval_p.add_argument("--input", required=True, help="directory of staged .ncr/.json pairs")
    eval_p.add_argument("--report", required=True, help="output report JSON path")
    eval_p.add_argument("--bands", nargs="+", default=["full"], help="bands to evaluate")
    eval_p.add_argument("--repeats", type=int, default=100, help="train/test splits per result")
    eval_p.add_argument("--seed", type=int, default=0)
    eval_p.add_argument("--epoch-len", type=int, default=500, help="trial window length in samples")
    eval_p.add_argument("--no-search", action="store_true", help="skip the incremental feature search")
    eval_p.set_defaults(func=cmd_eval)

    synth_p = sub.add_parser("synth", help="generate a benchmark recording")
    synth_p.add_argument("--spec", required=True, help="synthesis spec JSON")
    synth_p.add_argument("--output", required=True, help="output directory")
    synth_p.add_argument("--seed", type=int, help="override the spec seed")
    synth_p.set_defaults(func=cmd_synth)
    return parser


def _default_sidecar(payload: str) -> str:
    return payload + ".json"


def _load_recording(payload: str, sidecar: str | None, sampling_rate: float | None,
                    line_freq: float | None) -> Recording:
    path = Path(payload)
    if not path.exists():
        raise FormatError(f"input file not found: {path}")
    if path.suffix.lower() == ".csv":
        if sampling_rate is None:
            raise ConfigError("CSV input needs --sampling-rate")
        return io_store.read_csv(path, sampling_rate_hz=sampling_rate, line_freq_hz=line_freq)
    sidecar_path = Path(sidecar) if sidecar else Path(_default_sidecar(payload))
    if not sidecar_path.exists():
        raise FormatError(f"sidecar not found: {sidecar_path}")
    return io_store.read_recording(path, sidecar_path)


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        config_path = Path(args.config)
        if not config_path.exists():
            raise ConfigError(f"config file not found: {config_path}")
        cfg = PipelineConfig.from_json(config_path.read_text(encoding="utf-8"))
    else:
        cfg = PipelineConfig()
    overrides: dict = {}
    if args.seed is not None:
        overrides["random_seed"] = args.seed
    if args.line_freq is not None:
        overrides["line_freq_hz"] = args.line_freq
    if args.zapline_nremove is not None:
        value = args.zapline_nremove
        if value != "auto":
            try:
                value = int(value)
            except ValueError:
                raise ConfigError(
                    f"--zapline-nremove must be 'auto' or an integer, got {value!r}"
                ) from None
        overrides["zapline_n_remove"] = value
    if args.dbscan_eps is not None:
        overrides["dbscan_eps"] = args.dbscan_eps
    if args.dbscan_min_samples is not None:
        overrides["dbscan_min_samples"] = args.dbscan_min_samples
    if args.mara_standardize is not None:
        overrides["mara_standardize"] = args.mara_standardize == "on"
    if overrides:
        cfg = PipelineConfig.from_dict({**cfg.to_dict(), **overrides})
    cfg.validate()
    return cfg


def _write_qa_csv(reports, path: Path) -> None:
    fields = (
        "stage",
        "snr_db",
        "snr_vs_raw_db",
        "one_over_f_similarity",
        "channels_retained_fraction",
        "components_rejected_fraction",
    )
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for report in reports:
            metrics = report.qa_after.to_dict() if report.qa_after is not None else {}
            writer.writerow(
                [report.stage_name] + [metrics.get(f) for f in fields[1:]]
            )


def cmd_run(args: argparse.Namespace) -> int:
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = _build_config(args)
    recording = _load_recording(args.input, args.sidecar, args.sampling_rate, cfg.line_freq_hz)
    require_valid(recording)
    log_path = out_dir / "stage_log.jsonl"
    try:
        result = run_pipeline(recording, cfg, epoch=args.epoch, keep_stage_outputs=True)
    except PipelineFailure as exc:
        io_store.write_stage_log(exc.reports, log_path)
        print(f"processing failed: {exc}", file=sys.stderr)
        print(f"partial stage log written to {log_path}", file=sys.stderr)
        return 2

    io_store.write_stage_log(result.reports, log_path)
    io_store.write_recording(result.cleaned, out_dir / "cleaned.ncr", out_dir / "cleaned.ncr.json")
    _write_qa_csv(result.reports, out_dir / "qa_summary.csv")

    retention = retention_ratios(result.reports, recording.n_channels)
    summary = {
        "config": cfg.to_dict(),
        "input": str(args.input),
        "n_channels": recording.n_channels,
        "n_samples": recording.n_samples,
        "sampling_rate_hz": recording.sampling_rate_hz,
        "stages": [r.to_dict() for r in result.reports],
        "channels_rejected": list(retention.rejected_channel_indices),
        "channels_retained_fraction": retention.channels_retained_fraction,
        "components_rejected": list(retention.rejected_component_indices),
    }
    (out_dir / "report.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    if args.keep_intermediates and result.staged is not None:
        inter = out_dir / "intermediates"
        inter.mkdir(exist_ok=True)
        for i, (name, rec) in enumerate(result.staged):
            stem = f"{i:02d}_{name}"
            io_store.write_recording(rec, inter / f"{stem}.ncr", inter / f"{stem}.ncr.json")

    if result.epoched is not None:
        np.save(out_dir / "epochs.npy", result.epoched.trials)
        (out_dir / "epochs.json").write_text(
            json.dumps(
                {
                    "labels": list(result.epoched.labels),
                    "epoch_len_p": result.epoched.epoch_len_p,
                    "sampling_rate_hz": result.epoched.sampling_rate_hz,
                    "event_sample_indices": list(result.epoched.event_sample_indices),
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )

    fig_dir = out_dir / "figures"
    staged = dict(result.staged or ())
    figures.save_psd_overlay(
        {"raw": recording, "cleaned": result.cleaned},
        fig_dir / "psd_before_after.png",
    )
    stats = channel_sd(staged.get("zapline", recording))
    chan_report = next((r for r in result.reports if r.stage_name == "channel_reject"), None)
    rejected = list(chan_report.rejected_channel_indices) if chan_report else []
    sd_plot = np.where(np.isnan(stats.sd_uv), 0.0, stats.sd_uv)
    figures.save_channel_deviations(
        sd_plot, rejected, cfg.bcr_sd_low_uv, cfg.bcr_sd_high_uv, fig_dir / "channel_deviations.png"
    )
    mara_report = next((r for r in result.reports if r.stage_name == "ica_mara"), None)
    if mara_report is not None and "features" in mara_report.params:
        from .mara import FEATURE_NAMES, standardize_columns

        values = np.asarray(mara_report.params["features"], dtype=np.float64)
        figures.save_component_features(
            standardize_columns(values),
            mara_report.params.get("labels", [0] * len(values)),
            FEATURE_NAMES,
            fig_dir / "component_features.png",
        )
    figures.save_timeseries_snippet(
        {"raw": recording, "cleaned": result.cleaned}, fig_dir / "timeseries.png"
    )
    print(f"cleaned recording and reports written to {out_dir}")
    return 0


def cmd_qa(args: argparse.Namespace) -> int:
    before = _load_recording(args.before, args.before_sidecar, None, None)
    after = _load_recording(args.after, args.after_sidecar, None, None)
    metrics = {
        "snr_db": qa.snr_db(before, after),
        "one_over_f_similarity_before": qa.one_over_f_similarity(before),
        "one_over_f_similarity_after": qa.one_over_f_similarity(after),
        "channels_retained_fraction": float(after.channel_mask.mean()),
    }
    print(json.dumps(metrics, indent=2))
    if args.output:
        out_dir = Path(args.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "qa.json").write_text(json.dumps(metrics, indent=2) + "\n", encoding="utf-8")
        with (out_dir / "qa.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(metrics))
            writer.writerow([metrics[k] for k in metrics])
        figures.save_psd_overlay(
            {"before": before, "after": after}, out_dir / "figures" / "psd_before_after.png"
        )
    return 0


def _staged_from_dir(input_dir: Path) -> list[tuple[str, Recording]]:
    payloads = sorted(input_dir.glob("*.ncr"))
    if not payloads:
        raise FormatError(f"no .ncr payloads found in {input_dir}")
    staged = []
    for payload in payloads:
        sidecar = payload.with_suffix(".ncr.json")
        if not sidecar.exists():
            sidecar = Path(str(payload) + ".json")
        if not sidecar.exists():
            raise FormatError(f"no sidecar found for {payload}")
        name = payload.stem
        if "_" in name and name.split("_", 1)[0].isdigit():
            name = name.split("_", 1)[1]
        staged.append((name, io_store.read_recording(payload, sidecar)))

    known = {name: i for i, name in enumerate(("raw",) + STAGE_ORDER)}
    staged.sort(key=lambda pair: (known.get(pair[0], len(known)), pair[0]))
    return staged


def cmd_eval(args: argparse.Namespace) -> int:
    input_dir = Path(args.input)
    if not input_dir.is_dir():
        raise FormatError(f"--input must be a directory of staged recordings: {input_dir}")
    staged = _staged_from_dir(input_dir)
    cfg = mleval.EvalConfig(
        bands=tuple(args.bands),
        repeats=args.repeats,
        epoch_len_p=args.epoch_len,
        seed=args.seed,
        run_search=not args.no_search,
        search=mleval.SearchConfig(seed=args.seed),
    )
    report = mleval.evaluate_pipeline_steps(staged, cfg)

    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")

    csv_path = report_path.with_suffix(".csv")
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "stage",
                "band",
                "n_trials",
                "mlr_test_acc_mean",
                "mlr_test_acc_std",
                "mlr_train_acc_mean",
                "mlr_test_acc_shuffled_mean",
                "knn_test_acc_mean",
                "knn_test_acc_shuffled_mean",
                "roc_auc",
                "search_stop_d",
            ]
        )
        for res in report.results:
            writer.writerow(
                [
                    res.stage,
                    res.band,
                    res.n_trials,
                    f"{res.mlr_test_acc.mean():.6f}",
                    f"{res.mlr_test_acc.std():.6f}",
                    f"{res.mlr_train_acc.mean():.6f}",
                    f"{res.mlr_test_acc_shuffled.mean():.6f}",
                    f"{res.knn_test_acc.mean():.6f}",
                    f"{res.knn_test_acc_shuffled.mean():.6f}",
                    f"{res.roc_auc:.6f}",
                    "" if res.search is None else res.search.stop_d,
                ]
            )

    fig_dir = report_path.parent / "figures"
    for band in cfg.bands:
        band_results = [r for r in report.results if r.band == band]
        if not band_results:
            continue
        chance = 1.0 / len(band_results[0].class_names)
        figures.save_accuracy_by_stage(
            [r.stage for r in band_results],
            [r.mlr_test_acc for r in band_results],
            [r.mlr_test_acc_shuffled for r in band_results],
            chance,
            fig_dir / f"accuracy_by_stage_{band}.png",
            title=f"decoding accuracy by stage ({band})",
        )
        figures.save_roc_curves(
            {r.stage: (r.roc_fpr, r.roc_tpr, r.roc_auc) for r in band_results},
            fig_dir / f"roc_{band}.png",
        )
        for res in band_results:
            if res.search is not None:
                figures.save_search_curves(
                    res.search.d_values,
                    res.search.mlr_val_acc.mean(axis=1),
                    res.search.mlr_val_acc_shuffled.mean(axis=1),
                    chance,
                    fig_dir / f"search_{res.stage}_{band}.png",
                    title=f"feature search: {res.stage} ({band})",
                )
    print(f"evaluation report written to {report_path}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec_path = Path(args.spec)
    if not spec_path.exists():
        raise FormatError(f"spec file not found: {spec_path}")
    spec = SynthSpec.from_json(spec_path.read_text(encoding="utf-8"))
    if args.seed is not None:
        spec = SynthSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    recording, truth = generate(spec)
    io_store.write_recording(recording, out_dir / "data.ncr", out_dir / "data.ncr.json")
    (out_dir / "truth.json").write_text(truth.to_json() + "\n", encoding="utf-8")
    (out_dir / "spec.json").write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(
        f"synthesized {recording.n_channels} channels x {recording.n_samples} samples "
        f"({len(recording.events)} events) in {out_dir}"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PipelineFailure as exc:
        print(f"processing failed: {exc}", file=sys.stderr)
        return 2
    except NeurocleanError as exc:
        print(f"processing failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
