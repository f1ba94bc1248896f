"""Command-line front door: reproducible runs over ingestion, synthesis,
benchmarking, classification, transfer, and reporting."""

from __future__ import annotations

import argparse
import configparser
import difflib
import sys
from dataclasses import replace
from typing import Dict, List, Optional

import numpy as np

from . import anomaly, augment, autoenc, classify, features, forecast, ingest, report, synth
from .core import (
    ContractError,
    DefectLabel,
    MachineState,
    OperatingPoint,
    SplitMode,
    SplitSpec,
    split_arrays,
)

USER_ERROR = 1
INTERNAL_ERROR = 2

#: Config file keys, by section, with parsers and defaults.
CONFIG_SCHEMA = {
    "detection": {"lambda": (float, anomaly.DEFAULT_LAMBDA), "two_sided": (bool, True)},
    "training": {
        "epochs": (int, 20),
        "batch_size": (int, 64),
        "learning_rate": (float, 0.05),
        "seed": (int, 0),
    },
    "datasets": {
        "names": (str, "synth-a,synth-b"),
        "n_points": (int, 400),
        "n_spikes": (int, 8),
        "spike_rel": (float, 0.3),
    },
    "models": {"names": (str, "seasonal_naive,ar")},
    "split": {"train_fraction": (float, 0.66)},
}


def load_config(path: Optional[str]) -> Dict[str, dict]:
    """Config file -> fully defaulted {section: {key: value}}; unknown keys
    error with a spelling suggestion rather than being silently ignored."""
    resolved = {
        section: {key: default for key, (_, default) in keys.items()}
        for section, keys in CONFIG_SCHEMA.items()
    }
    if path is None:
        return resolved
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ContractError(f"config file not found: {path}")
    for section in parser.sections():
        if section not in CONFIG_SCHEMA:
            hint = difflib.get_close_matches(section, CONFIG_SCHEMA, n=1)
            extra = f" (did you mean '{hint[0]}'?)" if hint else ""
            raise ContractError(f"unknown config section '{section}'{extra}")
        for key, raw in parser.items(section):
            schema = CONFIG_SCHEMA[section]
            if key not in schema:
                hint = difflib.get_close_matches(key, schema, n=1)
                extra = f" (did you mean '{hint[0]}'?)" if hint else ""
                raise ContractError(f"unknown config key '{key}' in [{section}]{extra}")
            kind, _ = schema[key]
            if kind is bool:
                resolved[section][key] = raw.strip().lower() in ("1", "true", "yes", "on")
            else:
                resolved[section][key] = kind(raw)
    return resolved


def _provenance(config: dict, seed: int, fingerprints: dict) -> dict:
    return {
        "artifact_version": report.ARTIFACT_VERSION,
        "resolved_config": config,
        "seed": seed,
        "dataset_fingerprints": fingerprints,
    }


def _synthetic_anomaly_dataset(name: str, cfg: dict, seed: int) -> anomaly.AnomalyDataset:
    spiked = synth.generate_spiked_series(
        n=cfg["datasets"]["n_points"],
        n_spikes=cfg["datasets"]["n_spikes"],
        spike_rel=cfg["datasets"]["spike_rel"],
        seed=seed,
    )
    return anomaly.AnomalyDataset(
        name=name,
        series=spiked.series,
        truth_rule=anomaly.TruthRule.INJECTED_SPIKES,
        spike_indices=spiked.spike_indices,
    )


def _resolve_datasets(tokens: List[str], cfg: dict, seed: int) -> List[anomaly.AnomalyDataset]:
    datasets = []
    for i, token in enumerate(sorted(tokens)):
        if token.endswith(".csv"):
            rows = ingest.parse_process_csv(token)
            labeled = ingest.label_process_rows(rows)
            series = synth.chiller_series(labeled)
            datasets.append(
                anomaly.AnomalyDataset(
                    name=token,
                    series=series,
                    truth_rule=anomaly.TruthRule.DATE_RANGES,
                    abnormal_dates=frozenset(ingest.DEFAULT_ABNORMAL_DATES),
                )
            )
        else:
            datasets.append(_synthetic_anomaly_dataset(token, cfg, seed + i))
    return datasets


def _synth_per_rpm(rpms, duration_s, noise, seed, amp_rpm_exponent=0.0):
    per_rpm = {}
    for rpm in rpms:
        feats, labels = [], []
        for label in DefectLabel:
            rec = synth.generate_vibration(
                synth.SynthConfig(
                    rpm=rpm,
                    sample_rate_hz=3200.0,
                    duration_s=duration_s,
                    imbalance_level=label,
                    noise_sigma=noise,
                    seed=seed + rpm + 1000 * int(label),
                    amp_rpm_exponent=amp_rpm_exponent,
                )
            )
            rows = features.select_axes(rec, features.AxisMode.XZ_ONLY)
            feats.append(rows)
            labels.append(np.full(rows.shape[0], int(label), dtype=np.int64))
        per_rpm[rpm] = (np.concatenate(feats), np.concatenate(labels))
    return per_rpm


def cmd_ingest(args, cfg) -> int:
    if args.format == "triaxial":
        records = ingest.parse_triaxial_csv(
            args.input,
            sample_rate_hz=args.sample_rate,
            operating_point=OperatingPoint(rpm=args.rpm),
            burst_len=args.burst_len,
        )
        summary = {"format": "triaxial", "records": len(records),
                   "samples": int(sum(len(r) for r in records))}
    elif args.format == "process":
        rows = ingest.parse_process_csv(args.input)
        summary = {"format": "process", "rows": len(rows)}
    else:
        records = ingest.parse_pharma_txt(args.input)
        summary = {"format": "pharma", "records": len(records)}
    summary["input"] = args.input
    print(report.canonical_json(summary))
    if args.out:
        report.write_json_report(summary, args.out)
    return 0


def cmd_synth(args, cfg) -> int:
    if args.emit == "process":
        labeled = synth.generate_process(days=args.days, seed=args.seed)
        ingest.write_process_csv([r for r, _ in labeled], args.out)
        print(f"wrote {len(labeled)} process rows to {args.out}")
        return 0
    config = synth.SynthConfig(
        rpm=args.rpm,
        sample_rate_hz=args.rate,
        duration_s=args.duration,
        imbalance_level=DefectLabel[args.level.upper()],
        noise_sigma=args.noise,
        seed=args.seed,
    )
    record = synth.generate_vibration(config)
    if args.emit == "triaxial":
        ingest.write_triaxial_csv([record], args.out)
        print(f"wrote {len(record)} tri-axial samples to {args.out}")
    else:
        n = ingest.PHARMA_POINTS_PER_AXIS
        if len(record) < n:
            raise ContractError(
                f"pharma format needs >= {n} samples; increase --duration"
            )
        rec = ingest.PharmaRecord(
            start_s=record.start_s,
            x=record.x[:n], y=record.y[:n], z=record.z[:n],
            dt_s=1.0 / record.sample_rate_hz,
        )
        ingest.write_pharma_txt([rec], args.out)
        print(f"wrote 1 pharma record to {args.out}")
    return 0


def cmd_bench(args, cfg) -> int:
    lam = args.lam if args.lam is not None else cfg["detection"]["lambda"]
    seed = args.seed if args.seed is not None else cfg["training"]["seed"]
    fraction = args.split if args.split is not None else cfg["split"]["train_fraction"]
    dataset_tokens = (args.datasets or cfg["datasets"]["names"]).split(",")
    model_tokens = (args.models or cfg["models"]["names"]).split(",")
    datasets = _resolve_datasets(dataset_tokens, cfg, seed)
    grid = {}
    for token in model_tokens:
        kind = token.strip()
        grid[kind] = default_variants(kind, seed)
    bench = anomaly.run_benchmark(
        datasets,
        grid,
        SplitSpec(fraction, SplitMode.CHRONOLOGICAL, seed=seed),
        anomaly.AnomalyRuleConfig(lam=lam, two_sided=cfg["detection"]["two_sided"]),
    )
    bench["provenance"] = _provenance(
        cfg, seed, {d.name: report.data_fingerprint(d.series.values) for d in datasets}
    )
    print(anomaly.benchmark_tables(bench))
    if args.out:
        report.write_json_report(anomaly.strip_timings(bench), args.out)
    return 0


def default_variants(kind: str, seed: int) -> List[forecast.ForecastModelConfig]:
    """Desk-scale grid per model family; the paper-tuned settings stay the
    single-variant default for the heavier models."""
    if kind == "seasonal_naive":
        return [forecast.ForecastModelConfig(kind, {"m": m}, seed) for m in (1, 10)]
    if kind == "ar":
        return [forecast.ForecastModelConfig(kind, {"p": p}, seed) for p in (5, 10)]
    if kind == "arima":
        return [forecast.ForecastModelConfig(kind, {"p": 10, "d": d}, seed) for d in (0, 1)]
    if kind == "random_forest":
        return [forecast.ForecastModelConfig(kind, {"n_trees": 50, "max_depth": 6}, seed)]
    if kind == "mlp":
        return [forecast.ForecastModelConfig(kind, {}, seed)]
    if kind == "rnn":
        return [forecast.ForecastModelConfig(kind, {"neurons": 32}, seed)]
    if kind == "lstm":
        return [forecast.ForecastModelConfig(kind, {"blocks": 2, "neurons": 16}, seed)]
    if kind == "autoencoder":
        return [forecast.ForecastModelConfig(kind, {"window": 32}, seed)]
    if kind == "gaussian_rnn":
        return [forecast.ForecastModelConfig(kind, {}, seed)]
    raise ContractError(f"unknown model '{kind}'; known: {sorted(forecast.MODEL_DEFAULTS)}")


def _train_cfg(args, cfg) -> classify.TrainConfig:
    t = cfg["training"]
    return classify.TrainConfig(
        epochs=args.epochs if args.epochs is not None else t["epochs"],
        batch_size=t["batch_size"],
        learning_rate=t["learning_rate"],
        seed=args.seed if args.seed is not None else t["seed"],
    )


def cmd_train(args, cfg) -> int:
    tcfg = _train_cfg(args, cfg)
    rpms = [int(r) for r in args.synth_rpms.split(",")]
    per_rpm = _synth_per_rpm(rpms, args.duration, args.noise, tcfg.seed)
    feats = np.concatenate([per_rpm[r][0] for r in rpms])
    labels = np.concatenate([per_rpm[r][1] for r in rpms])
    if args.binary:
        labels = classify.binary_relax(labels)
        class_names = ("normal", "not_normal")
    else:
        class_names = classify.DEFAULT_CLASS_NAMES
    if args.augment:
        f_new, l_new = augment.interpolate_within_rpm(feats, labels, args.augment, seed=tcfg.seed)
        feats = np.concatenate([feats, f_new])
        labels = np.concatenate([labels, l_new])
    spec = SplitSpec(0.7, SplitMode.STRATIFIED_SHUFFLE, seed=tcfg.seed)
    (ftr, ltr), (fte, lte) = split_arrays(feats, labels, spec)
    enc = features.fit_encoder(ftr, tuple(f"f{i}" for i in range(ftr.shape[1])))
    model = classify.train_classifier(enc.transform(ftr), ltr, cfg=tcfg, class_names=class_names)
    acc, cm = classify.evaluate(model, enc.transform(fte), lte)
    out = {
        "accuracy": acc,
        "confusion": cm.counts.tolist(),
        "class_names": list(class_names),
        "provenance": _provenance(cfg, tcfg.seed, {"train": report.data_fingerprint(ftr)}),
    }
    print(report.canonical_json({"accuracy": acc}))
    if args.out:
        report.write_json_report(out, args.out)
    if args.save_model:
        classify.save_classifier(model, args.save_model)
    return 0


def cmd_transfer(args, cfg) -> int:
    tcfg = _train_cfg(args, cfg)
    result = run_transfer_experiment(
        rpm=args.rpm,
        source_duration_s=args.source_duration,
        target_samples=args.target_samples,
        noise=args.noise,
        extra_noise=args.extra_noise,
        cfg=tcfg,
    )
    result["provenance"] = _provenance(cfg, tcfg.seed, {})
    print(report.canonical_json({k: result[k] for k in ("dnn_r_accuracy", "dnn_tl_accuracy")}))
    if args.out:
        report.write_json_report(result, args.out)
    return 0


def run_transfer_experiment(
    rpm: int,
    source_duration_s: float,
    target_samples: int,
    noise: float,
    extra_noise: float,
    cfg: classify.TrainConfig,
    target_epoch_scale: float = 1.0,
) -> dict:
    """Paired source-sensor vs target-sensor experiment: a plain model on the
    scarce decimated target data against fine-tuning the source model."""
    source_rows, source_labels = [], []
    target_rows, target_labels = [], []
    mems_rate = 10.0
    per_label_target = max(target_samples // 3, 2)
    for label in DefectLabel:
        rec = synth.generate_vibration(
            synth.SynthConfig(
                rpm=rpm, sample_rate_hz=3200.0, duration_s=source_duration_s,
                imbalance_level=label, noise_sigma=noise,
                seed=cfg.seed + 7 * int(label),
            )
        )
        source_rows.append(features.select_axes(rec, features.AxisMode.XZ_ONLY))
        source_labels.append(np.full(len(rec), int(label), dtype=np.int64))
        target_duration = per_label_target / mems_rate
        target_rec = synth.generate_vibration(
            synth.SynthConfig(
                rpm=rpm, sample_rate_hz=3200.0,
                duration_s=target_duration,
                imbalance_level=label, noise_sigma=noise,
                seed=cfg.seed + 7 * int(label) + 3,
            )
        )
        mems = synth.decimate_to_mems(
            target_rec, target_rate_hz=mems_rate,
            extra_noise_sigma=extra_noise, seed=cfg.seed + int(label),
        )
        target_rows.append(features.select_axes(mems, features.AxisMode.XZ_ONLY))
        target_labels.append(np.full(len(mems), int(label), dtype=np.int64))
    fs = np.concatenate(source_rows)
    ls = np.concatenate(source_labels)
    ft = np.concatenate(target_rows)
    lt = np.concatenate(target_labels)
    enc = features.fit_encoder(fs, features.axis_feature_names(features.AxisMode.XZ_ONLY))
    source_model = classify.train_classifier(enc.transform(fs), ls, cfg=cfg)
    bundle = classify.make_bundle(source_model, enc, source_id=f"synthetic-piezo-rpm{rpm}", cfg=cfg)
    spec = SplitSpec(0.7, SplitMode.STRATIFIED_SHUFFLE, seed=cfg.seed)
    (ftr, ltr), (fte, lte) = split_arrays(ft, lt, spec)
    target_cfg = replace(cfg, epochs=max(1, int(cfg.epochs * target_epoch_scale)))
    dnn_r = classify.train_classifier(enc.transform(ftr), ltr, cfg=target_cfg)
    dnn_tl = classify.train_transfer(bundle, ftr, ltr, cfg=target_cfg)
    acc_r, _ = classify.evaluate(dnn_r, enc.transform(fte), lte)
    acc_tl, _ = classify.evaluate(dnn_tl, enc.transform(fte), lte)
    return {
        "rpm": rpm,
        "n_source": int(len(ls)),
        "n_target": int(len(lt)),
        "dnn_r_accuracy": acc_r,
        "dnn_tl_accuracy": acc_tl,
        "source_id": bundle.source_id,
    }


def cmd_cross_rpm(args, cfg) -> int:
    tcfg = _train_cfg(args, cfg)
    rpms = [int(r) for r in args.synth_rpms.split(",")]
    per_rpm = _synth_per_rpm(rpms, args.duration, args.noise, tcfg.seed,
                             amp_rpm_exponent=args.amp_rpm_exponent)
    result = classify.cross_rpm_matrix(
        per_rpm, cfg=tcfg, augment_n_per_rpm=args.augment
    )
    result["provenance"] = _provenance(cfg, tcfg.seed, {})
    rows = [[rpm] + [result["grid"][rpm][str(r)] for r in rpms] + [result["grid"][rpm]["average"]]
            for rpm in list(map(str, rpms)) + ["augmented"]]
    print(report.format_table(["train\\test"] + [str(r) for r in rpms] + ["average"], rows))
    if args.out:
        report.write_json_report(result, args.out)
    return 0


def cmd_tune(args, cfg) -> int:
    tcfg = _train_cfg(args, cfg)
    per_rpm = _synth_per_rpm([args.rpm], args.duration, args.noise, tcfg.seed)
    feats, labels = per_rpm[args.rpm]
    steps = [
        classify.TuningStep("feature_normalization", normalize=True),
        classify.TuningStep("hidden_layers", hidden_sizes=(50, 80, 100)),
        classify.TuningStep("epochs", epochs=max(tcfg.epochs, 30)),
        classify.TuningStep("batch_size", batch_size=100),
    ]
    results = classify.tuning_sweep(feats, labels, steps, base_cfg=tcfg, mode=args.mode)
    print(report.format_table(["step", "accuracy"], [[r["step"], r["accuracy"]] for r in results]))
    if args.out:
        report.write_json_report(
            {"sweep": results, "mode": args.mode,
             "provenance": _provenance(cfg, tcfg.seed, {})}, args.out
        )
    return 0


def cmd_autoenc(args, cfg) -> int:
    tcfg = _train_cfg(args, cfg)
    labeled = synth.generate_process(days=args.days, seed=tcfg.seed)
    vib = []
    for row, state in labeled[:: args.vibration_stride]:
        level = DefectLabel.FAILURE if state == MachineState.ABNORMAL else DefectLabel.NORMAL
        rec = synth.generate_vibration(
            synth.SynthConfig(
                rpm=300, sample_rate_hz=3200.0, duration_s=0.05,
                imbalance_level=level, noise_sigma=0.05,
                seed=tcfg.seed + int(row.timestamp_s) % 100000,
            )
        )
        # a shut-down machine barely vibrates
        scale = 0.05 if state == MachineState.OFF else 1.0
        vib.append(replace(rec, start_s=row.timestamp_s,
                           x=rec.x * scale, y=rec.y * scale, z=rec.z * scale))
    aligned = ingest.align_and_impute(vib, labeled)
    enc = features.fit_encoder(aligned.features, aligned.feature_names)
    model = autoenc.train_autoenc_classifier(
        enc.transform(aligned.features), aligned.labels, alpha=args.alpha, cfg=tcfg
    )
    preds = np.argmax(model.predict_proba(enc.transform(aligned.features)), axis=1)
    acc = float(np.mean(preds == aligned.labels))
    out = {"train_accuracy": acc, "alpha": args.alpha,
           "recon_loss_curve": model.recon_loss_curve,
           "class_loss_curve": model.class_loss_curve,
           "provenance": _provenance(cfg, tcfg.seed, {})}
    print(report.canonical_json({"train_accuracy": acc}))
    if args.out:
        report.write_json_report(out, args.out)
    return 0


def cmd_report(args, cfg) -> int:
    if args.compare:
        a = report.load_json_report(args.compare[0])
        b = report.load_json_report(args.compare[1])
        for line in report.compare_reports(a, b):
            print(line)
        return 0
    doc = report.load_json_report(args.show)
    if "best_rmse" in doc:
        print(anomaly.benchmark_tables(doc))
    else:
        print(report.canonical_json(doc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vibrosense")
    parser.add_argument("--config", help="key-value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a dataset file")
    p.add_argument("--format", choices=["triaxial", "process", "pharma"], required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--sample-rate", type=float, default=3200.0)
    p.add_argument("--rpm", type=int, default=300)
    p.add_argument("--burst-len", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate synthetic data in a wire format")
    p.add_argument("--emit", choices=["triaxial", "process", "pharma"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rpm", type=int, default=300)
    p.add_argument("--rate", type=float, default=3200.0)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--level", choices=["normal", "near_failure", "failure"], default="normal")
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--days", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="dataset x model benchmark sweep")
    p.add_argument("--datasets")
    p.add_argument("--models")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--split", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("train", help="train a defect classifier on synthetic data")
    p.add_argument("--synth-rpms", default="300")
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--binary", action="store_true")
    p.add_argument("--augment", type=int, default=0)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--save-model")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transfer", help="source-to-target transfer experiment")
    p.add_argument("--rpm", type=int, default=100)
    p.add_argument("--source-duration", type=float, default=5.0)
    p.add_argument("--target-samples", type=int, default=600)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--extra-noise", type=float, default=0.1)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("cross-rpm", help="cross-speed accuracy grid")
    p.add_argument("--synth-rpms", default="100,200,300,400")
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--amp-rpm-exponent", type=float, default=1.0)
    p.add_argument("--augment", type=int, default=200)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cross_rpm)

    p = sub.add_parser("tune", help="cumulative tuning-ledger sweep")
    p.add_argument("--rpm", type=int, default=300)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--mode", choices=["cumulative", "independent"], default="cumulative")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("autoenc", help="dual-loss autoencoder state classifier")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--days", type=int, default=3)
    p.add_argument("--vibration-stride", type=int, default=1)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_autoenc)

    p = sub.add_parser("report", help="show or compare report files")
    p.add_argument("--compare", nargs=2, metavar=("A", "B"))
    p.add_argument("--show")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USER_ERROR if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (ContractError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USER_ERROR
    except Exception as exc:  # invariant violation
        print(f"internal error: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
