"""Command-line entry point: synth, ingest, train, eval, transfer, ablate,
export, plot.

Every artifact-producing command serializes its fully-resolved RunConfig into
the output directory before doing any work, so runs are reproducible from that
file alone. Configuration resolves as: built-in defaults < config file <
dotted flag overrides (`--model.hidden_dim 32` style).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime
from pathlib import Path

import numpy as np

from .data.dataset import Dataset, ingest_csvs, load_archive, save_archive, write_dataset_csvs
from .data.confounders import DEFAULT_POI_VOCAB
from .data.synthetic import SyntheticProfile, generate_synthetic
from .data.windows import make_windows
from .estimator import STDCFormerForecaster
from .evaluation import (
    export_cta_attention,
    export_gate_weights,
    persistence_baseline,
    compute_metrics,
    zero_shot_eval,
)
from .graph import laplacian_embedding

OUT_ROOT_ENV = "STDCFORMER_OUT_ROOT"

MODEL_KEYS = (
    "hidden_dim", "lap_dim", "encoder_layers", "decoder_layers", "heads",
    "past_steps", "future_steps", "use_dc", "use_map", "use_sc", "use_tc",
    "use_lap", "str_compose", "layer_norm", "residual", "head_proj", "dropout",
)
TRAIN_KEYS = (
    "lr", "max_epochs", "early_stop_patience", "plateau_factor",
    "plateau_patience", "min_lr", "batch_size", "grad_clip",
)
DATA_KEYS = ("split_ratios", "window_stride", "future_weather")

ABLATION_VARIANTS = ("full", "w/o DC", "w/o MAP", "w/o SC", "w/o TC", "w/o LAP")


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except (json.JSONDecodeError, ValueError):
        return raw


def read_kv_config(path) -> dict:
    """Config file as dotted keys: flat `section.key = value` lines, or a
    serialized run_config.json (so any run reproduces from its own record)."""
    with open(path) as fh:
        content = fh.read()
    if content.lstrip().startswith("{"):
        payload = json.loads(content)
        out = {}
        for section in ("model", "train", "data"):
            for key, value in payload.get(section, {}).items():
                out[f"{section}.{key}"] = value
        if "seed" in payload:
            out["seed"] = payload["seed"]
        return out
    out = {}
    for line_num, line in enumerate(content.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_num}: expected 'key = value'")
        key, _, raw = line.partition("=")
        out[key.strip()] = _parse_value(raw.strip())
    return out


def parse_overrides(leftover) -> dict:
    """Turn `--section.key value` / `--section.key=value` args into a dict."""
    out = {}
    i = 0
    while i < len(leftover):
        arg = leftover[i]
        if not arg.startswith("--"):
            raise ValueError(f"unrecognized argument {arg!r}")
        body = arg[2:]
        if "=" in body:
            key, _, raw = body.partition("=")
            i += 1
        else:
            key = body
            if i + 1 >= len(leftover):
                raise ValueError(f"override {arg!r} is missing a value")
            raw = leftover[i + 1]
            i += 2
        out[key] = _parse_value(raw)
    return out


def default_run_config() -> dict:
    defaults = STDCFormerForecaster().get_params()
    return {
        "seed": defaults["seed"],
        "model": {k: defaults[k] for k in MODEL_KEYS},
        "train": {k: defaults[k] for k in TRAIN_KEYS},
        "data": {k: (list(defaults[k]) if isinstance(defaults[k], tuple) else defaults[k])
                 for k in DATA_KEYS},
    }


def apply_dotted(config: dict, dotted: dict) -> None:
    for key, value in dotted.items():
        if key == "seed":
            config["seed"] = value
            continue
        if "." not in key:
            raise ValueError(f"unknown config key {key!r} (use section.key)")
        section, _, name = key.partition(".")
        if section not in ("model", "train", "data") or name not in config[section]:
            raise ValueError(f"unknown config key {key!r}")
        config[section][name] = value


def resolve_run_config(args, leftover) -> dict:
    config = default_run_config()
    if getattr(args, "config", None):
        apply_dotted(config, read_kv_config(args.config))
    apply_dotted(config, parse_overrides(leftover))
    if getattr(args, "seed", None) is not None:
        config["seed"] = args.seed
    return config


def estimator_from_config(config: dict) -> STDCFormerForecaster:
    params = {}
    params.update(config["model"])
    params.update(config["train"])
    params.update({k: (tuple(v) if isinstance(v, list) else v)
                   for k, v in config["data"].items()})
    params["seed"] = config["seed"]
    return STDCFormerForecaster(**params)


def make_run_dir(args, command: str) -> Path:
    if getattr(args, "out", None):
        run_dir = Path(args.out)
    else:
        root = Path(os.environ.get(OUT_ROOT_ENV, "runs"))
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        run_dir = root / f"{command}-{stamp}"
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def write_run_config(run_dir: Path, command: str, config: dict, extra: dict | None = None):
    payload = {"command": command, **(extra or {}), **config}
    with open(run_dir / "run_config.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _write_report(run_dir: Path, report) -> None:
    with open(run_dir / "report.json", "w") as fh:
        fh.write(report.to_json())
    region_ids = report.region_ids or [str(i) for i in range(len(report.per_region["mae"].values))]
    with open(run_dir / "per_region.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id", "mae", "rmse"])
        for rid, mae, rmse in zip(region_ids, report.per_region["mae"].values,
                                  report.per_region["rmse"].values):
            writer.writerow([rid, mae, rmse])
    with open(run_dir / "per_horizon.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["horizon_step", "mae", "rmse"])
        for step, (mae, rmse) in enumerate(zip(report.per_horizon["mae"].values,
                                               report.per_horizon["rmse"].values), start=1):
            writer.writerow([step, mae, rmse])


def cmd_synth(args, leftover) -> int:
    profile_kv = read_kv_config(args.profile) if args.profile else {}
    profile_kv.update(parse_overrides(leftover))
    n = int(profile_kv.pop("n", args.n))
    length = int(profile_kv.pop("length", args.length))
    seed = int(profile_kv.pop("seed", args.seed if args.seed is not None else 0))
    profile = SyntheticProfile.from_dict(profile_kv)
    run_dir = make_run_dir(args, "synth")
    write_run_config(run_dir, "synth", {
        "n": n, "length": length, "seed": seed, "profile": profile.to_dict(),
    })
    data = generate_synthetic(n, length, seed, profile)
    dataset = Dataset(flow=data.flow, temporal=data.temporal,
                      spatial=data.spatial, graph=data.graph)
    save_archive(dataset, run_dir / "dataset")
    write_dataset_csvs(run_dir / "csv", data, DEFAULT_POI_VOCAB)
    print(f"synth: wrote archive {run_dir / 'dataset'} ({n} regions x {length} steps)")
    return 0


def cmd_ingest(args, leftover) -> int:
    if leftover:
        raise ValueError(f"unrecognized arguments: {leftover}")
    for name in ("flow", "temporal", "spatial", "adjacency"):
        path = getattr(args, name)
        if not Path(path).exists():
            raise ValueError(f"missing input file: {path}")
    run_dir = make_run_dir(args, "ingest")
    write_run_config(run_dir, "ingest", {
        "flow": str(args.flow), "temporal": str(args.temporal),
        "spatial": str(args.spatial), "adjacency": str(args.adjacency),
    })
    dataset = ingest_csvs(args.flow, args.temporal, args.spatial, args.adjacency)
    save_archive(dataset, run_dir / "dataset")
    print(f"ingest: wrote archive {run_dir / 'dataset'}")
    return 0


def cmd_train(args, leftover) -> int:
    config = resolve_run_config(args, leftover)
    run_dir = make_run_dir(args, "train")
    write_run_config(run_dir, "train", config, {"dataset": str(args.dataset)})
    dataset = load_archive(args.dataset)
    est = estimator_from_config(config)
    est.fit(dataset, log_path=run_dir / "train_log.jsonl")
    est.save(run_dir / "checkpoint.pt")
    report = est.evaluate(dataset)
    _write_report(run_dir, report)
    print(f"train: best val MAE {est.train_state_.best_val_mae:.4f} "
          f"at epoch {est.train_state_.best_epoch}; "
          f"test IO MAE {report.overall['io'].mae:.4f}")
    return 0


def cmd_eval(args, leftover) -> int:
    if leftover:
        raise ValueError(f"unrecognized arguments: {leftover}")
    run_dir = make_run_dir(args, "eval")
    write_run_config(run_dir, "eval", {
        "checkpoint": str(args.checkpoint), "dataset": str(args.dataset),
    })
    est = STDCFormerForecaster.load(args.checkpoint)
    dataset = load_archive(args.dataset)
    report = est.evaluate(dataset)
    _write_report(run_dir, report)
    baseline_windows = est.dataset_splits(dataset)[2]
    y = np.stack([w.y for w in baseline_windows])
    naive = persistence_baseline(np.stack([w.x for w in baseline_windows]),
                                 est.future_steps)
    naive_report = compute_metrics(naive, y)
    with open(run_dir / "persistence_baseline.json", "w") as fh:
        fh.write(naive_report.to_json())
    print(f"eval: test IO MAE {report.overall['io'].mae:.4f} "
          f"(persistence {naive_report.overall['io'].mae:.4f})")
    return 0


def cmd_transfer(args, leftover) -> int:
    if leftover:
        raise ValueError(f"unrecognized arguments: {leftover}")
    run_dir = make_run_dir(args, "transfer")
    write_run_config(run_dir, "transfer", {
        "checkpoint": str(args.checkpoint), "dataset": str(args.dataset),
    })
    est = STDCFormerForecaster.load(args.checkpoint)
    ood = load_archive(args.dataset)
    report = zero_shot_eval(
        est.model_, est.schema_, ood, ratios=tuple(est.split_ratios),
        seed=est.seed, future_weather=est.future_weather,
    )
    _write_report(run_dir, report)
    print(f"transfer: zero-shot IO MAE {report.overall['io'].mae:.4f}")
    return 0


def cmd_ablate(args, leftover) -> int:
    config = resolve_run_config(args, leftover)
    run_dir = make_run_dir(args, "ablate")
    write_run_config(run_dir, "ablate", config, {"dataset": str(args.dataset)})
    dataset = load_archive(args.dataset)
    rows = []
    for variant in ABLATION_VARIANTS:
        variant_cfg = json.loads(json.dumps(config))
        if variant != "full":
            flag = "use_" + variant.split(" ")[-1].lower()
            variant_cfg["model"][flag] = False
        est = estimator_from_config(variant_cfg)
        sub = run_dir / variant.replace("/", "").replace(" ", "_")
        sub.mkdir(exist_ok=True)
        est.fit(dataset, log_path=sub / "train_log.jsonl")
        est.save(sub / "checkpoint.pt")
        report = est.evaluate(dataset)
        with open(sub / "report.json", "w") as fh:
            fh.write(report.to_json())
        rows.append({
            "variant": variant,
            "mae": report.overall["io"].mae,
            "rmse": report.overall["io"].rmse,
            "parameters": est.model_.parameter_count(),
        })
        print(f"ablate[{variant}]: IO MAE {rows[-1]['mae']:.4f} "
              f"RMSE {rows[-1]['rmse']:.4f} params {rows[-1]['parameters']}")
    with open(run_dir / "ablation.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["variant", "mae", "rmse", "parameters"])
        writer.writeheader()
        writer.writerows(rows)
    with open(run_dir / "ablation.json", "w") as fh:
        json.dump(rows, fh, indent=2)
    return 0


def cmd_export(args, leftover) -> int:
    if leftover:
        raise ValueError(f"unrecognized arguments: {leftover}")
    run_dir = make_run_dir(args, "export")
    write_run_config(run_dir, "export", {
        "checkpoint": str(args.checkpoint), "dataset": str(args.dataset),
        "kind": args.kind, "window": args.window,
    })
    est = STDCFormerForecaster.load(args.checkpoint)
    dataset = load_archive(args.dataset)
    lap = laplacian_embedding(dataset.graph, est.lap_dim)
    if args.kind == "gates":
        export = export_gate_weights(est.model_, dataset, est.scaler_, lap,
                                     future_weather=est.future_weather)
        with open(run_dir / "gates.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["region_id", "timestamp", "p_cs"])
            writer.writeheader()
            writer.writerows(export.rows)
        with open(run_dir / "gates_per_region.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["region_id", "mean_p_cs"])
            for rid, value in export.per_region.items():
                writer.writerow([rid, value])
        print(f"export: {len(export.rows)} gate rows -> {run_dir / 'gates.csv'}")
    else:
        windows = make_windows(dataset.flow, est.past_steps, est.future_steps)
        index = args.window if args.window is not None else 0
        if not 0 <= index < len(windows):
            raise ValueError(f"window index {index} out of range 0..{len(windows) - 1}")
        payload = export_cta_attention(est.model_, dataset, est.scaler_, lap,
                                       windows[index], future_weather=est.future_weather,
                                       per_head=args.per_head)
        with open(run_dir / "attention.json", "w") as fh:
            json.dump(payload, fh, indent=2)
        print(f"export: attention for window {index} -> {run_dir / 'attention.json'}")
    return 0


def cmd_plot(args, leftover) -> int:
    if leftover:
        raise ValueError(f"unrecognized arguments: {leftover}")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    run_dir = make_run_dir(args, "plot")
    write_run_config(run_dir, "plot", {
        "kind": args.kind, "input": str(args.input) if args.input else None,
        "checkpoint": str(args.checkpoint) if args.checkpoint else None,
        "dataset": str(args.dataset) if args.dataset else None,
        "region": args.region,
    })
    if args.kind == "prediction":
        if not (args.checkpoint and args.dataset):
            raise ValueError("plot prediction needs --checkpoint and --dataset")
        est = STDCFormerForecaster.load(args.checkpoint)
        dataset = load_archive(args.dataset)
        windows = est.dataset_splits(dataset)[2]
        y_hat = est.predict(dataset, windows=windows)
        region = args.region or dataset.flow.region_ids[0]
        r = dataset.flow.region_ids.index(region)
        truth = [w.y[0, r, 0] for w in windows]
        pred = y_hat[:, 0, r, 0]
        fig, ax = plt.subplots(figsize=(10, 4))
        ax.plot(truth, label="observed", lw=1.0)
        ax.plot(pred, label="predicted", lw=1.0)
        ax.set_xlabel("test window")
        ax.set_ylabel("inflow")
        ax.set_title(f"one-step-ahead inflow, region {region}")
        ax.legend()
        path = run_dir / f"prediction_{region}.png"
    elif args.kind == "gates":
        if not args.input:
            raise ValueError("plot gates needs --input gates.csv")
        series = {}
        with open(args.input, newline="") as fh:
            for row in csv.DictReader(fh):
                series.setdefault(row["region_id"], []).append(float(row["p_cs"]))
        fig, ax = plt.subplots(figsize=(10, 4))
        for rid, vals in series.items():
            if args.region and rid != args.region:
                continue
            ax.plot(vals, label=rid, lw=0.8)
        ax.set_xlabel("timestep")
        ax.set_ylabel("spatial gate weight")
        ax.axhline(0.5, color="grey", ls="--", lw=0.8)
        if len(series) <= 12:
            ax.legend(ncol=4, fontsize=8)
        path = run_dir / "gates.png"
    else:
        if not args.input:
            raise ValueError("plot attention needs --input attention.json")
        with open(args.input) as fh:
            payload = json.load(fh)
        region_ids = payload["region_ids"]
        region = args.region or region_ids[0]
        r = region_ids.index(region)
        attn = np.asarray(payload["attention"][r])
        fig, ax = plt.subplots(figsize=(5, 4))
        im = ax.imshow(attn, aspect="auto", cmap="viridis", vmin=0.0)
        ax.set_xlabel("past step")
        ax.set_ylabel("future step")
        ax.set_title(f"cross-time attention, region {region}")
        fig.colorbar(im, ax=ax)
        path = run_dir / f"attention_{region}.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    print(f"plot: wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stdcformer",
        description="Spatial-temporal de-confounded crowd flow forecasting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=False, checkpoint=False, config=False):
        p.add_argument("--out", help="run output directory (default: timestamped)")
        p.add_argument("--seed", type=int, default=None)
        if dataset:
            p.add_argument("--dataset", required=True, help="dataset archive directory")
        if checkpoint:
            p.add_argument("--checkpoint", required=True)
        if config:
            p.add_argument("--config", help="flat key=value config file")

    p = sub.add_parser("synth", help="generate a synthetic dataset archive")
    p.add_argument("--profile", help="profile config file (graph, noise, ...)")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--length", type=int, default=24 * 20)
    common(p)

    p = sub.add_parser("ingest", help="build an archive from CSV inputs")
    p.add_argument("--flow", required=True)
    p.add_argument("--temporal", required=True)
    p.add_argument("--spatial", required=True)
    p.add_argument("--adjacency", required=True)
    common(p)

    p = sub.add_parser("train", help="train a model on a dataset archive")
    common(p, dataset=True, config=True)

    p = sub.add_parser("eval", help="evaluate a checkpoint on its test split")
    common(p, dataset=True, checkpoint=True)

    p = sub.add_parser("transfer", help="zero-shot evaluation on another city")
    common(p, dataset=True, checkpoint=True)

    p = sub.add_parser("ablate", help="train the full model plus 5 ablations")
    common(p, dataset=True, config=True)

    p = sub.add_parser("export", help="export gate weights or attention")
    p.add_argument("--kind", choices=("gates", "attention"), required=True)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--per-head", action="store_true", dest="per_head",
                   help="include unaveraged per-head attention")
    common(p, dataset=True, checkpoint=True)

    p = sub.add_parser("plot", help="emit figures from runs or exports")
    p.add_argument("--kind", choices=("prediction", "gates", "attention"), required=True)
    p.add_argument("--input", help="export file (gates.csv / attention.json)")
    p.add_argument("--checkpoint")
    p.add_argument("--dataset")
    p.add_argument("--region")
    common(p)

    return parser


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "eval": cmd_eval,
    "transfer": cmd_transfer,
    "ablate": cmd_ablate,
    "export": cmd_export,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args, leftover = parser.parse_known_args(argv)
    try:
        return COMMANDS[args.command](args, leftover)
    except Exception as exc:  # surface a one-line cause, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
