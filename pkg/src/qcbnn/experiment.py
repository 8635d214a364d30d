"""Experiment harness: seeded sweep runs, artifact emission, reports.

A sweep writes one directory per (architecture, depth) label with one
subdirectory per seed::

    out/
      config_echo.cfg
      summary.csv
      <label>/seed<k>/epochs.csv       per-epoch losses and accuracy
      <label>/seed<k>/checkpoint.qckpt parameter container
      <label>/seed<k>/eval_test.csv    (metric, subset, value) rows
      <label>/seed<k>/weight_samples.csv  (pass_index, qubit, value)
      <label>/seed<k>/config.cfg       per-run effective config

``run_report`` turns a finished sweep directory into one CSV (+ optional
SVG) file family per figure group: training/validation curves, test
score box data, confidence-error and ensemble-fraction densities,
calibration curves, pooled weight densities, and the difference versus
accuracy scatter.  Every CSV is schema-stable and byte-deterministic for
a fixed (config, seed).
"""

from __future__ import annotations

import csv
import os
from dataclasses import replace

import numpy as np

from . import svg
from .autodiff import load_checkpoint, save_checkpoint
from .config import RunConfig, format_config, parse_config
from .data import Dataset, SynthSpec, load_dataset, split, synth_generate
from .metrics import build_eval_report, kde_density, report_rows
from .samplers import CHUNK_DIM
from .seeding import stream
from .training import (
    ModelState,
    TrainConfig,
    build_model,
    draw_weight_samples,
    ensemble_outputs,
    prior_matching_ks,
    train_model,
    train_prior_matching,
)

EPOCH_HEADER = ["epoch", "split", "likelihood", "kl", "disc", "combined", "accuracy"]
SUMMARY_FIELDS = [
    "train_accuracy", "val_accuracy", "test_accuracy", "precision", "recall",
    "f1", "mean_confidence", "confidence_error_correct", "confidence_error_incorrect",
    "ensemble_fraction_correct", "ensemble_fraction_incorrect", "difference",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))  # shortest round-trip form, byte-stable
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def resolve_dataset(config: RunConfig) -> Dataset:
    """Load or generate the configured dataset and tag splits."""
    if config.dataset == "synth":
        dataset = synth_generate(
            SynthSpec(
                n_samples=config.synth_samples,
                imbalance=config.synth_imbalance,
                noise_scale=config.synth_noise,
                seed=config.synth_seed,
            )
        )
    else:
        dataset = load_dataset(config.dataset, config.dataset_format)
    return split(dataset, config.split_fractions, config.split_seed)


def cell_label(config: RunConfig, arch, layers: int, reupload: bool) -> str:
    if config.sampler != "quantum":
        return config.sampler
    return f"{arch.value}_L{layers}" + ("re" if reupload else "")


def _run_cells(config: RunConfig):
    """Sweep cells with non-quantum samplers reduced to one per seed."""
    if config.sampler != "quantum":
        return [(config.archs[0], 1, False, seed) for seed in config.seeds]
    return config.cells()


def train_one_run(config: RunConfig, tagged: Dataset, arch, layers, reupload, seed,
                  run_dir: str, progress: bool = False) -> dict:
    """Train one sweep cell, write its artifacts, return its summary row."""
    os.makedirs(run_dir, exist_ok=True)
    train_cfg = config.train_config(arch, layers, reupload, seed)
    train_set = tagged.subset("train")
    has_val = "validation" in tagged.tags
    val_set = tagged.subset("validation") if has_val else None
    test_set = tagged.subset("test")

    model = build_model(train_cfg, train_set.images.shape[1:])
    history = train_model(
        model, train_set.images, train_set.labels,
        val_set.images if val_set else None,
        val_set.labels if val_set else None,
        progress=progress,
    )

    rows = []
    for h in history:
        rows.append([h["epoch"], "train", h["likelihood"], h["kl"], h["disc"],
                     h["combined"], h["train_accuracy"]])
        if "val_accuracy" in h:
            rows.append([h["epoch"], "validation", None, None, None, None,
                         h["val_accuracy"]])
    _write_csv(os.path.join(run_dir, "epochs.csv"), EPOCH_HEADER, rows)

    save_checkpoint(os.path.join(run_dir, "checkpoint.qckpt"), model.named_arrays())

    probs, votes = ensemble_outputs(model, test_set.images, config.n_ensemble,
                                    ("eval-test",))
    report = build_eval_report(probs, votes, test_set.labels,
                               config.calibration_bins, config.subset_reference)
    _write_csv(os.path.join(run_dir, "eval_test.csv"),
               ["metric", "subset", "value"], report_rows(report))

    dump_weight_samples(model, config.n_ensemble,
                        os.path.join(run_dir, "weight_samples.csv"))

    single = replace(config, archs=[arch], layers_list=[layers],
                     reupload_list=[reupload], seeds=[seed])
    with open(os.path.join(run_dir, "config.cfg"), "w") as fh:
        fh.write(format_config(single))

    last = history[-1]
    return {
        "train_accuracy": last["train_accuracy"],
        "val_accuracy": last.get("val_accuracy"),
        "test_accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "mean_confidence": report.mean_confidence,
        "confidence_error_correct": report.confidence_error_correct,
        "confidence_error_incorrect": report.confidence_error_incorrect,
        "ensemble_fraction_correct": report.ensemble_fraction_correct,
        "ensemble_fraction_incorrect": report.ensemble_fraction_incorrect,
        "difference": report.difference,
    }


def dump_weight_samples(model: ModelState, n_draws: int, path):
    """Weight-sample dump: one row per (circuit pass, qubit) value."""
    samples = draw_weight_samples(model, n_draws, stream(model.config.seed, "dump"))
    rows = []
    for d, ws in enumerate(samples):
        for c in range(ws.chunks.shape[0]):
            for q in range(CHUNK_DIM):
                rows.append([d * ws.chunks.shape[0] + c, q, ws.chunks[c, q]])
    _write_csv(path, ["pass_index", "qubit", "value"], rows)


def run_train(config: RunConfig, progress: bool = False) -> str:
    """Execute the full sweep; returns the output directory."""
    out = os.path.abspath(config.out)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config_echo.cfg"), "w") as fh:
        fh.write(format_config(config))
    tagged = resolve_dataset(config)

    summary_rows = []
    by_label: dict[str, list[dict]] = {}
    for arch, layers, reupload, seed in _run_cells(config):
        label = cell_label(config, arch, layers, reupload)
        run_dir = os.path.join(out, label, f"seed{seed}")
        if progress:
            print(f"[{label} seed {seed}] training...")
        row = train_one_run(config, tagged, arch, layers, reupload, seed,
                            run_dir, progress=progress)
        summary_rows.append([label, layers, reupload, seed]
                            + [row[f] for f in SUMMARY_FIELDS])
        by_label.setdefault(label, []).append(row)

    for label in sorted(by_label):
        rows = by_label[label]
        for stat, fn in (("mean", np.mean), ("std", np.std)):
            agg = []
            for f in SUMMARY_FIELDS:
                values = [r[f] for r in rows]
                agg.append(float(fn(values)) if all(v is not None for v in values) else None)
            summary_rows.append([label, "", "", stat] + agg)
    _write_csv(os.path.join(out, "summary.csv"),
               ["label", "layers", "reupload", "seed"] + SUMMARY_FIELDS, summary_rows)
    return out


# --- evaluation of stored checkpoints ------------------------------------------


def load_run(run_dir: str, image_shape: tuple[int, int]) -> tuple[ModelState, RunConfig]:
    """Rebuild the model of a finished run from its config echo and
    checkpoint."""
    cfg_path = os.path.join(run_dir, "config.cfg")
    ckpt_path = os.path.join(run_dir, "checkpoint.qckpt")
    for path in (cfg_path, ckpt_path):
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing run artifact: {path}")
    with open(cfg_path) as fh:
        config = parse_config(fh.read())
    train_cfg = config.train_config(config.archs[0], config.layers_list[0],
                                    config.reupload_list[0], config.seeds[0])
    model = build_model(train_cfg, image_shape)
    model.load_arrays(load_checkpoint(ckpt_path))
    return model, config


def run_evaluate(run_dir: str, out_path: str | None = None,
                 dataset: Dataset | None = None, n_ensemble: int | None = None,
                 tag: str = "test") -> str:
    """Evaluate a stored run on a dataset split; writes a report CSV."""
    config_probe = None
    if dataset is None:
        with open(os.path.join(run_dir, "config.cfg")) as fh:
            config_probe = parse_config(fh.read())
        dataset = resolve_dataset(config_probe)
    subset = dataset.subset(tag) if dataset.tags is not None else dataset
    model, config = load_run(run_dir, subset.images.shape[1:])
    n = n_ensemble or config.n_ensemble
    probs, votes = ensemble_outputs(model, subset.images, n, ("eval-" + tag,))
    report = build_eval_report(probs, votes, subset.labels,
                               config.calibration_bins, config.subset_reference)
    out_path = out_path or os.path.join(run_dir, f"eval_{tag}.csv")
    _write_csv(out_path, ["metric", "subset", "value"], report_rows(report))
    return out_path


# --- toy adversarial check --------------------------------------------------------


def run_toy_adversarial(out_dir: str, steps: int = 2000, seed: int = 0,
                        lr_generator: float = 0.002, lr_discriminator: float = 0.01,
                        disc_steps: int = 2, eval_every: int = 250,
                        n_draws: int = 1000) -> float:
    """Distribution-matching check of the adversarial loop without data.

    Trains the classical generator against the uniform prior with the
    likelihood disabled, writes the step trace and final pooled samples,
    and returns the final two-sample KS statistic.
    """
    os.makedirs(out_dir, exist_ok=True)
    cfg = TrainConfig(epochs=1, seed=seed, sampler="classical", alpha=0.0, beta=1.0,
                      lr_generator=lr_generator, lr_discriminator=lr_discriminator,
                      disc_steps=disc_steps)
    model = build_model(cfg, (28, 28))
    trace = train_prior_matching(model, steps, eval_every=eval_every)
    _write_csv(os.path.join(out_dir, "toy_trace.csv"),
               ["step", "logit_term", "disc", "ks"],
               [[r["step"], r["logit_term"], r["disc"], r.get("ks")] for r in trace])
    dump_weight_samples(model, n_draws // model.sampler.n_chunks or 1,
                        os.path.join(out_dir, "toy_samples.csv"))
    return prior_matching_ks(model, n_draws)


# --- report figures ----------------------------------------------------------------


def _discover_runs(results_dir: str) -> dict[str, list[str]]:
    """Map label -> sorted list of seed run dirs containing epochs.csv."""
    found: dict[str, list[str]] = {}
    for label in sorted(os.listdir(results_dir)):
        label_dir = os.path.join(results_dir, label)
        if not os.path.isdir(label_dir):
            continue
        runs = [
            os.path.join(label_dir, d)
            for d in sorted(os.listdir(label_dir))
            if d.startswith("seed")
            and os.path.exists(os.path.join(label_dir, d, "epochs.csv"))
        ]
        if runs:
            found[label] = runs
    return found


def _read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _curves_by_split(runs: list[str], split_name: str) -> tuple[list, list, list]:
    per_epoch: dict[int, list[float]] = {}
    for run in runs:
        for row in _read_csv(os.path.join(run, "epochs.csv")):
            if row["split"] == split_name:
                per_epoch.setdefault(int(row["epoch"]), []).append(float(row["accuracy"]))
    epochs = sorted(per_epoch)
    means = [float(np.mean(per_epoch[e])) for e in epochs]
    stds = [float(np.std(per_epoch[e])) for e in epochs]
    return epochs, means, stds


def _eval_value(run: str, metric: str, subset: str):
    path = os.path.join(run, "eval_test.csv")
    if not os.path.exists(path):
        return None
    for row in _read_csv(path):
        if row["metric"] == metric and row["subset"] == subset:
            return float(row["value"]) if row["value"] != "" else None
    return None


def run_report(results_dir: str, emit_svg: bool = True) -> list[str]:
    """Emit the figure families for a finished sweep; returns the paths.

    Figures whose inputs are missing are skipped with a printed notice
    naming the missing artifact.
    """
    runs_by_label = _discover_runs(results_dir)
    if not runs_by_label:
        raise FileNotFoundError(f"no run artifacts under {results_dir}")
    fig_dir = os.path.join(results_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    written: list[str] = []

    def emit(name, header, rows, figure=None):
        path = os.path.join(fig_dir, name + ".csv")
        _write_csv(path, header, rows)
        written.append(path)
        if emit_svg and figure is not None:
            svg_path = os.path.join(fig_dir, name + ".svg")
            figure.save(svg_path)
            written.append(svg_path)

    # training / validation curves
    for split_name in ("train", "validation"):
        rows, fig = [], svg.Figure(f"{split_name} accuracy over epochs",
                                   "epoch", "accuracy")
        any_data = False
        for label, runs in runs_by_label.items():
            epochs, means, stds = _curves_by_split(runs, split_name)
            if not epochs:
                continue
            any_data = True
            rows += [[label, e, m, s] for e, m, s in zip(epochs, means, stds)]
            fig.add_line(epochs, means, label=label,
                         band_low=[m - s for m, s in zip(means, stds)],
                         band_high=[m + s for m, s in zip(means, stds)])
        if any_data:
            emit(f"{split_name}_curves", ["label", "epoch", "mean", "std"], rows, fig)
        else:
            print(f"notice: no {split_name} rows in epochs.csv, curve figure skipped")

    # final test score box data
    rows = []
    fig = svg.Figure("final test accuracy by architecture", "architecture", "accuracy")
    pos = 0
    missing = []
    for label, runs in runs_by_label.items():
        values = [v for run in runs if (v := _eval_value(run, "accuracy", "all")) is not None]
        if not values:
            missing += [os.path.join(r, "eval_test.csv") for r in runs]
            continue
        q = np.percentile(values, [0, 25, 50, 75, 100])
        rows.append([label] + [float(v) for v in q])
        fig.add_box(pos, q, label=label)
        pos += 1
    if rows:
        emit("test_scores", ["label", "min", "q1", "median", "q3", "max"], rows, fig)
    if missing:
        print("notice: missing test evaluations, some box entries skipped: "
              + ", ".join(missing))

    # densities over seeds: confidence error and ensemble fraction
    for name, metric in (("confidence_error_density", "confidence_error"),
                         ("ensemble_fraction_density", "ensemble_fraction")):
        rows = []
        fig = svg.Figure(name.replace("_", " "), metric, "density")
        for label, runs in runs_by_label.items():
            for subset in ("correct", "incorrect"):
                values = [v for run in runs
                          if (v := _eval_value(run, metric, subset)) is not None]
                if len(values) < 2:
                    continue
                series = f"{label}/{subset}"
                if np.std(values, ddof=1) == 0.0:
                    rows.append([series, values[0], ""])
                    continue
                est = kde_density(np.array(values))
                rows += [[series, g, d] for g, d in zip(est.grid, est.density)]
                fig.add_line(est.grid, est.density, label=series)
        if rows:
            emit(name, ["series", "grid", "density"], rows, fig)
        else:
            print(f"notice: not enough evaluations for {name}, figure skipped")

    # calibration curves (mean bin stats across seeds)
    rows = []
    fig = svg.Figure("calibration", "mean confidence", "empirical accuracy")
    fig.add_line([0.0, 1.0], [0.0, 1.0], label="ideal")
    any_bins = False
    for label, runs in runs_by_label.items():
        bins: dict[str, list[tuple[float, float]]] = {}
        for run in runs:
            path = os.path.join(run, "eval_test.csv")
            if not os.path.exists(path):
                continue
            table = _read_csv(path)
            conf = {r["metric"]: float(r["value"]) for r in table
                    if r["subset"] == "confidence" and r["value"] != ""}
            acc = {r["metric"]: float(r["value"]) for r in table
                   if r["subset"] == "accuracy" and r["value"] != ""}
            for key in conf:
                if key in acc:
                    bins.setdefault(key, []).append((conf[key], acc[key]))
        points = sorted(
            (float(np.mean([c for c, _ in v])), float(np.mean([a for _, a in v])))
            for v in bins.values()
        )
        if points:
            any_bins = True
            rows += [[label, c, a] for c, a in points]
            fig.add_line([c for c, _ in points], [a for _, a in points], label=label)
    if any_bins:
        emit("calibration", ["label", "mean_confidence", "accuracy"], rows, fig)
    else:
        print("notice: no test evaluations found, calibration figure skipped")

    # pooled weight-sample densities
    rows = []
    fig = svg.Figure("pooled weight distribution density", "weight value", "density")
    grid = np.linspace(-1.2, 1.2, 241)
    for label, runs in runs_by_label.items():
        pooled = []
        for run in runs:
            path = os.path.join(run, "weight_samples.csv")
            if os.path.exists(path):
                pooled += [float(r["value"]) for r in _read_csv(path)]
        if len(pooled) < 2:
            print(f"notice: no weight samples for {label}, omitted from weight_kde")
            continue
        est = kde_density(np.array(pooled), grid)
        rows += [[label, g, d] for g, d in zip(est.grid, est.density)]
        fig.add_line(est.grid, est.density, label=label)
    if rows:
        emit("weight_kde", ["label", "grid", "density"], rows, fig)

    # difference vs accuracy scatter
    rows = []
    fig = svg.Figure("confidence difference vs test accuracy",
                     "difference", "accuracy")
    for label, runs in runs_by_label.items():
        xs, ys = [], []
        for run in runs:
            d = _eval_value(run, "difference", "all")
            a = _eval_value(run, "accuracy", "all")
            if d is not None and a is not None:
                xs.append(d)
                ys.append(a)
                rows.append([label, run.rsplit("seed", 1)[-1], d, a])
        if xs:
            fig.add_scatter(xs, ys, label=label)
    if rows:
        emit("difference_scatter", ["label", "seed", "difference", "accuracy"], rows, fig)
    else:
        print("notice: no evaluations found, difference scatter skipped")

    return written
