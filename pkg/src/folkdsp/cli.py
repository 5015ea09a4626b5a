"""Command-line pipeline driver.

Subcommands: synth, ingest, train, eval, cluster, reduce, sweep, plot, frames.
Option values resolve as flags > FOLKDSP_* environment variables > TOML config
file (--config) > built-in defaults, and every run writes its fully resolved
configuration next to its outputs. Machine output goes to files, human logs to
stderr. Exit codes: 0 success, 1 usage, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import audio_io, evaluation, forest, mlp, spectral, svgplot, unsup
from . import features as feats
from . import synth as synthmod
from .errors import DataError, DataFault, FolkdspError, UsageFault
from .features import GENRES

ESTIMATOR_GRID = tuple(2**i for i in range(9))
CHOOSE_K_RANGE = tuple(range(2, 11))


def _log(message: str) -> None:
    click.echo(message, err=True)


def _write_run_config(directory: Path, name: str, params: dict) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / f"{name}_config.json", "w", encoding="utf-8") as fh:
        json.dump({"subcommand": name, "parameters": params}, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


@click.group(context_settings={"auto_envvar_prefix": "FOLKDSP"})
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="TOML file with per-subcommand option defaults.",
)
@click.pass_context
def cli(ctx, config):
    """Genre-identification pipeline for six traditional Colombian genres."""
    if config:
        with open(config, "rb") as fh:
            ctx.default_map = tomllib.load(fh)


@cli.command()
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--per-class", default=30, show_default=True, help="Files per genre.")
@click.option("--seed", default=0, show_default=True)
@click.option("--duration", default=3.0, show_default=True, help="Seconds per clip.")
def synth(out_dir, per_class, seed, duration):
    """Generate a six-class synthetic WAV corpus in the ingest layout."""
    out = Path(out_dir)
    written = synthmod.synth_corpus(out, per_class=per_class, seed=seed, duration=duration)
    _write_run_config(out, "synth", {"out_dir": str(out), "per_class": per_class, "seed": seed, "duration": duration})
    _log(f"wrote {len(written)} files under {out}")


def _extract_one(path: Path, genre: str, root: Path, max_seconds):
    clip = audio_io.load_wav(path)
    if max_seconds is not None:
        clip = audio_io.AudioClip(
            clip.samples[: int(max_seconds * clip.sample_rate)], clip.sample_rate, clip.source_id
        )
    vec = feats.extract_features(clip)
    song_id = path.relative_to(root).as_posix()
    return feats.FeatureVector(vec.values, song_id=song_id, label=genre)


@cli.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Feature CSV to write.")
@click.option("--max-seconds", default=None, type=float, help="Truncate clips before analysis.")
@click.option("--jobs", default=1, show_default=True, help="Parallel extraction workers.")
def ingest(root, out, max_seconds, jobs):
    """Extract features from a root/<Genre>/<song>.wav tree into a CSV."""
    root = Path(root)
    genre_dirs = sorted(p for p in root.iterdir() if p.is_dir() and not p.name.startswith("."))
    unknown = [p.name for p in genre_dirs if p.name not in GENRES]
    if unknown:
        raise DataError(
            f"unknown genre directories {unknown}; valid genres are {', '.join(GENRES)}"
        )

    tasks = []
    for genre_dir in genre_dirs:
        wavs = sorted(p for p in genre_dir.iterdir() if p.suffix.lower() == ".wav")
        if not wavs:
            _log(f"warning: no WAV files in {genre_dir}")
        tasks.extend((p, genre_dir.name) for p in wavs)

    def run(task):
        path, genre = task
        try:
            return _extract_one(path, genre, root, max_seconds)
        except DataFault as exc:
            _log(f"warning: skipping {path}: {exc}")
            return None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    vectors = [v for v in results if v is not None]
    ds = feats.dataset_from_vectors(vectors)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    feats.save_features(ds, out)
    _write_run_config(
        out.parent,
        "ingest",
        {"root": str(root), "out": str(out), "max_seconds": max_seconds, "jobs": jobs},
    )
    _log(f"extracted {ds.n_songs} of {len(tasks)} files -> {out}")


def _load_labeled(features_csv) -> feats.Dataset:
    ds = feats.load_features(features_csv)
    if any(not lab for lab in ds.labels):
        raise DataError("every row must carry a genre label for supervised runs")
    return ds


def _standardization_extra(params: feats.Standardization) -> dict:
    return {
        "standardization": {
            "mean": params.mean.tolist(),
            "std": params.std.tolist(),
            "constant": params.constant.astype(bool).tolist(),
        },
        "feature_columns": list(feats.FEATURE_COLUMNS),
    }


def _standardization_from_extra(extra: dict) -> feats.Standardization | None:
    block = extra.get("standardization")
    if not block:
        return None
    return feats.Standardization(
        mean=np.array(block["mean"], dtype=np.float64),
        std=np.array(block["std"], dtype=np.float64),
        constant=np.array(block["constant"], dtype=bool),
    )


def _write_reports(out_dir: Path, cm, report) -> None:
    with open(out_dir / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(evaluation.report_to_dict(report, cm), fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(out_dir / "metrics.txt", "w", encoding="utf-8") as fh:
        fh.write(evaluation.report_to_text(report, cm))


@cli.command()
@click.argument("features_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_kind", type=click.Choice(["rf", "mlp"]), required=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--train-frac", default=0.6, show_default=True)
@click.option("--val-frac", default=0.2, show_default=True)
@click.option("--test-frac", default=0.2, show_default=True)
@click.option("--standardize/--no-standardize", "do_standardize", default=True, show_default=True)
@click.option("--n-estimators", default=64, show_default=True, help="Random forest size.")
@click.option("--epochs", default=200, show_default=True, help="MLP training epochs.")
@click.option("--batch-size", default=16, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
def train(
    features_csv,
    model_kind,
    out_dir,
    seed,
    train_frac,
    val_frac,
    test_frac,
    do_standardize,
    n_estimators,
    epochs,
    batch_size,
    learning_rate,
):
    """Stratified split, model training, and Table-style evaluation report."""
    ds = _load_labeled(features_csv)
    train_ds, val_ds, test_ds = evaluation.stratified_split(
        ds, fractions=(train_frac, val_frac, test_frac), seed=seed
    )
    extra = {}
    if do_standardize:
        params = feats.fit_standardization(train_ds.matrix)
        train_ds = feats.standardize(train_ds, params)
        val_ds = feats.standardize(val_ds, params)
        test_ds = feats.standardize(test_ds, params)
        extra = _standardization_extra(params)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if model_kind == "rf":
        model = forest.fit_forest(
            train_ds.matrix, list(train_ds.labels), n_estimators=n_estimators, seed=seed, class_order=GENRES
        )
        forest.save_forest(model, out / "model.json", extra=extra)
        predictions, _ = forest.predict(model, test_ds.matrix)
    else:
        net = mlp.init(seed, layer_sizes=mlp.DEFAULT_LAYER_SIZES, class_order=GENRES)
        config = mlp.TrainConfig(epochs=epochs, batch_size=batch_size, learning_rate=learning_rate, seed=seed)
        net, report = mlp.train(
            net,
            (train_ds.matrix, list(train_ds.labels)),
            (val_ds.matrix, list(val_ds.labels)),
            config,
        )
        mlp.save_mlp(net, out / "model.json", extra=extra)
        mlp.report_to_csv(report, out / "train_report.csv")
        predictions, _ = mlp.predict(net, test_ds.matrix)
        _log(f"best validation epoch: {report.best_epoch}")

    cm = evaluation.confusion(list(test_ds.labels), list(predictions), class_order=GENRES)
    metrics_report = evaluation.metrics(cm)
    _write_reports(out, cm, metrics_report)
    _write_run_config(
        out,
        "train",
        {
            "features_csv": str(features_csv),
            "model": model_kind,
            "out_dir": str(out),
            "seed": seed,
            "fractions": [train_frac, val_frac, test_frac],
            "standardize": do_standardize,
            "n_estimators": n_estimators,
            "epochs": epochs,
            "batch_size": batch_size,
            "learning_rate": learning_rate,
        },
    )
    _log(f"{model_kind} test accuracy: {metrics_report.accuracy:.4f}")


def _load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    schema = doc.get("schema")
    if schema == forest.FOREST_SCHEMA:
        return forest.forest_from_json(doc) + ("rf",)
    if schema == mlp.MLP_SCHEMA:
        return mlp.mlp_from_json(doc) + ("mlp",)
    raise DataError(f"unrecognized model schema {schema!r}")


@cli.command(name="eval")
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("features_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default=None, type=click.Path(file_okay=False))
def eval_cmd(model_file, features_csv, out_dir):
    """Evaluate a saved model on a feature CSV; prints the metrics table."""
    model, extra, kind = _load_model(model_file)
    ds = _load_labeled(features_csv)
    matrix = ds.matrix
    params = _standardization_from_extra(extra)
    if params is not None:
        matrix = feats.apply_standardization(matrix, params)
    if kind == "rf":
        predictions, _ = forest.predict(model, matrix)
    else:
        predictions, _ = mlp.predict(model, matrix)
    cm = evaluation.confusion(list(ds.labels), list(predictions), class_order=GENRES)
    report = evaluation.metrics(cm)
    click.echo(evaluation.report_to_text(report, cm), nl=False)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_reports(out, cm, report)
        _write_run_config(
            out,
            "eval",
            {"model_file": str(model_file), "features_csv": str(features_csv), "out_dir": str(out)},
        )


def _prepared_matrix(ds: feats.Dataset, do_standardize: bool) -> np.ndarray:
    if not do_standardize:
        return ds.matrix
    return feats.apply_standardization(ds.matrix, feats.fit_standardization(ds.matrix))


@cli.command()
@click.argument("features_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--k", default=6, show_default=True)
@click.option("--mode", type=click.Choice(["raw", "pca", "tsne"]), default="raw", show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--standardize/--no-standardize", "do_standardize", default=True, show_default=True)
@click.option("--pca-components", default=10, show_default=True)
@click.option("--perplexity", default=30.0, show_default=True)
@click.option("--iterations", default=1000, show_default=True)
@click.option("--learning-rate", default=200.0, show_default=True)
@click.option("--minkowski-p", default=2.0, show_default=True)
def cluster(
    features_csv,
    k,
    mode,
    out_dir,
    seed,
    do_standardize,
    pca_components,
    perplexity,
    iterations,
    learning_rate,
    minkowski_p,
):
    """k-means in raw, PCA, or t-SNE space, with a captioned 2-D scatter."""
    ds = feats.load_features(features_csv)
    X = _prepared_matrix(ds, do_standardize)

    if mode == "raw":
        space = X
    elif mode == "pca":
        space = unsup.pca_transform(unsup.pca_fit(X, pca_components), X)
    else:
        config = unsup.TsneConfig(
            perplexity=perplexity,
            minkowski_p=minkowski_p,
            iterations=iterations,
            learning_rate=learning_rate,
            seed=seed,
        )
        space = unsup.tsne(X, config).points

    result = unsup.kmeans(space, k, seed=seed)
    sc = unsup.silhouette(space, result.assignments)
    if space.shape[1] > 2:
        proj = unsup.pca_fit(space, 2)
        display = unsup.pca_transform(proj, space)
        display_centroids = unsup.pca_transform(proj, result.centroids)
    else:
        display = space
        display_centroids = result.centroids

    caption = f"Clusters = {k}, inertia = {result.inertia:.0f}, sc = {sc:.3f}"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "clusters.csv",
        ("song_id", "label", "x", "y", "cluster"),
        (
            (ds.song_ids[i], ds.labels[i], _fmt(display[i, 0]), _fmt(display[i, 1]), int(result.assignments[i]))
            for i in range(ds.n_songs)
        ),
    )
    with open(out / "clusters.svg", "w", encoding="utf-8") as fh:
        fh.write(svgplot.scatter_svg(display, result.assignments.tolist(), caption, display_centroids))
    _write_run_config(
        out,
        "cluster",
        {
            "features_csv": str(features_csv),
            "k": k,
            "mode": mode,
            "out_dir": str(out),
            "seed": seed,
            "standardize": do_standardize,
            "pca_components": pca_components,
            "perplexity": perplexity,
            "iterations": iterations,
            "learning_rate": learning_rate,
            "minkowski_p": minkowski_p,
        },
    )
    _log(caption)


@cli.command()
@click.argument("features_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["pca", "tsne"]), required=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--standardize/--no-standardize", "do_standardize", default=True, show_default=True)
@click.option("--perplexity", default=30.0, show_default=True)
@click.option("--iterations", default=1000, show_default=True)
@click.option("--learning-rate", default=200.0, show_default=True)
@click.option("--minkowski-p", default=2.0, show_default=True)
def reduce(features_csv, method, out, seed, do_standardize, perplexity, iterations, learning_rate, minkowski_p):
    """Project songs to 2-D with PCA or t-SNE and export the embedding CSV."""
    ds = feats.load_features(features_csv)
    X = _prepared_matrix(ds, do_standardize)
    if method == "pca":
        embedding = unsup.pca_transform(unsup.pca_fit(X, 2), X)
    else:
        config = unsup.TsneConfig(
            perplexity=perplexity,
            minkowski_p=minkowski_p,
            iterations=iterations,
            learning_rate=learning_rate,
            seed=seed,
        )
        embedding = unsup.tsne(X, config).points
    out = Path(out)
    _write_csv(
        out,
        ("song_id", "label", "x", "y"),
        (
            (ds.song_ids[i], ds.labels[i], _fmt(embedding[i, 0]), _fmt(embedding[i, 1]))
            for i in range(ds.n_songs)
        ),
    )
    _write_run_config(
        out.parent,
        "reduce",
        {
            "features_csv": str(features_csv),
            "method": method,
            "out": str(out),
            "seed": seed,
            "standardize": do_standardize,
            "perplexity": perplexity,
            "iterations": iterations,
            "learning_rate": learning_rate,
            "minkowski_p": minkowski_p,
        },
    )
    _log(f"wrote {method} embedding for {ds.n_songs} songs -> {out}")


@cli.command()
@click.argument("features_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--standardize/--no-standardize", "do_standardize", default=True, show_default=True)
def sweep(features_csv, out_dir, seed, do_standardize):
    """Estimator-count sweep, choose-k table, and cumulative-variance curve."""
    ds = _load_labeled(features_csv)
    X = _prepared_matrix(ds, do_standardize)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = forest.complexity_sweep(X, np.array(ds.labels, dtype=object), ESTIMATOR_GRID, seed=seed)
    _write_csv(
        out / "estimator_sweep.csv",
        ("n_estimators", "train_error", "validation_error"),
        ((r.n_estimators, _fmt(r.train_error), _fmt(r.validation_error)) for r in rows),
    )

    ktable = unsup.choose_k(X, CHOOSE_K_RANGE, seed=seed)
    _write_csv(
        out / "choose_k.csv",
        ("k", "inertia", "silhouette"),
        ((r.k, _fmt(r.inertia), _fmt(r.silhouette)) for r in ktable),
    )

    curve = unsup.cumulative_variance(X)
    _write_csv(
        out / "cumulative_variance.csv",
        ("n_components", "cumulative_variance_ratio"),
        ((i + 1, _fmt(v)) for i, v in enumerate(curve)),
    )
    _write_run_config(
        out,
        "sweep",
        {"features_csv": str(features_csv), "out_dir": str(out), "seed": seed, "standardize": do_standardize},
    )
    _log(f"wrote estimator_sweep.csv, choose_k.csv, cumulative_variance.csv under {out}")


def _read_table(path: Path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    return header, rows


@cli.command()
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def plot(input_csv, out):
    """Render an exported CSV (embedding, clusters, or sweep table) as SVG."""
    path = Path(input_csv)
    header, rows = _read_table(path)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if header[:4] == ["song_id", "label", "x", "y"]:
        points = np.array([[float(r[2]), float(r[3])] for r in rows])
        if len(header) > 4 and header[4] == "cluster":
            groups = [int(r[4]) for r in rows]
        else:
            groups = [r[1] or "unlabeled" for r in rows]
        svg = svgplot.scatter_svg(points, groups, caption=path.stem)
    elif all(_is_number(cell) for row in rows for cell in row):
        xs = [float(r[0]) for r in rows]
        series = {name: [float(r[i]) for r in rows] for i, name in enumerate(header) if i > 0}
        svg = svgplot.curve_svg(xs, series, caption=path.stem, x_label=header[0])
    else:
        raise DataError(f"unrecognized table layout in {path}")
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    _write_run_config(out.parent, "plot", {"input_csv": str(path), "out": str(out)})
    _log(f"wrote {out}")


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


@cli.command()
@click.argument("wav_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--n-fft", default=2048, show_default=True)
@click.option("--hop-length", default=512, show_default=True)
def frames(wav_file, out, n_fft, hop_length):
    """Dump per-frame descriptors of one WAV to CSV (debug aid)."""
    clip = audio_io.resample(audio_io.load_wav(wav_file), audio_io.ANALYSIS_RATE)
    spec = spectral.stft(clip, n_fft=n_fft, hop_length=hop_length)
    series = audio_io.frame(clip, frame_length=n_fft, hop_length=hop_length)
    fb = spectral.mel_filterbank(feats.N_MELS, n_fft, clip.sample_rate)
    centroid = spectral.spectral_centroid(spec)
    rolloff = spectral.spectral_rolloff(spec, feats.ROLLOFF_PCT)
    bandwidth = spectral.spectral_bandwidth(spec)
    zcr = spectral.zero_crossing_rate(series)
    rms = spectral.rms_energy(series)
    chroma = spectral.chroma_stft(spec).values
    coeffs = spectral.mfcc(spec, fb, feats.N_MFCC)

    n = min(spec.n_frames, series.n_frames)  # plain framing yields fewer frames
    header = (
        ["frame_index", "centroid_hz", "rolloff_hz", "bandwidth_hz", "zcr", "rms"]
        + [f"chroma_{i}" for i in range(12)]
        + [f"mfcc_{i}" for i in range(feats.N_MFCC)]
    )
    rows = (
        [t, _fmt(centroid[t]), _fmt(rolloff[t]), _fmt(bandwidth[t]), _fmt(zcr[t]), _fmt(rms[t])]
        + [_fmt(v) for v in chroma[t]]
        + [_fmt(v) for v in coeffs[t]]
        for t in range(n)
    )
    _write_csv(Path(out), header, rows)
    _write_run_config(
        Path(out).parent,
        "frames",
        {"wav_file": str(wav_file), "out": str(out), "n_fft": n_fft, "hop_length": hop_length},
    )
    _log(f"wrote {n} frames -> {out}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        _log("aborted")
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except DataFault as exc:
        _log(f"error: {exc}")
        return 2
    except UsageFault as exc:
        _log(f"error: {exc}")
        return 1
    except FolkdspError as exc:
        _log(f"error: {exc}")
        return 3
    except Exception as exc:  # unexpected runtime failure
        _log(f"internal error: {exc!r}")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
