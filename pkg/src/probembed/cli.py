"""Command-line surface: embed, predict, sample, compare.

Every command reads numeric CSVs, resolves a JSON config merged over
presets and defaults, and writes its outputs into --out.  Runs are
bit-reproducible for a fixed seed: floats are written with their
shortest round-trip repr and JSON is emitted with sorted keys.  Errors
leave on distinct exit codes (2 config, 3 data, 4 numerical) with a
one-line JSON reason on stderr.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import make_line
from .estimators import GraphGPPredictor, NeighborEmbedding, SpectralMap
from .exceptions import ConfigError, DataError, NumericalError
from .graphgp import GraphGPHyper, prior_sample
from .metrics import procrustes, rmse, silhouette
from .objective import CLAMP_COUNTER
from .optimize import write_trace
from .rng import SeededRng

SCHEMA_VERSION = "1"

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

SPECTRAL_PARAM_KEYS = {
    "pca": {"center"},
    "cmds": set(),
    "isomap": {"n_neighbors"},
    "kpca": {"kernel", "lengthscale", "degree", "offset"},
    "diffusion": {"lengthscale", "steps"},
    "le": {"n_neighbors", "epsilon", "laplacian", "ridge"},
    "lle": {"n_neighbors", "ridge"},
    "kernel": {"matrix"},
    "laplacian": {"matrix", "ridge"},
}
NEIGHBOR_PARAM_KEYS = {
    "sne": {"perplexity", "learning_rate", "momentum", "max_iter", "init",
            "init_scale"},
    "tsne": {"perplexity", "learning_rate", "momentum", "max_iter", "init",
             "init_scale"},
    "umap": {"n_neighbors", "a", "b", "learning_rate", "momentum", "max_iter",
             "init", "init_scale"},
}

CONFIG_KEYS = {
    "embed": {"input", "algo", "n_components", "seed", "params"},
    "predict": {"train", "test", "truth", "n_neighbors", "laplacian",
                "sigma_n_floor", "max_iter", "learning_rate", "seed"},
    "sample": {"n", "low", "high", "family", "a", "b", "laplacian", "nu",
               "t", "beta", "n_cols", "seed"},
    "compare": {"a", "b", "labels", "scale"},
}

PRESETS = {
    "fig5": {
        "command": "sample",
        "values": {
            "n": 200,
            "low": -3.0,
            "high": 3.0,
            "family": "umap",
            "a": 2.0,
            "b": 1.0,
            "laplacian": "normalized",
            "nu": "inf",
            "t": 12.5,
            "n_cols": 1,
        },
    },
}

SAMPLE_DEFAULTS = {
    "n": 100,
    "low": -3.0,
    "high": 3.0,
    "family": "umap",
    "a": 1.0,
    "b": 1.0,
    "laplacian": "normalized",
    "nu": "inf",
    "t": 1.0,
    "beta": 1.0,
    "n_cols": 1,
    "seed": 0,
}


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"kind": kind, "message": message}) + "\n")
    raise SystemExit(code)


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors keep the JSON error contract."""

    def error(self, message):
        _fail("config", message, EXIT_CONFIG)


def _float_token(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def read_csv(path):
    """Numeric CSV reader returning (array, header or None).

    Comma-separated UTF-8 with '.' decimals; a single leading row with
    any non-numeric cell is treated as a header.  Ragged or non-numeric
    body rows fail with their 1-based row number.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle) if row]
    if not rows:
        raise DataError(f"{path} is empty")
    header = None
    start = 0
    if any(not _float_token(cell) for cell in rows[0]):
        header = [cell.strip() for cell in rows[0]]
        start = 1
        if len(rows) == 1:
            raise DataError(f"{path} has a header but no data rows")
    width = len(rows[start])
    data = []
    for offset, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise DataError(
                f"{path} row {offset}: expected {width} columns, got {len(row)}"
            )
        try:
            data.append([float(cell) for cell in row])
        except ValueError as exc:
            raise DataError(f"{path} row {offset}: {exc}") from None
    return np.asarray(data, dtype=float), header


def read_labels(path):
    """Single-column label file; values kept as stripped strings."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"labels file not found: {path}")
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle) if row]
    if not rows:
        raise DataError(f"{path} is empty")
    values = [row[0].strip() for row in rows]
    if values and values[0].lower() in ("label", "labels", "class", "target"):
        values = values[1:]
    if not values:
        raise DataError(f"{path} has a header but no data rows")
    return np.asarray(values)


def write_csv(path, array, columns):
    """Write a 2-d array with shortest round-trip float formatting."""
    array = np.atleast_2d(np.asarray(array, dtype=float))
    if len(columns) != array.shape[1]:
        raise DataError(
            f"{len(columns)} column names for {array.shape[1]} columns"
        )
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(",".join(columns) + "\n")
        for row in array:
            handle.write(",".join(repr(float(value)) for value in row) + "\n")


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _load_config_file(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as handle:
            loaded = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(loaded, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return loaded


def _resolve_config(command, args):
    """Defaults, then preset values, then the config file, then flags."""
    config = {}
    if args.preset is not None:
        preset = PRESETS.get(args.preset)
        if preset is None:
            raise ConfigError(
                f"unknown preset {args.preset!r}; available: "
                f"{sorted(PRESETS)}"
            )
        if preset["command"] != command:
            raise ConfigError(
                f"preset {args.preset!r} applies to the "
                f"{preset['command']} command"
            )
        config.update(preset["values"])
    if args.config is not None:
        config.update(_load_config_file(args.config))
    if args.seed is not None:
        config["seed"] = args.seed
    allowed = CONFIG_KEYS[command]
    unknown = sorted(set(config) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown config keys for {command}: {unknown}; "
            f"allowed: {sorted(allowed)}"
        )
    return config


def _require(config, key, command):
    if key not in config:
        raise ConfigError(f"{command} requires config key {key!r}")
    return config[key]


def _expect_type(config, key, kinds, label):
    if key in config and not isinstance(config[key], kinds):
        raise ConfigError(f"config key {key!r} must be {label}")


_NUMBER = (int, float)


def _validate_params(algo, params):
    if not isinstance(params, dict):
        raise ConfigError("config key 'params' must be an object")
    if algo in SPECTRAL_PARAM_KEYS:
        allowed = SPECTRAL_PARAM_KEYS[algo]
    else:
        allowed = NEIGHBOR_PARAM_KEYS[algo]
    unknown = sorted(set(params) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown parameters for algo {algo!r}: {unknown}; "
            f"allowed: {sorted(allowed)}"
        )
    return params


def cmd_embed(config, out_dir):
    """Embed a CSV: writes embedding.csv, metadata.json, trace.jsonl."""
    algo = _require(config, "algo", "embed")
    known = set(SPECTRAL_PARAM_KEYS) | set(NEIGHBOR_PARAM_KEYS)
    if not isinstance(algo, str) or algo not in known:
        raise ConfigError(f"unknown algo {algo!r}; available: {sorted(known)}")
    ingestion = algo in ("kernel", "laplacian")
    _expect_type(config, "input", str, "a path string")
    _expect_type(config, "n_components", int, "an integer")
    _expect_type(config, "seed", int, "an integer")
    n_components = config.get("n_components", 2)
    seed = config.get("seed", 0)
    params = _validate_params(algo, config.get("params", {}))
    input_path = config.get("input")
    if input_path is None and not ingestion:
        raise ConfigError("embed requires config key 'input'")

    metadata = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": "embed",
        "config": {"input": input_path, "algo": algo,
                   "n_components": n_components, "seed": seed,
                   "params": params},
    }
    out_dir = Path(out_dir)
    if algo in SPECTRAL_PARAM_KEYS:
        if ingestion:
            matrix_path = params.get("matrix")
            if not isinstance(matrix_path, str):
                raise ConfigError(
                    f"algo {algo!r} requires params.matrix as a path string"
                )
            matrix, _ = read_csv(matrix_path)
            params = dict(params, matrix=matrix)
            data_arg = None
        else:
            data_arg, _ = read_csv(input_path)
        estimator = SpectralMap(algo=algo, n_components=n_components, **params)
        embedding = estimator.fit_transform(data_arg)
        metadata["result"] = {
            "noise_hat": float(estimator.noise_),
            "clamped": bool(estimator.clamped_),
            "used_components": [int(i) for i in estimator.used_components_],
        }
    else:
        try:
            estimator = NeighborEmbedding(family=algo,
                                          n_components=n_components,
                                          seed=seed, **params)
            estimator._config()
        except DataError as exc:
            raise ConfigError(str(exc)) from None
        data, _ = read_csv(input_path)
        CLAMP_COUNTER.reset()
        embedding = estimator.fit_transform(data)
        trace_path = out_dir / "trace.jsonl"
        write_trace(estimator.trace_, trace_path)
        metadata["result"] = {
            "trace": trace_path.name,
            "initial_loss": estimator.trace_[0].loss,
            "final_loss": estimator.trace_[-1].loss,
            "clamp_events": CLAMP_COUNTER.count,
        }
    columns = [f"x{i + 1}" for i in range(embedding.shape[1])]
    write_csv(out_dir / "embedding.csv", embedding, columns)
    write_json(out_dir / "metadata.json", metadata)


def cmd_predict(config, out_dir):
    """Predict test features via the shared-graph GP; writes a report."""
    train_path = _require(config, "train", "predict")
    test_path = _require(config, "test", "predict")
    for key in ("train", "test", "truth", "laplacian"):
        _expect_type(config, key, str, "a path string" if key != "laplacian"
                     else "a string")
    for key in ("sigma_n_floor", "learning_rate"):
        _expect_type(config, key, _NUMBER, "a number")
    for key in ("n_neighbors", "max_iter", "seed"):
        _expect_type(config, key, int, "an integer")
    y_train, _ = read_csv(train_path)
    y_test, _ = read_csv(test_path)
    predictor = GraphGPPredictor(
        n_neighbors=config.get("n_neighbors", 15),
        laplacian=config.get("laplacian", "normalized"),
        max_iter=config.get("max_iter", 300),
        learning_rate=config.get("learning_rate", 0.05),
        sigma_n_floor=config.get("sigma_n_floor", 1e-3),
    )
    predictions, variances = predictor.fit(y_train).predict(y_test,
                                                            return_var=True)
    out_dir = Path(out_dir)
    columns = [f"y{i + 1}" for i in range(predictions.shape[1])]
    write_csv(out_dir / "predicted.csv", predictions, columns)
    write_csv(out_dir / "variance.csv", variances.reshape(-1, 1), ["variance"])

    report = {"rmse": None}
    if "truth" in config:
        truth, _ = read_csv(config["truth"])
        report["rmse"] = rmse(predictions, truth)
    hyper = predictor.hyper_
    report["hyper"] = {"kappa": hyper.kappa, "sigma_s": hyper.sigma_s,
                       "sigma_n": hyper.sigma_n, "beta": hyper.beta}
    write_json(out_dir / "report.json", report)
    metadata = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": "predict",
        "config": {
            "train": str(train_path),
            "test": str(test_path),
            "truth": str(config["truth"]) if "truth" in config else None,
            "n_neighbors": predictor.n_neighbors,
            "laplacian": predictor.laplacian,
            "max_iter": predictor.max_iter,
            "learning_rate": predictor.learning_rate,
            "sigma_n_floor": predictor.sigma_n_floor,
        },
        "result": {"hyper": report["hyper"],
                   "fit_loglik_final": predictor.fit_trace_[-1]},
    }
    write_json(out_dir / "metadata.json", metadata)


def cmd_sample(config, out_dir):
    """Sample the latent -> adjacency -> covariance -> feature chain."""
    merged = dict(SAMPLE_DEFAULTS)
    merged.update(config)
    for key in ("n", "n_cols", "seed"):
        _expect_type(merged, key, int, "an integer")
    for key in ("low", "high", "a", "b", "t", "beta"):
        _expect_type(merged, key, _NUMBER, "a number")
    if merged["family"] not in ("sne", "tsne", "umap"):
        raise ConfigError(f"unknown family {merged['family']!r}")
    if merged["laplacian"] not in ("ordinary", "normalized"):
        raise ConfigError(f"unknown laplacian {merged['laplacian']!r}")
    nu = merged["nu"]
    if nu not in (1, "inf"):
        raise ConfigError(f"config key 'nu' must be 1 or 'inf', got {nu!r}")

    latent_rng, chain_rng = SeededRng(merged["seed"]).spawn(2)
    latents = make_line(merged["n"], merged["low"], merged["high"],
                        seed=latent_rng)
    hyper = GraphGPHyper(beta=float(merged["beta"]), t=float(merged["t"]))
    adjacency, samples = prior_sample(
        latents, hyper, chain_rng, n_cols=merged["n_cols"],
        family=merged["family"], a=merged["a"], b=merged["b"],
        laplacian=merged["laplacian"], nu=nu,
    )

    out_dir = Path(out_dir)
    write_csv(out_dir / "latents.csv", latents,
              [f"x{i + 1}" for i in range(latents.shape[1])])
    edge_rows = np.argwhere(np.triu(adjacency.a_sym, k=1) > 0)
    with open(out_dir / "edges.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write("i,j\n")
        for i, j in edge_rows:
            fh.write(f"{i},{j}\n")
    write_csv(out_dir / "samples.csv", samples,
              [f"y{i + 1}" for i in range(samples.shape[1])])
    metadata = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": "sample",
        "config": {key: merged[key] for key in sorted(merged)},
        "result": {"n_edges": int(len(edge_rows))},
    }
    write_json(out_dir / "metadata.json", metadata)


def cmd_compare(config, out_dir):
    """Procrustes-compare two embedding CSVs; writes report.json."""
    a_path = _require(config, "a", "compare")
    b_path = _require(config, "b", "compare")
    for key in ("a", "b", "labels"):
        _expect_type(config, key, str, "a path string")
    _expect_type(config, "scale", bool, "a boolean")
    scale = config.get("scale", True)
    a, _ = read_csv(a_path)
    b, _ = read_csv(b_path)
    result = procrustes(a, b, scale=scale)
    report = {
        "procrustes_residual": result.residual,
        "scale": scale,
        "silhouette_a": None,
        "silhouette_b": None,
    }
    if "labels" in config:
        labels = read_labels(config["labels"])
        report["silhouette_a"] = silhouette(a, labels)
        report["silhouette_b"] = silhouette(b, labels)
    write_json(Path(out_dir) / "report.json", report)


def build_parser():
    parser = _Parser(prog="probembed",
                     description="Probabilistic embeddings toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("embed", "embed a data CSV"),
        ("predict", "predict unseen rows through a shared graph"),
        ("sample", "sample the generative chain"),
        ("compare", "compare two embedding CSVs"),
    ):
        command = sub.add_parser(name, help=text)
        command.add_argument("--config", help="JSON config path")
        command.add_argument("--seed", type=int, help="random seed override")
        command.add_argument("--out", default=".", help="output directory")
        command.add_argument("--preset", help="named parameter preset")
    return parser


COMMANDS = {
    "embed": cmd_embed,
    "predict": cmd_predict,
    "sample": cmd_sample,
    "compare": cmd_compare,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args.command, args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](config, out_dir)
    except ConfigError as exc:
        _fail("config", str(exc), EXIT_CONFIG)
    except DataError as exc:
        _fail("data", str(exc), EXIT_DATA)
    except NumericalError as exc:
        _fail("numerical", str(exc), EXIT_NUMERICAL)
    except OSError as exc:
        _fail("data", str(exc), EXIT_DATA)
    return 0


if __name__ == "__main__":
    sys.exit(main())
