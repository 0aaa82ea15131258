"""Main CLI for lsselflearn."""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import click
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .config import effective_config, float_pair, float_tuple, provenance, str_tuple, write_json
from .data import make_split, write_dataset_csv
from .errors import ConfigError, SelfLearnError
from .harness import (
    DEFAULT_GROUP_KEYS,
    LABELED_FRACTION,
    N_UNLABELED,
    ClassifierKind,
    ClassifierSpec,
    CurveConfig,
    MinimaConfig,
    SweepConfig,
    compute_measure,
    read_results_csv,
    run_example_1d,
    run_fraction_curve,
    run_minima,
    run_seed_sweep,
    run_unlabeled_curve,
    summarize,
    write_results_csv,
    write_summary_csv,
    write_sweep_csv,
)
from .model import MEASURES, LabelEncoding, RidgeConfig
from .report import print_table, render_example_1d, render_minima
from .selflearning import BcdConfig, Variant
from .seeding import derive_seed
from .sources import resolve_dataset

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENVVAR = "LSSELFLEARN_OUTPUT_DIR"
CACHE_SUBDIR = ".cache"

CLASSIFIERS = {
    "supervised": ClassifierKind.SUPERVISED,
    "soft": ClassifierKind.SELF_LEARNING_SOFT,
    "hard": ClassifierKind.SELF_LEARNING_HARD,
    "oracle": ClassifierKind.ORACLE,
}


def handle_errors(fn: Callable) -> Callable:
    """Report package errors on standard error and exit with their family code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SelfLearnError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(e.exit_code)

    return wrapper


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _output_dir(path: Optional[str]) -> Optional[Path]:
    if not path:
        return None
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cache_dir(out: Optional[Path]) -> Optional[Path]:
    return out / CACHE_SUBDIR if out is not None else None


def _csv_option(parse: Callable[[Any], Any]) -> Callable:
    """click callback parsing a comma-separated value."""

    def callback(ctx, param, value):
        if value is None:
            return None
        try:
            return parse(value)
        except ValueError as exc:
            raise click.BadParameter(str(exc)) from exc

    return callback


def output_dir_option(default: Optional[str]) -> Callable:
    return click.option(
        "--output-dir",
        "-o",
        type=click.Path(file_okay=False),
        default=default,
        envvar=OUTPUT_DIR_ENVVAR,
        show_envvar=True,
        help="Directory for output files",
    )


def config_argument(fn: Callable) -> Callable:
    fn = click.option(
        "--config",
        "config_option",
        type=click.Path(exists=True, dir_okay=False),
        help="YAML config file (alternative to the CONFIG argument)",
    )(fn)
    return click.argument(
        "config", required=False, type=click.Path(exists=True, dir_okay=False)
    )(fn)


def model_options(fn: Callable) -> Callable:
    """Options shared by every command that fits classifiers."""
    options = [
        click.option("--lambda", "ridge_lambda", type=float, help="Ridge penalty (default 0)"),
        click.option(
            "--penalize-intercept/--no-penalize-intercept",
            default=None,
            help="Include the intercept in the ridge penalty",
        ),
        click.option("--max-iterations", type=int, help="BCD iteration cap (default 500)"),
        click.option(
            "--tolerance",
            "objective_tolerance",
            type=float,
            help="BCD relative objective decrease tolerance (default 1e-8)",
        ),
        click.option(
            "--standardize/--no-standardize",
            default=None,
            help="Scale features with statistics of the training rows",
        ),
        click.option("--encoding", help="Label codes m,n for the two classes (default -1,1)"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _config(cls, config: Optional[str], config_option: Optional[str], overrides: Dict[str, Any]):
    if config and config_option:
        raise ConfigError("give the config file as argument or via --config, not both")
    return effective_config(cls, config or config_option, overrides)


def _write_provenance(out: Path, command: str, cfg: Any, **extra: Any) -> None:
    write_json(out / "provenance.json", provenance(command, cfg, **extra))


@click.group()
@click.version_option(version=__version__)
@click.option("--verbose", "-v", is_flag=True, help="Log progress and BCD details to stderr")
def main(verbose: bool):
    """lsselflearn - least-squares self-learning with soft and hard pseudo-labels.

    Fits the supervised least-squares classifier and its two self-learning
    extensions, and runs deterministic learning-curve, seed-sweep and
    local-minima experiments.

    Example:

        # Fit soft-label self-learning on a synthetic dataset
        lsselflearn fit --data builtin:gaussians --classifier soft

        # Learning curve over the number of unlabeled objects
        lsselflearn curve-unlabeled curve.yaml --jobs 4 -o results/
    """
    _setup_logging(verbose)


@main.command()
@click.option("--data", "data_ref", default="builtin:gaussians", show_default=True,
              help="Dataset: builtin:gaussians?d=..., a CSV path or an http(s) URL")
@click.option("--classifier", type=click.Choice(sorted(CLASSIFIERS)), default="soft",
              show_default=True, help="Classifier to fit")
@click.option("--n-labeled", type=int, default=10, show_default=True, help="Labeled objects")
@click.option("--n-unlabeled", type=int, default=100, show_default=True,
              help="Unlabeled objects")
@click.option("--n-test", type=int, help="Test objects (default: all remaining rows)")
@click.option("--seed", type=int, default=0, show_default=True, help="Split and data seed")
@click.option("--label-column", default="class", show_default=True, help="CSV class column")
@click.option("--classes", help="Class symbols mapped to m,n (default: sorted)")
@click.option("--save-dataset", is_flag=True,
              help="Also write the resolved dataset to dataset.csv (needs --output-dir)")
@model_options
@output_dir_option(None)
@handle_errors
def fit(
    data_ref, classifier, n_labeled, n_unlabeled, n_test, seed, label_column, classes,
    ridge_lambda, penalize_intercept, max_iterations, objective_tolerance, standardize,
    encoding, save_dataset, output_dir,
):
    """Fit one classifier and print its weights and test metrics as JSON.

    Examples:

        lsselflearn fit --data builtin:gaussians --classifier soft --seed 7
        lsselflearn fit --data iris2.csv --classes setosa,versicolor --classifier hard
    """
    if save_dataset and not output_dir:
        raise ConfigError("--save-dataset needs --output-dir")
    out = _output_dir(output_dir)
    try:
        label_encoding = LabelEncoding(*float_pair(encoding)) if encoding else LabelEncoding()
        class_pair = tuple(str_tuple(classes)) if classes else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ridge = RidgeConfig(ridge_lambda or 0.0, bool(penalize_intercept))
    bcd = BcdConfig(
        max_iterations if max_iterations is not None else 500,
        objective_tolerance if objective_tolerance is not None else 1e-8,
        ridge,
    )

    ds = resolve_dataset(
        data_ref,
        label_column=label_column,
        classes=class_pair,
        seed=derive_seed(seed, "dataset"),
        cache_dir=_cache_dir(out),
    )
    if save_dataset:
        path = write_dataset_csv(ds, out / "dataset.csv", label_column=label_column)
        click.echo(f"Saved dataset to: {path}", err=True)
    if n_test is None:
        n_test = max(ds.rows - n_labeled - n_unlabeled, 0)
    split = make_split(
        ds, n_labeled, n_unlabeled, n_test, label_encoding,
        standardize if standardize is not None else True, seed,
    )
    spec = ClassifierSpec(CLASSIFIERS[classifier], ridge, bcd)
    outcome = spec.fit_detailed(split)

    metrics = {}
    if split.n_test:
        metrics = {m: compute_measure(m, outcome.weights, split) for m in MEASURES}
    payload = {
        "classifier": spec.name,
        "dataset": ds.name,
        "seed": seed,
        "n_labeled": split.n_labeled,
        "n_unlabeled": split.n_unlabeled,
        "n_test": split.n_test,
        "split_fingerprint": split.fingerprint,
        "weights": outcome.weights.tolist(),
        "iterations": outcome.iterations,
        "objective": outcome.objective,
        "converged": outcome.converged,
        "metrics": metrics,
    }
    click.echo(json.dumps(payload, indent=2, sort_keys=True))
    if out is not None:
        write_json(out / "model.json", payload)


@main.command("example-1d")
@click.option("--unlabeled", default="-1,4", show_default=True,
              callback=_csv_option(float_tuple), help="Unlabeled positions (may be empty)")
@click.option("--labeled", default="-1,1", show_default=True,
              callback=_csv_option(float_pair), help="Positions of the two labeled objects")
@click.option("--encoding", default="-1,1", show_default=True,
              callback=_csv_option(float_pair), help="Label codes m,n")
@click.option("--lambda", "ridge_lambda", type=float, default=0.0, show_default=True,
              help="Ridge penalty")
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON")
@output_dir_option(None)
@handle_errors
def example_1d(unlabeled, labeled, encoding, ridge_lambda, as_json, output_dir):
    """Show how the first self-learning step moves a 1-D decision boundary.

    Unlabeled objects already on the correct side beyond their class code
    leave the soft-label boundary where it is.

    Examples:

        lsselflearn example-1d --unlabeled=-1,4
        lsselflearn example-1d --unlabeled=-1,0.5 --json
    """
    example = run_example_1d(
        unlabeled, labeled, LabelEncoding(*encoding), RidgeConfig(ridge_lambda)
    )
    if as_json:
        click.echo(json.dumps(example.to_dict(), indent=2, sort_keys=True))
    else:
        click.echo(render_example_1d(example))

    out = _output_dir(output_dir)
    if out is not None:
        path = out / "example_1d.csv"
        example.plot_frame().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        click.echo(f"Saved to: {path}", err=True)


def curve_options(fn: Callable) -> Callable:
    options = [
        click.option("--dataset", help="Dataset reference (builtin:..., path or URL)"),
        click.option("--label-column", help="CSV class column"),
        click.option("--classes", help="Class symbols mapped to m,n"),
        click.option("--repeats", type=int, help="Number of repeats (default 250)"),
        click.option("--seed", "master_seed", type=int, help="Master seed (default 1)"),
        click.option("--measures", help=f"Measures to keep, from {','.join(MEASURES)}"),
        click.option("--jobs", type=int, default=1, show_default=True,
                     help="Repeats run concurrently"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _run_curve(protocol: str, runner: Callable, config, config_option, output_dir, jobs,
               overrides: Dict[str, Any]) -> None:
    cfg = _config(CurveConfig, config, config_option, overrides)
    out = _output_dir(output_dir)
    table = runner(cfg, jobs=jobs, cache_dir=_cache_dir(out))
    write_results_csv(table, out / "results.csv")
    _write_provenance(
        out,
        click.get_current_context().info_name,
        cfg,
        protocol=protocol,
        master_seed=cfg.master_seed,
        rows=len(table),
        fingerprints=dict(sorted(table.fingerprints.items())),
        failures=table.failures,
    )
    if table.failures:
        click.echo(f"{len(table.failures)} fits failed; see provenance.json", err=True)
    click.echo(f"Saved {len(table)} rows to: {out / 'results.csv'}", err=True)


@main.command("curve-unlabeled")
@config_argument
@curve_options
@click.option("--l-fixed", type=int, help="Labeled objects per repeat (default 10)")
@click.option("--u-grid", help="Unlabeled counts, e.g. 0,2,8,32,128,512")
@click.option("--test-size", type=int, help="Test objects per repeat (default 1000)")
@model_options
@output_dir_option(".")
@handle_errors
def curve_unlabeled(config, config_option, jobs, output_dir, **overrides):
    """Learning curve over the number of unlabeled objects.

    Writes results.csv (dataset,classifier,repeat,size_role,size,measure,value)
    and provenance.json to the output directory.

    Example:

        lsselflearn curve-unlabeled curve.yaml --measures AverageLossTest -o out/
    """
    _run_curve(N_UNLABELED, run_unlabeled_curve, config, config_option, output_dir, jobs,
               overrides)


@main.command("curve-fraction")
@config_argument
@curve_options
@click.option("--fractions", help="Labeled fractions, e.g. 0.1,0.2,0.5,1.0")
@click.option("--test-fraction", type=float, help="Held-out test fraction (default 0.2)")
@model_options
@output_dir_option(".")
@handle_errors
def curve_fraction(config, config_option, jobs, output_dir, **overrides):
    """Learning curve over the labeled fraction of a fixed training set.

    Example:

        lsselflearn curve-fraction --dataset data.csv --fractions 0.1,0.5,1.0
    """
    _run_curve(LABELED_FRACTION, run_fraction_curve, config, config_option, output_dir, jobs,
               overrides)


@main.command()
@config_argument
@click.option("--dataset", help="Dataset reference (builtin:..., path or URL)")
@click.option("--label-column", help="CSV class column")
@click.option("--classes", help="Class symbols mapped to m,n")
@click.option("--n-labeled", type=int, help="Labeled objects (default 10)")
@click.option("--n-unlabeled", type=int, help="Unlabeled objects (default 50)")
@click.option("--variant", "variants", multiple=True,
              type=click.Choice([v.value for v in Variant]),
              help="Variant to study (repeatable; default both)")
@click.option("--restarts", type=int, help="Random restarts per variant (default 50)")
@click.option("--seed", type=int, help="Instance and restart seed (default 1)")
@click.option("--dedup-tolerance", type=float, help="Relative objective tolerance (default 1e-6)")
@click.option("--weight-tolerance", type=float, help="Weight distance tolerance (default 1e-4)")
@click.option("--json", "as_json", is_flag=True, help="Print the reports as JSON")
@click.option("--jobs", type=int, default=1, show_default=True, help="Restarts run concurrently")
@model_options
@output_dir_option(".")
@handle_errors
def minima(config, config_option, as_json, jobs, output_dir, variants, **overrides):
    """Count the distinct local minima each self-learning variant reaches.

    Example:

        lsselflearn minima --restarts 50 --seed 1 -o out/
    """
    overrides["variants"] = list(variants) or None
    cfg = _config(MinimaConfig, config, config_option, overrides)
    out = _output_dir(output_dir)
    reports = run_minima(cfg, jobs=jobs, cache_dir=_cache_dir(out))
    payload = {name: report.to_dict() for name, report in reports.items()}
    write_json(out / "minima.json", payload)
    _write_provenance(out, "minima", cfg, seed=cfg.seed)

    if as_json:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        click.echo(render_minima(reports))


@main.command("seed-sweep")
@config_argument
@click.option("--seeds", help="Explicit seeds, e.g. 0,1,2")
@click.option("--n-seeds", type=int, help="Use seeds 0..N-1")
@click.option("--d", type=int, help="Dimensionality (default 2)")
@click.option("--separation", "mean_separation", type=float, help="Class mean distance")
@click.option("--prior", "class_prior", type=float, help="Probability of the second class")
@click.option("--n-labeled", type=int, help="Labeled objects (default 4)")
@click.option("--n-unlabeled", type=int, help="Unlabeled objects (default 200)")
@click.option("--n-test", type=int, help="Test objects (default 1000)")
@click.option("--jobs", type=int, default=1, show_default=True, help="Seeds run concurrently")
@model_options
@output_dir_option(".")
@handle_errors
def seed_sweep(config, config_option, seeds, n_seeds, jobs, output_dir, **overrides):
    """Per-seed test errors of supervised and self-learning classifiers.

    Example:

        lsselflearn seed-sweep --n-seeds 50 -o out/
    """
    if seeds and n_seeds is not None:
        raise ConfigError("give --seeds or --n-seeds, not both")
    if seeds:
        overrides["seeds"] = seeds
    elif n_seeds is not None:
        overrides["seeds"] = list(range(n_seeds))
    cfg = _config(SweepConfig, config, config_option, overrides)
    out = _output_dir(output_dir)
    frame = run_seed_sweep(cfg, jobs=jobs)
    write_sweep_csv(frame, out / "seed_sweep.csv")
    _write_provenance(out, "seed-sweep", cfg)

    overview = (
        frame.groupby("classifier", sort=True)
        .agg(mean_error=("error", "mean"), single_class_runs=("single_class", "sum"))
        .reset_index()
    )
    print_table(overview, title=f"{len(cfg.seeds)} seeds")


@main.command("summarize")
@click.argument("results_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--group-keys", default=",".join(DEFAULT_GROUP_KEYS), show_default=True,
              help="Columns to group by")
@output_dir_option(".")
@handle_errors
def summarize_command(results_csv, group_keys, output_dir):
    """Mean, standard deviation and count of every results group.

    Example:

        lsselflearn summarize out/results.csv --group-keys classifier,size,measure
    """
    summary = summarize(read_results_csv(results_csv), str_tuple(group_keys))
    out = _output_dir(output_dir)
    write_summary_csv(summary, out / "summary.csv")
    print_table(summary)


if __name__ == "__main__":
    main()
