"""Command-line pipeline: generate/load data, grid-search the base classifiers,
GA-tune the ensemble weights, evaluate on the validation split, compare.

Every stage reads and writes files in ``--out`` so stages can be rerun
independently; ``pipeline`` runs them all and writes ``manifest.json``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import platform
import sys
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._io import atomic_write_text, dump_json, load_json
from ._kernels import BACKEND
from .classifiers import ClassifierKind, make_params
from .dataset import (
    Dataset,
    FoldAssignment,
    SynthSpec,
    generate_synthetic,
    load_csv,
    split_train_validation,
    stratified_kfold,
    write_csv,
)
from .ensemble import EnsembleModel, build_confidence_matrix, fit_ensemble
from .ga import GaConfig
from .metrics import auc, bootstrap_pauc_comparison, confusion, partial_auc, report, roc_curve
from .model_selection import GridSpec, default_grid, grid_search, write_grid_report

log = logging.getLogger("mcsga")

REPORT_HEADER = ["classifier", "accuracy", "precision", "sensitivity", "specificity", "pauc", "pauc_raw", "auc", "threshold"]
ENSEMBLE_LABEL = "MultipleClassifierSystem"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


@dataclass
class RunConfig:
    data: str | None = None
    out: str = "mcsga_out"
    seed: int = 0
    fraction: float = 0.8
    folds: int = 10
    window: tuple[float, float] = (0.9, 1.0)
    threshold_criterion: str = "accuracy"
    normalize_confidences: bool = False
    n_boot: int = 1000
    # synthetic data when ``data`` is unset
    n_instances: int = 2000
    positive_rate: float = 0.10
    n_attr: int = 30
    separation: float = 2.0
    # GA
    population_size: int = 1000
    iterations: int = 500
    mutation_rate: float = 0.1
    crossover_rate: float = 0.8
    elite_count: int = 1
    scaling_multiple: float = 2.0
    # grids: kind label -> {"axes": {...}, "fixed": {...}}; missing kinds use the preset
    grid_preset: str = "full"
    n_trees: int = 500
    grids: dict = field(default_factory=dict)

    def synth_spec(self) -> SynthSpec:
        return SynthSpec(
            n_instances=self.n_instances,
            positive_rate=self.positive_rate,
            n_attr=self.n_attr,
            class_separation=self.separation,
            seed=derive_seed(self.seed, "generate"),
        )

    def ga_config(self) -> GaConfig:
        return GaConfig(
            population_size=self.population_size,
            iterations=self.iterations,
            mutation_rate=self.mutation_rate,
            crossover_rate=self.crossover_rate,
            elite_count=self.elite_count,
            scaling_multiple=self.scaling_multiple,
            seed=derive_seed(self.seed, "tune"),
        )

    def grid_specs(self) -> dict[ClassifierKind, GridSpec]:
        specs = {}
        for kind in ClassifierKind:
            given = self.grids.get(kind.label)
            if given is not None:
                spec = GridSpec.from_dict(kind, given["axes"], given.get("fixed"))
            else:
                spec = preset_grid(kind, self.grid_preset)
            if kind is ClassifierKind.RANDOM_FOREST and "n_trees" not in dict(spec.fixed):
                spec = GridSpec(kind, spec.axes, (*spec.fixed, ("n_trees", self.n_trees)))
            specs[kind] = spec
        return specs

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["window"] = list(self.window)
        return d


def preset_grid(kind: ClassifierKind, preset: str) -> GridSpec:
    if preset == "full":
        return default_grid(kind)
    if preset == "quick":
        axes = {
            ClassifierKind.RANDOM_FOREST: {"mtry": (3, 6)},
            ClassifierKind.SVM_RADIAL: {"sigma": (0.01, 0.05), "c": (1.0,)},
            ClassifierKind.K_NEAREST: {"k": (9, 17)},
            ClassifierKind.LOGISTIC_REGRESSION: {"decay": (0.0, 1.0)},
            ClassifierKind.NAIVE_BAYES: {"fl": (0.0,), "use_kernel": (True, False)},
        }[kind]
        return GridSpec.from_dict(kind, axes)
    raise ValueError(f"unknown grid preset {preset!r}")


def derive_seed(master: int, stage: str) -> int:
    """Stage seed: a 32-bit word from SeedSequence([master, crc32(stage)])."""
    return int(np.random.SeedSequence([int(master), zlib.crc32(stage.encode())]).generate_state(1)[0])


# ------------------------------------------------------------------ config


def _parse_window(text) -> tuple[float, float]:
    if isinstance(text, (list, tuple)):
        lo, hi = text
    else:
        lo, hi = (float(v) for v in str(text).split(","))
    lo, hi = float(lo), float(hi)
    if not 0 <= lo < hi <= 1:
        raise argparse.ArgumentTypeError(f"window must satisfy 0 <= lo < hi <= 1, got {text}")
    return lo, hi


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).lower() in ("1", "true", "yes", "on")


_FLAG_TYPES = {
    "data": str,
    "out": str,
    "seed": int,
    "fraction": float,
    "folds": int,
    "window": _parse_window,
    "threshold_criterion": str,
    "normalize_confidences": _bool,
    "n_boot": int,
    "n_instances": int,
    "positive_rate": float,
    "n_attr": int,
    "separation": float,
    "population_size": int,
    "iterations": int,
    "mutation_rate": float,
    "crossover_rate": float,
    "elite_count": int,
    "scaling_multiple": float,
    "grid_preset": str,
    "n_trees": int,
}


def load_config(path) -> RunConfig:
    doc = load_json(path)
    unknown = set(doc) - {f.name for f in dataclasses.fields(RunConfig)}
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    if "window" in doc:
        doc["window"] = _parse_window(doc["window"])
    return RunConfig(**doc)


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for name in _FLAG_TYPES:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if cfg.threshold_criterion not in ("accuracy", "youden"):
        raise ValueError(f"threshold criterion must be accuracy or youden, got {cfg.threshold_criterion!r}")
    return cfg


# ------------------------------------------------------------------ stages


def _paths(out) -> dict[str, Path]:
    out = Path(out)
    return {
        "data": out / "data.csv",
        "train": out / "train.csv",
        "validation": out / "validation.csv",
        "folds": out / "folds.csv",
        "best_params": out / "best_params.json",
        "matrix": out / "confidence_matrix.csv",
        "history": out / "ga_history.csv",
        "bundle": out / "bundle",
        "report": out / "report.csv",
        "scores": out / "validation_scores.csv",
        "comparison": out / "comparison.json",
        "manifest": out / "manifest.json",
    }


def stage_generate(cfg: RunConfig) -> Dataset:
    p = _paths(cfg.out)
    data = load_csv(cfg.data) if cfg.data else generate_synthetic(cfg.synth_spec())
    write_csv(data, p["data"])
    return data


def stage_split(cfg: RunConfig):
    p = _paths(cfg.out)
    # data.csv from the generate stage, else the user file directly
    source = p["data"] if p["data"].exists() or not cfg.data else cfg.data
    data = load_csv(source)
    labeled = np.flatnonzero(data.y != 0)
    if len(labeled) < len(data):
        log.info("split: ignoring %d unlabeled rows", len(data) - len(labeled))
        data = data.subset(labeled)
    split = split_train_validation(data, cfg.fraction, derive_seed(cfg.seed, "split"))
    write_csv(split.train, p["train"])
    write_csv(split.validation, p["validation"])
    folds = stratified_kfold(split.train, cfg.folds, derive_seed(cfg.seed, "folds"))
    _write_folds(p["folds"], split.train, folds)
    return split, folds


def _write_folds(path, data: Dataset, folds: FoldAssignment):
    lines = ["pair_id,fold"] + [f"{pid},{int(f)}" for pid, f in zip(data.pair_ids, folds.fold_of)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def _read_folds(path, data: Dataset, k: int) -> FoldAssignment:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = {r["pair_id"]: int(r["fold"]) for r in csv.DictReader(fh)}
    try:
        return FoldAssignment(k, np.array([rows[pid] for pid in data.pair_ids]))
    except KeyError as exc:
        raise ValueError(f"{path} has no fold for pair {exc}") from None


def _load_train(cfg):
    p = _paths(cfg.out)
    train = load_csv(p["train"])
    folds = _read_folds(p["folds"], train, cfg.folds)
    return train, folds


def stage_train(cfg: RunConfig) -> dict:
    p = _paths(cfg.out)
    train, folds = _load_train(cfg)
    seed = derive_seed(cfg.seed, "train")
    best = {}
    for kind, spec in cfg.grid_specs().items():
        log.info("train: %s grid of %d points", kind.label, len(spec))
        params, scores = grid_search(spec, train, folds, cfg.window, seed)
        write_grid_report(Path(cfg.out) / f"grid_{kind.label}.csv", kind, scores)
        best[kind.label] = {"params": params.to_dict(), "cv_pauc": max(s.mean for s in scores)}
    dump_json(p["best_params"], best)
    return best


def _best_params(cfg):
    doc = load_json(_paths(cfg.out)["best_params"])
    return [make_params(kind, **doc[kind.label]["params"]) for kind in ClassifierKind]


def stage_tune(cfg: RunConfig) -> EnsembleModel:
    p = _paths(cfg.out)
    train, folds = _load_train(cfg)
    params = _best_params(cfg)
    seed = derive_seed(cfg.seed, "ensemble")
    matrix = build_confidence_matrix(train, folds, params, seed)
    atomic_write_text(p["matrix"], matrix.to_csv())
    model, _, result = fit_ensemble(
        train,
        folds,
        params,
        cfg.ga_config(),
        cfg.window,
        cfg.threshold_criterion,
        cfg.normalize_confidences,
        seed,
        matrix=matrix,
    )
    result.write_history(p["history"])
    model.metadata = {
        "cv_fitness": result.best_fitness,
        "params": {p_.kind.label: p_.to_dict() for p_ in params},
        "ga_evaluations": result.n_evaluations,
    }
    extra = {}
    for kind in ClassifierKind:
        grid = Path(cfg.out) / f"grid_{kind.label}.csv"
        if grid.exists():
            extra[grid.name] = grid.read_text(encoding="utf-8")
    model.save(p["bundle"], extra)
    return model


def _fmt(v) -> str:
    return "NA" if v is None else f"{v:.6f}"


def stage_evaluate(cfg: RunConfig) -> list[dict]:
    p = _paths(cfg.out)
    val = load_csv(p["validation"])
    model = EnsembleModel.load(p["bundle"])
    lo, hi = cfg.window
    conf = np.column_stack([m.confidence(val.X) for m in model.models])
    ens_scores = model.scores(val.X)
    rows = []
    columns = [(m.kind.label, conf[:, i], 0.5) for i, m in enumerate(model.models)]
    columns.append((ENSEMBLE_LABEL, ens_scores, model.alpha))
    for label, scores, thr in columns:
        preds = np.where(scores >= thr, 1, -1)
        rep = report(confusion(preds, val.y))
        curve = roc_curve(scores, val.y)
        curve.write_csv(Path(cfg.out) / f"roc_{label}.csv")
        pa = partial_auc(curve, lo, hi)
        rows.append(
            {
                "classifier": label,
                "accuracy": rep.accuracy,
                "precision": rep.precision,
                "sensitivity": rep.sensitivity,
                "specificity": rep.specificity,
                "pauc": pa.normalized,
                "pauc_raw": pa.raw_area,
                "auc": auc(curve),
                "threshold": thr,
            }
        )
    buf = io.StringIO()
    buf.write(",".join(REPORT_HEADER) + "\n")
    for r in rows:
        buf.write(",".join([r["classifier"], *(_fmt(r[k]) for k in REPORT_HEADER[1:])]) + "\n")
    atomic_write_text(p["report"], buf.getvalue())

    sbuf = io.StringIO()
    sbuf.write(",".join(["pair_id", "label", *(c[0] for c in columns)]) + "\n")
    for j, pid in enumerate(val.pair_ids):
        sbuf.write(",".join([pid, str(int(val.y[j])), *(repr(float(c[1][j])) for c in columns)]) + "\n")
    atomic_write_text(p["scores"], sbuf.getvalue())
    return rows


def stage_compare(cfg: RunConfig) -> dict:
    """Bootstrap the best single classifier (validation pAUC) against the ensemble."""
    p = _paths(cfg.out)
    with open(p["scores"], newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    labels = np.array([int(r[1]) for r in rows])
    cols = {name: np.array([float(r[i]) for r in rows]) for i, name in enumerate(header) if i >= 2}
    with open(p["report"], newline="", encoding="utf-8") as fh:
        rep = {r["classifier"]: float(r["pauc"]) for r in csv.DictReader(fh)}
    singles = [k for k in cols if k != ENSEMBLE_LABEL]
    best = max(singles, key=lambda k: (rep[k], -singles.index(k)))
    res = bootstrap_pauc_comparison(
        cols[best], cols[ENSEMBLE_LABEL], labels, cfg.window, cfg.n_boot, derive_seed(cfg.seed, "compare")
    )
    out = {
        "classifier_a": best,
        "classifier_b": ENSEMBLE_LABEL,
        "pauc_a": rep[best],
        "pauc_b": rep[ENSEMBLE_LABEL],
        "observed_difference": res.observed_difference,
        "n_boot": cfg.n_boot,
        "window": list(cfg.window),
        "p_value": res.p_value,
    }
    dump_json(p["comparison"], out)
    return out


def write_manifest(cfg: RunConfig) -> dict:
    config = cfg.to_dict()
    config.pop("out")  # keeps manifests comparable across output directories
    manifest = {
        "config": config,
        "seeds": {
            stage: derive_seed(cfg.seed, stage)
            for stage in ("generate", "split", "folds", "train", "ensemble", "tune", "compare")
        },
        "grids": {k.label: s.to_dict() for k, s in cfg.grid_specs().items()},
        "ga": dataclasses.asdict(cfg.ga_config()),
        "versions": {
            "mcsga": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "backend": BACKEND,
        },
    }
    dump_json(_paths(cfg.out)["manifest"], manifest)
    return manifest


def verify_outputs(cfg: RunConfig) -> None:
    """Re-read every pipeline output under its declared schema."""
    p = _paths(cfg.out)
    with open(p["report"], newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if next(reader) != REPORT_HEADER:
            raise ValueError("report.csv header mismatch")
        rows = list(reader)
    if len(rows) != len(ClassifierKind) + 1:
        raise ValueError(f"report.csv has {len(rows)} rows, expected {len(ClassifierKind) + 1}")
    for r in rows:
        pauc = float(r[REPORT_HEADER.index("pauc")])
        if not 0 <= pauc <= 1:
            raise ValueError(f"report.csv pAUC {pauc} outside [0, 1]")
        with open(Path(cfg.out) / f"roc_{r[0]}.csv", encoding="utf-8") as fh:
            if fh.readline().strip() != "threshold,fpr,tpr":
                raise ValueError(f"roc_{r[0]}.csv header mismatch")
    with open(p["history"], encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if lines[0] != "generation,best_fitness,mean_fitness" or len(lines) - 1 != cfg.iterations:
        raise ValueError("ga_history.csv malformed")
    load_json(p["manifest"])
    load_json(p["comparison"])
    EnsembleModel.load(p["bundle"])
    load_csv(p["train"])
    load_csv(p["validation"])


STAGES = {
    "generate": stage_generate,
    "split": stage_split,
    "train": stage_train,
    "tune": stage_tune,
    "evaluate": stage_evaluate,
    "compare": stage_compare,
}


def run_stage(name: str, cfg: RunConfig):
    log.info("stage %s", name)
    try:
        return STAGES[name](cfg)
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_pipeline(cfg: RunConfig) -> int:
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    write_manifest(cfg)
    for name in STAGES:
        run_stage(name, cfg)
    try:
        verify_outputs(cfg)
    except Exception as exc:
        raise StageError("verify", exc) from exc
    return 0


# ------------------------------------------------------------------ argparse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration; flags override its fields")
    common.add_argument("--data", help="input CSV (pair_id,attr_1..attr_n,label); synthetic data if omitted")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="master seed; every stage seed derives from it")
    common.add_argument("--folds", type=int, help="cross-validation folds (default 10)")
    common.add_argument("--window", type=_parse_window, help="specificity window lo,hi (default 0.9,1)")
    common.add_argument("--threshold-criterion", dest="threshold_criterion", choices=("accuracy", "youden"),
                        help="rule for the ensemble cut-point alpha (default accuracy)")
    common.add_argument("--fraction", type=float, help="training fraction of the split (default 0.8)")
    common.add_argument("--normalize-confidences", dest="normalize_confidences", type=_bool, metavar="BOOL",
                        help="min-max rescale each confidence column before weighting (default false)")
    common.add_argument("--n-boot", dest="n_boot", type=int, help="bootstrap resamples for compare (default 1000)")
    common.add_argument("--n-instances", dest="n_instances", type=int, help="synthetic rows (default 2000)")
    common.add_argument("--positive-rate", dest="positive_rate", type=float, help="synthetic positive share (default 0.1)")
    common.add_argument("--n-attr", dest="n_attr", type=int, help="synthetic attributes, a multiple of 5 (default 30)")
    common.add_argument("--separation", type=float, help="synthetic class separation")
    common.add_argument("--population-size", dest="population_size", type=int, help="GA population (default 1000)")
    common.add_argument("--iterations", type=int, help="GA generations (default 500)")
    common.add_argument("--mutation-rate", dest="mutation_rate", type=float, help="per-gene mutation probability (default 0.1)")
    common.add_argument("--crossover-rate", dest="crossover_rate", type=float, help="per-pair crossover probability (default 0.8)")
    common.add_argument("--elite-count", dest="elite_count", type=int, help="genomes carried over unchanged (default 1)")
    common.add_argument("--scaling-multiple", dest="scaling_multiple", type=float, help="linear fitness scaling constant (default 2)")
    common.add_argument("--grid-preset", dest="grid_preset", choices=("full", "quick"),
                        help="grids for kinds not given in the config (default full)")
    common.add_argument("--n-trees", dest="n_trees", type=int, help="random forest size (default 500)")
    common.add_argument("-v", "--verbose", action="store_true", help="log stage progress")

    parser = argparse.ArgumentParser(prog="mcsga", description=__doc__.split("\n\n")[0].replace("\n", " "))
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "write data.csv (synthetic, or a copy of --data)",
        "split": "stratified train/validation split and CV folds",
        "train": "grid-search the five base classifiers",
        "tune": "GA-tune ensemble weights and pick the threshold",
        "evaluate": "score every classifier and the ensemble on validation data",
        "compare": "bootstrap test: best single classifier vs ensemble",
        "pipeline": "run every stage",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "pipeline":
            return run_pipeline(cfg)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        run_stage(args.command, cfg)
    except StageError as exc:
        print(f"mcsga: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"mcsga: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
