"""Experiment harness: spec files, trace persistence, reference minima,
solver comparison, and the SVM accuracy pipeline.

Experiment specs are INI files with [dataset], [objective], [run] sections
and one [solver NAME] section per solver; the svm command additionally reads
an [svm] section. All randomness flows from seeds recorded in the spec, and
trace CSVs are written atomically (temp file, then rename) with exact float
round-tripping via repr. Wall-clock columns are measurement only and carry
no determinism guarantee.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
import os
import tempfile
import time
import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .datasets import Dataset, normalize_rows, parse_libsvm, subsample, synth_linear
from .errors import (
    BudgetExhaustedError,
    ComparabilityError,
    LabelError,
    ParameterError,
    ParseError,
)
from .objectives import Objective, make_objective
from .solvers import (
    SolverConfig,
    TraceRecord,
    _EPOCH_FNS,
    epoch_rng,
    init_state,
    run,
)

CSV_HEADER = "epoch,effective_passes,wall_time_s,objective"
SVM_CSV_HEADER = CSV_HEADER + ",train_accuracy,test_accuracy"
COMPARE_TOLERANCES = (1e-2, 1e-4, 1e-6)
SVM_ALGORITHMS = ("fsvrg_nonsmooth", "svrsg", "sgd")


# ---------------------------------------------------------------------------
# experiment specification


@dataclass(frozen=True)
class DatasetSpec:
    path: str | None = None
    kind: str = "classification"
    n: int = 1000
    d: int = 10
    noise: float = 0.0
    seed: int = 0
    declared_dim: int | None = None
    subsample: int | None = None
    subsample_seed: int = 0
    normalize: bool = True


@dataclass(frozen=True)
class ObjectiveSpec:
    loss: str = "logistic"
    lam1: float = 0.0
    lam2: float = 0.0


@dataclass(frozen=True)
class SvmSpec:
    lam: float = 1e-5
    train_fraction: float = 0.1
    split_seed: int = 0
    one_vs_rest: bool = False


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    solvers: dict = field(default_factory=dict)
    seeds: tuple[int, ...] = (0,)
    outdir: str = "results"
    svm: SvmSpec | None = None


_DATASET_TYPES = {
    "path": str, "kind": str, "n": int, "d": int, "noise": float, "seed": int,
    "declared_dim": int, "subsample": int, "subsample_seed": int,
    "normalize": bool,
}
_OBJECTIVE_TYPES = {"loss": str, "lam1": float, "lam2": float}
_SOLVER_TYPES = {
    "algorithm": str, "step_size": float, "m1": int, "growth": float,
    "epochs": int, "batch_size": int, "seed": int, "theta": float,
    "sc_restart": bool, "projection_radius": float, "weights": str,
    "katyusha_theta1": float, "katyusha_theta2": float,
}
_SVM_TYPES = {
    "lam": float, "train_fraction": float, "split_seed": int,
    "one_vs_rest": bool,
}


def _convert(section: str, key: str, raw: str, typ):
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError:
        raise ParseError(f"[{section}] {key}: cannot read {raw!r} as {typ.__name__}") from None


def _read_section(parser, section, types, target_fields):
    out = {}
    if not parser.has_section(section):
        return out
    for key, raw in parser.items(section):
        if key not in types:
            raise ParseError(f"[{section}] unknown key {key!r}")
        if key not in target_fields:
            continue
        out[key] = _convert(section, key, raw, types[key])
    return out


def parse_spec(text_or_path) -> ExperimentSpec:
    """Read an experiment spec from an INI file path or raw text."""
    parser = configparser.ConfigParser()
    if isinstance(text_or_path, (str, Path)) and os.path.exists(str(text_or_path)):
        parser.read(str(text_or_path))
    else:
        try:
            parser.read_string(str(text_or_path))
        except configparser.Error as exc:
            raise ParseError(f"bad spec file: {exc}") from None

    ds_fields = {f.name for f in fields(DatasetSpec)}
    dataset = DatasetSpec(**_read_section(parser, "dataset", _DATASET_TYPES, ds_fields))
    objective = ObjectiveSpec(
        **_read_section(parser, "objective", _OBJECTIVE_TYPES,
                        {f.name for f in fields(ObjectiveSpec)})
    )

    solvers = {}
    for section in parser.sections():
        if not section.startswith("solver"):
            continue
        name = section[len("solver"):].strip()
        if not name or not name.replace("_", "").replace("-", "").isalnum():
            raise ParseError(f"[{section}]: solver sections are named like [solver fsvrg]")
        opts = _read_section(parser, section, _SOLVER_TYPES, set(_SOLVER_TYPES))
        opts.setdefault("algorithm", name)
        solvers[name] = SolverConfig(**opts)

    seeds = (0,)
    outdir = "results"
    if parser.has_section("run"):
        if parser.has_option("run", "seeds"):
            try:
                seeds = tuple(int(s) for s in parser.get("run", "seeds").split())
            except ValueError:
                raise ParseError("[run] seeds: expected whitespace-separated integers") from None
            if not seeds:
                raise ParseError("[run] seeds: need at least one seed")
        if parser.has_option("run", "outdir"):
            outdir = parser.get("run", "outdir")

    svm = None
    if parser.has_section("svm"):
        svm = SvmSpec(**_read_section(parser, "svm", _SVM_TYPES,
                                      {f.name for f in fields(SvmSpec)}))

    return ExperimentSpec(dataset, objective, solvers, seeds, outdir, svm)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def spec_to_ini(spec: ExperimentSpec) -> str:
    """Serialize a spec back to INI text (lossless round-trip)."""
    out = io.StringIO()

    def emit(section, pairs):
        rows = [(k, v) for k, v in pairs if v is not None]
        if not rows:
            return
        out.write(f"[{section}]\n")
        for k, v in rows:
            out.write(f"{k} = {_format_value(v)}\n")
        out.write("\n")

    emit("dataset", [(f.name, getattr(spec.dataset, f.name)) for f in fields(DatasetSpec)])
    emit("objective", [(f.name, getattr(spec.objective, f.name)) for f in fields(ObjectiveSpec)])
    emit("run", [("seeds", " ".join(str(s) for s in spec.seeds)), ("outdir", spec.outdir)])
    for name, cfg in spec.solvers.items():
        emit(f"solver {name}", [(f.name, getattr(cfg, f.name)) for f in fields(SolverConfig)])
    if spec.svm is not None:
        emit("svm", [(f.name, getattr(spec.svm, f.name)) for f in fields(SvmSpec)])
    return out.getvalue()


# ---------------------------------------------------------------------------
# dataset and objective construction


def build_dataset(dspec: DatasetSpec) -> Dataset:
    if dspec.path is not None:
        path = Path(dspec.path)
        if not path.exists():
            raise ParameterError(f"dataset file not found: {path}")
        ds = parse_libsvm(path.read_text(), declared_dim=dspec.declared_dim)
    else:
        if dspec.kind not in ("classification", "regression"):
            raise ParameterError(f"[dataset] kind: unknown {dspec.kind!r}")
        ds, _ = synth_linear(dspec.n, dspec.d, dspec.noise, dspec.seed, kind=dspec.kind)
    if dspec.subsample is not None:
        ds = subsample(ds, dspec.subsample, dspec.subsample_seed)
    if dspec.normalize:
        ds = normalize_rows(ds)
    else:
        warnings.warn(
            "rows are not normalized to unit length; default step sizes assume "
            "unit-norm rows and may be invalid",
            stacklevel=2,
        )
    return ds


def build_objective(spec: ExperimentSpec, ds: Dataset | None = None) -> Objective:
    if ds is None:
        ds = build_dataset(spec.dataset)
    return make_objective(ds, spec.objective.loss, spec.objective.lam1, spec.objective.lam2)


def objective_fingerprint(obj: Objective) -> str:
    """Content hash identifying (dataset, loss, regularizer) for comparability."""
    h = hashlib.sha256()
    indptr, indices, data = obj.dataset.csr
    for arr in (indptr, indices, data, obj.dataset.labels):
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(f"{obj.loss.name}|{obj.reg.lam1!r}|{obj.reg.lam2!r}|{obj.dataset.dim}".encode())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# trace persistence


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_trace_csv(trace) -> str:
    rows = [CSV_HEADER]
    for rec in trace:
        rows.append(
            f"{rec.epoch},{rec.effective_passes!r},{rec.wall_time_s!r},{rec.objective!r}"
        )
    return "\n".join(rows) + "\n"


def parse_trace_csv(text: str) -> list[TraceRecord]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ParseError(f"expected header {CSV_HEADER!r}")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 4:
            raise ParseError(f"expected 4 columns, got {ln!r}")
        out.append(
            TraceRecord(
                epoch=int(parts[0]),
                effective_passes=float(parts[1]),
                wall_time_s=float(parts[2]),
                objective=float(parts[3]),
            )
        )
    return out


def trace_path(outdir, solver_name: str, seed: int) -> Path:
    return Path(outdir) / f"{solver_name}.seed{seed}.csv"


# ---------------------------------------------------------------------------
# commands


def run_experiment(spec: ExperimentSpec) -> list[Path]:
    """Run every (solver, seed) combination and persist one CSV per run."""
    if not spec.solvers:
        raise ParameterError("spec has no [solver ...] sections")
    obj = build_objective(spec)
    outdir = Path(spec.outdir)
    written = []
    meta = {
        "objective": objective_fingerprint(obj),
        "loss": obj.loss.name,
        "lam1": obj.reg.lam1,
        "lam2": obj.reg.lam2,
        "n": obj.n,
        "dim": obj.dim,
        "solvers": sorted(spec.solvers),
        "seeds": list(spec.seeds),
    }
    _atomic_write(outdir / "experiment.json", json.dumps(meta, indent=2) + "\n")
    for name, cfg in spec.solvers.items():
        for seed in spec.seeds:
            result = run(obj, replace(cfg, seed=seed))
            path = trace_path(outdir, name, seed)
            _atomic_write(path, emit_trace_csv(result.trace))
            written.append(path)
    return written


@dataclass(frozen=True)
class RefMin:
    value: float
    method: str
    x: np.ndarray
    epochs_used: int


def reference_minimum(obj: Objective, tol: float = 1e-12,
                      max_epochs: int = 40000, method: str = "auto") -> RefMin:
    """Estimate the optimal objective value.

    Ridge-family objectives (squared loss, smooth regularizer) use the
    normal-equations closed form. Everything else runs the deterministic
    full-batch prox solver (batch_size=n, momentum weight 1) until two
    successive epoch objectives differ by less than tol; running out of
    budget raises with the best value found so far attached. `method` can
    force either route (useful for cross-checking one against the other).
    """
    if method not in ("auto", "normal_equations", "full_batch_prox"):
        raise ParameterError(f"unknown refmin method {method!r}")
    use_closed_form = obj.loss.name == "squared" and obj.reg.smooth
    if method == "normal_equations" and not use_closed_form:
        raise ParameterError("normal equations only apply to ridge-family objectives")
    if method == "full_batch_prox":
        use_closed_form = False
    if use_closed_form:
        A = obj.dataset.dense()
        b = obj.dataset.labels
        gram = A.T @ A / obj.n + obj.reg.lam1 * np.eye(obj.dim)
        x_star = np.linalg.solve(gram, A.T @ b / obj.n)
        return RefMin(obj.phi(x_star), "normal_equations", x_star, 0)

    algo = "fsvrg" if obj.loss.smooth else "fsvrg_nonsmooth"
    cfg = SolverConfig(
        algorithm=algo,
        theta=1.0,
        batch_size=obj.n,
        m1=32,
        growth=1.0,
        epochs=1,
        sc_restart=False,
    )
    epoch_fn = _EPOCH_FNS[algo]
    state = init_state(obj)
    prev = obj.phi(state.x)
    best = prev
    best_x = state.x.copy()
    for s in range(1, max_epochs + 1):
        epoch_fn(obj, cfg, state, epoch_rng(0, s))
        value = obj.phi(state.x)
        if value < best:
            best, best_x = value, state.x.copy()
        if abs(prev - value) < tol:
            return RefMin(best, "full_batch_prox", best_x, s)
        prev = value
    raise BudgetExhaustedError(
        f"no convergence to {tol:g} within {max_epochs} epochs", best
    )


def compute_refmin(spec: ExperimentSpec) -> RefMin:
    """Reference minimum for a spec's objective, persisted to a sidecar file."""
    obj = build_objective(spec)
    ref = reference_minimum(obj)
    payload = {
        "value": ref.value,
        "method": ref.method,
        "epochs_used": ref.epochs_used,
        "objective": objective_fingerprint(obj),
    }
    _atomic_write(Path(spec.outdir) / "refmin.json", json.dumps(payload, indent=2) + "\n")
    return ref


def milestone_passes(trace, refmin: float, tolerance: float) -> float | None:
    """Effective passes at the first recorded point with gap <= tolerance."""
    for rec in trace:
        if rec.objective - refmin <= tolerance:
            return rec.effective_passes
    return None


def _median_or_none(values):
    vals = [np.inf if v is None else v for v in values]
    med = float(np.median(vals))
    return None if not np.isfinite(med) else med


def compare_traces(outdir) -> dict:
    """Aggregate all trace CSVs in a run directory against its refmin.

    Returns {solver: {tolerance: median_passes_or_None}} plus writes
    comparison.csv (long format; every row exists in some raw trace) and
    summary.csv. Never interpolates between recorded points.
    """
    outdir = Path(outdir)
    meta_path = outdir / "experiment.json"
    ref_path = outdir / "refmin.json"
    if not meta_path.exists():
        raise ComparabilityError(f"{meta_path} not found; run the experiment first")
    if not ref_path.exists():
        raise ComparabilityError(f"{ref_path} not found; compute the refmin first")
    meta = json.loads(meta_path.read_text())
    ref = json.loads(ref_path.read_text())
    if ref.get("objective") != meta.get("objective"):
        raise ComparabilityError(
            "refmin.json was computed for a different objective than experiment.json"
        )
    refmin = float(ref["value"])

    traces = {}
    for path in sorted(outdir.glob("*.seed*.csv")):
        solver, seed_part = path.stem.rsplit(".seed", maxsplit=1)
        if solver not in meta["solvers"]:
            raise ComparabilityError(
                f"{path.name}: solver {solver!r} is not part of this experiment"
            )
        traces.setdefault(solver, {})[int(seed_part)] = parse_trace_csv(path.read_text())
    if not traces:
        raise ComparabilityError(f"no trace CSVs found in {outdir}")

    comp_rows = ["solver,seed,epoch,effective_passes,objective,gap"]
    for solver in sorted(traces):
        for seed in sorted(traces[solver]):
            for rec in traces[solver][seed]:
                gap = rec.objective - refmin
                comp_rows.append(
                    f"{solver},{seed},{rec.epoch},{rec.effective_passes!r},"
                    f"{rec.objective!r},{gap!r}"
                )
    _atomic_write(outdir / "comparison.csv", "\n".join(comp_rows) + "\n")

    summary: dict = {}
    sum_rows = ["solver,tolerance,median_passes,n_reached,n_seeds"]
    for solver in sorted(traces):
        summary[solver] = {}
        for tol in COMPARE_TOLERANCES:
            marks = [
                milestone_passes(trace, refmin, tol)
                for trace in traces[solver].values()
            ]
            med = _median_or_none(marks)
            summary[solver][tol] = med
            reached = sum(m is not None for m in marks)
            med_txt = "unreached" if med is None else repr(med)
            sum_rows.append(f"{solver},{tol!r},{med_txt},{reached},{len(marks)}")
    _atomic_write(outdir / "summary.csv", "\n".join(sum_rows) + "\n")
    return summary


# ---------------------------------------------------------------------------
# SVM pipeline


def split_train_test(ds: Dataset, train_fraction: float, seed: int):
    """Seeded deterministic partition into train and test datasets."""
    if not 0.0 < train_fraction < 1.0:
        raise ParameterError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.n)
    n_train = max(1, int(round(train_fraction * ds.n)))
    n_train = min(n_train, ds.n - 1)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = Dataset(tuple(ds.examples[i] for i in train_idx), ds.dim)
    test = Dataset(tuple(ds.examples[i] for i in test_idx), ds.dim)
    return train, test


def _accuracy_binary(ds: Dataset, x: np.ndarray) -> float:
    scores = ds.dense() @ x
    pred = np.where(scores > 0, 1.0, -1.0)
    return float(np.mean(pred == ds.labels))


def _relabel(ds: Dataset, positive: float) -> Dataset:
    examples = tuple(
        replace(ex, label=1.0 if ex.label == positive else -1.0) for ex in ds.examples
    )
    return Dataset(examples, ds.dim)


def run_svm_solver(train: Dataset, test: Dataset, cfg: SolverConfig, lam: float,
                   one_vs_rest: bool) -> tuple[list[TraceRecord], list[float], list[float]]:
    """Hinge-loss training with per-epoch train/test accuracy measurements.

    Binary problems need labels in {-1, +1}; with one_vs_rest, one binary
    subproblem per class runs in lockstep and predictions take the class
    with the largest score. The recorded objective is the mean over the
    per-class objectives.
    """
    classes = np.unique(train.labels)
    if not one_vs_rest:
        if not set(classes) <= {-1.0, 1.0}:
            raise LabelError(
                "labels must be -1/+1 for binary SVM; pass one_vs_rest for multi-class"
            )
        problems = [train]
        model_classes = None
    else:
        if classes.shape[0] < 2:
            raise LabelError("need at least two classes")
        problems = [_relabel(train, c) for c in classes]
        model_classes = classes

    objectives = [make_objective(p, "hinge", lam1=lam / 2.0) for p in problems]
    epoch_fn = _EPOCH_FNS[cfg.algorithm]
    states = [init_state(o) for o in objectives]

    dense_train = train.dense()
    dense_test = test.dense()

    def measure():
        if model_classes is None:
            x = states[0].snapshot
            tr = float(np.mean(np.where(dense_train @ x > 0, 1.0, -1.0) == train.labels))
            te = float(np.mean(np.where(dense_test @ x > 0, 1.0, -1.0) == test.labels))
        else:
            W = np.stack([st.snapshot for st in states])
            tr = float(np.mean(model_classes[np.argmax(dense_train @ W.T, axis=1)] == train.labels))
            te = float(np.mean(model_classes[np.argmax(dense_test @ W.T, axis=1)] == test.labels))
        obj_val = float(np.mean([o.phi(st.snapshot) for o, st in zip(objectives, states)]))
        return obj_val, tr, te

    t0 = time.perf_counter()
    passes = 0.0
    obj_val, tr, te = measure()
    trace = [TraceRecord(0, 0.0, 0.0, obj_val)]
    train_acc, test_acc = [tr], [te]
    n = train.n
    for s in range(1, cfg.epochs + 1):
        for st, o in zip(states, objectives):
            epoch_fn(o, cfg, st, epoch_rng(cfg.seed, s))
        m = states[0].inner
        if cfg.algorithm != "sgd":
            passes += 1.0
        passes += m * cfg.batch_size / n
        obj_val, tr, te = measure()
        trace.append(TraceRecord(s, passes, time.perf_counter() - t0, obj_val))
        train_acc.append(tr)
        test_acc.append(te)
    return trace, train_acc, test_acc


def emit_svm_csv(trace, train_acc, test_acc) -> str:
    rows = [SVM_CSV_HEADER]
    for rec, tr, te in zip(trace, train_acc, test_acc):
        rows.append(
            f"{rec.epoch},{rec.effective_passes!r},{rec.wall_time_s!r},"
            f"{rec.objective!r},{tr!r},{te!r}"
        )
    return "\n".join(rows) + "\n"


def run_svm_experiment(spec: ExperimentSpec) -> list[Path]:
    """Train/test split, then hinge-loss runs for every (solver, seed)."""
    if spec.svm is None:
        raise ParameterError("spec has no [svm] section")
    solvers = spec.solvers or {
        name: SolverConfig(algorithm=name) for name in SVM_ALGORITHMS
    }
    for name, cfg in solvers.items():
        if cfg.algorithm not in SVM_ALGORITHMS:
            raise ParameterError(
                f"solver {name}: {cfg.algorithm} cannot train hinge loss; "
                f"choose from {SVM_ALGORITHMS}"
            )
    ds = build_dataset(spec.dataset)
    train, test = split_train_test(ds, spec.svm.train_fraction, spec.svm.split_seed)
    outdir = Path(spec.outdir)
    written = []
    for name, cfg in solvers.items():
        for seed in spec.seeds:
            trace, tr, te = run_svm_solver(
                train, test, replace(cfg, seed=seed), spec.svm.lam, spec.svm.one_vs_rest
            )
            path = outdir / f"svm.{name}.seed{seed}.csv"
            _atomic_write(path, emit_svm_csv(trace, tr, te))
            written.append(path)
    return written
