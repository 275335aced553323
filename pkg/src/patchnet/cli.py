"""Command-line pipeline driver.

Subcommands: ingest, label, preprocess, train, predict, evaluate,
baseline, folds.  Exit codes: 0 success, 1 usage error, 2 data error.
Every run writes a manifest next to its primary output; an optional
flat key=value config file overrides built-in defaults, and explicit
flags override the file.  PATCHNET_SEED serves as a fallback seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .codeprep import FunctionNameTable, build_function_table
from .core import Label, RawCommit
from .evalkit import chrono_folds, keyword_baseline, metrics
from .ingest import (
    ParseError,
    build_balanced_dataset,
    check_eligibility,
    extract_stable_evidence,
    label_commit,
    load_commits,
    read_rc_ids,
    write_commits_jsonl,
)
from .model import HyperParams
from .preprocess import PatchDims, assemble_tensors, code_token_stream, message_token_stream, read_tensor_file, write_tensor_file
from .trainer import (
    TrainConfig,
    TrainingError,
    dataset_accuracy,
    load_checkpoint,
    save_checkpoint,
    score_items,
    train,
)
from .vocab import build_vocab, load_vocab_pair, save_vocab_pair

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

SCALAR_METRICS = ("accuracy", "precision", "recall", "f1", "auc")


class UsageError(Exception):
    """Bad flags or arguments; maps to exit code 1."""


class DataError(Exception):
    """Unreadable or inconsistent input data; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so run() owns exit codes."""

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("PATCHNET_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"PATCHNET_SEED must be an integer, got {env!r}")
    return 0


def _write_manifest(args, seed, inputs, outputs, started_at) -> None:
    """RunManifest JSON beside the primary (first) output path."""
    config = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "command", "config")
    }
    obj = {
        "command": args.command,
        "config": config,
        "seed": seed,
        "inputs": list(inputs),
        "outputs": list(outputs),
        "tool_version": __version__,
        "started_at": started_at,
        "finished_at": _utc_now(),
    }
    path = outputs[0] + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _parse_bool(raw: str, key: str) -> bool:
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"config key {key!r} expects a boolean, got {raw!r}")


def _convert_config_value(action: argparse.Action, raw: str, key: str):
    if isinstance(action.const, bool) or isinstance(action.default, bool):
        return _parse_bool(raw, key)
    if action.type is not None:
        try:
            return action.type(raw)
        except (TypeError, ValueError):
            raise UsageError(f"config key {key!r}: cannot parse {raw!r}")
    return raw


def _apply_config(parser, subparsers_by_name, args, argv):
    """Second parse with file values as defaults; argv still wins."""
    values = _read_config_file(args.config)
    sub = subparsers_by_name[args.command]
    defaults = {}
    for key, raw in values.items():
        action = next(
            (a for a in sub._actions if a.dest == key and key not in ("help", "config")),
            None,
        )
        if action is None:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        defaults[key] = _convert_config_value(action, raw, key)
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _filter_sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise UsageError(f"--filter-sizes expects comma-separated ints, got {text!r}")
    if not sizes:
        raise UsageError("--filter-sizes must name at least one size")
    return sizes


# ---------------------------------------------------------------------------
# Shared IO helpers


def _write_jsonl(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True))
            fh.write("\n")


def _read_score_rows(path: str) -> list[dict]:
    rows = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read scores file: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: bad JSON: {exc}")
        if "score" not in obj:
            raise DataError(f"{path}:{lineno}: missing 'score'")
        if "true_label" not in obj:
            raise DataError(f"{path}:{lineno}: missing 'true_label'")
        rows.append(obj)
    if not rows:
        raise DataError(f"{path}: no score rows")
    return rows


def _truth_to_int(value, where: str) -> int:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int) and value in (0, 1):
        return value
    if isinstance(value, str):
        try:
            return Label.from_string(value).to_int()
        except ValueError:
            pass
    raise DataError(f"{where}: true_label must be 0/1 or stable/non-stable")


def _functions_to_json_obj(table: FunctionNameTable) -> dict:
    return {
        "retained": sorted(table.retained),
        "defined_in": {p: sorted(n) for p, n in sorted(table.defined_in.items())},
    }


def _functions_from_json_obj(obj: dict) -> FunctionNameTable:
    return FunctionNameTable(
        retained=frozenset(obj.get("retained", ())),
        defined_in={
            p: frozenset(names) for p, names in obj.get("defined_in", {}).items()
        },
    )


def _read_functions_file(path: str) -> FunctionNameTable:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read functions file: {exc}")
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: bad JSON: {exc}")
    return _functions_from_json_obj(obj)


def _load_commits_checked(path: str) -> list[RawCommit]:
    try:
        return load_commits(path)
    except OSError as exc:
        raise DataError(f"cannot read commits: {exc}")


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_ingest(args) -> int:
    started = _utc_now()
    seed = _resolve_seed(args)
    mainline = _load_commits_checked(args.mainline)
    stable = _load_commits_checked(args.stable)
    rc_ids = read_rc_ids(args.rc_ids) if args.rc_ids else set()
    evidence = extract_stable_evidence(stable, rc_ids)

    eligible = [c for c in mainline if check_eligibility(c).eligible]
    labeled = [
        (c, c.label if c.label is not None else label_commit(c, evidence))
        for c in eligible
    ]
    dataset = build_balanced_dataset(labeled, seed=seed)
    write_commits_jsonl(args.out, dataset)

    n_stable, n_non = dataset.counts()
    print(
        f"ingest: {len(mainline)} mainline, {len(eligible)} eligible, "
        f"{n_stable} stable + {n_non} non-stable written to {args.out}"
    )
    print(f"provenance: {dataset.provenance}")
    inputs = [args.mainline, args.stable] + ([args.rc_ids] if args.rc_ids else [])
    _write_manifest(args, seed, inputs, [args.out], started)
    return EXIT_OK


def _cmd_label(args) -> int:
    started = _utc_now()
    commits = _load_commits_checked(args.dataset)
    stable = _load_commits_checked(args.stable)
    rc_ids = read_rc_ids(args.rc_ids) if args.rc_ids else set()
    evidence = extract_stable_evidence(stable, rc_ids)

    pairs = [(c, label_commit(c, evidence)) for c in commits]
    write_commits_jsonl(args.out, pairs)

    n_stable = sum(1 for _, lab in pairs if lab is Label.STABLE)
    print(
        f"label: {n_stable} stable, {len(pairs) - n_stable} non-stable "
        f"written to {args.out}"
    )
    inputs = [args.dataset, args.stable] + ([args.rc_ids] if args.rc_ids else [])
    _write_manifest(args, None, inputs, [args.out], started)
    return EXIT_OK


def _cmd_preprocess(args) -> int:
    started = _utc_now()
    commits = _load_commits_checked(args.dataset)
    if not commits:
        raise DataError(f"{args.dataset}: no commits")
    dims = PatchDims(
        msg_len=args.msg_len,
        files=args.files,
        hunks=args.hunks,
        lines=args.lines,
        words=args.words,
    )
    table = build_function_table(commits)
    msg_vocab = build_vocab(message_token_stream(commits), "message", args.min_count)
    code_vocab = build_vocab(code_token_stream(commits, table), "code", args.min_count)

    patches = [
        assemble_tensors(c, table, (msg_vocab, code_vocab), dims) for c in commits
    ]
    write_tensor_file(args.out, patches, dims)
    save_vocab_pair(msg_vocab, code_vocab, args.vocab_out)
    functions_out = args.functions_out or args.out + ".functions.json"
    with open(functions_out, "w", encoding="utf-8") as fh:
        json.dump(_functions_to_json_obj(table), fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(
        f"preprocess: {len(patches)} patches -> {args.out} "
        f"(message vocab {len(msg_vocab)}, code vocab {len(code_vocab)}, "
        f"{len(table.retained)} retained functions)"
    )
    _write_manifest(
        args, None, [args.dataset], [args.out, args.vocab_out, functions_out], started
    )
    return EXIT_OK


def _cmd_train(args) -> int:
    started = _utc_now()
    seed = _resolve_seed(args)
    patches, dims = read_tensor_file(args.tensors)
    if not patches:
        raise DataError(f"{args.tensors}: no patches")
    unlabeled = [p.commit_id for p in patches if p.label is None]
    if unlabeled:
        raise DataError(
            f"{args.tensors}: {len(unlabeled)} unlabeled patches "
            f"(first: {unlabeled[0]})"
        )
    msg_vocab, code_vocab = load_vocab_pair(args.vocab)
    functions = (
        _read_functions_file(args.functions)
        if args.functions
        else FunctionNameTable.empty()
    )

    hp = HyperParams(
        d_msg=args.d_msg,
        d_code=args.d_code,
        filter_sizes=_filter_sizes(args.filter_sizes),
        n_filters=args.filters,
        fc_size=args.fc_size,
        msg_len=dims.msg_len,
        files=dims.files,
        hunks=dims.hunks,
        lines=dims.lines,
        words=dims.words,
        dropout=args.dropout,
        l2_reg_lambda=args.l2,
        threshold=args.threshold,
        variant=args.variant,
    )
    config = TrainConfig(
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        patience=args.patience,
        learning_rate=args.learning_rate,
        seed=seed,
        shuffle=not args.no_shuffle,
    )

    try:
        result = train(patches, hp, config, msg_vocab, code_vocab)
    except IndexError as exc:
        raise DataError(f"tensor indices do not fit the vocabulary: {exc}")
    for epoch, value in enumerate(result.history.epoch_losses, start=1):
        print(f"epoch {epoch}: loss {value:.6f}")
    accuracy = dataset_accuracy(patches, result.params, hp)
    print(
        f"train: {result.history.epochs_run} epochs "
        f"(best {result.history.best_epoch}, loss {result.history.best_loss:.6f}, "
        f"stopped_early={result.history.stopped_early}), "
        f"train accuracy {accuracy:.4f}"
    )
    save_checkpoint(args.out, result.params, hp, msg_vocab, code_vocab, functions)
    print(f"checkpoint written to {args.out}")
    inputs = [args.tensors, args.vocab] + ([args.functions] if args.functions else [])
    _write_manifest(args, seed, inputs, [args.out], started)
    return EXIT_OK


def _is_tensor_file(path: str) -> bool:
    try:
        with open(path, "rb") as fh:
            return fh.read(4) == b"PNTD"
    except OSError as exc:
        raise DataError(f"cannot read patches: {exc}")


def _cmd_predict(args) -> int:
    started = _utc_now()
    bundle = load_checkpoint(args.checkpoint)
    if _is_tensor_file(args.in_path):
        patches, dims = read_tensor_file(args.in_path)
        if dims != bundle.hp.dims:
            raise DataError(
                f"tensor dims {dims} do not match checkpoint dims {bundle.hp.dims}"
            )
    else:
        commits = _load_commits_checked(args.in_path)
        patches = [
            assemble_tensors(
                c,
                bundle.functions,
                (bundle.message_vocab, bundle.code_vocab),
                bundle.hp.dims,
            )
            for c in commits
        ]
    if not patches:
        raise DataError(f"{args.in_path}: no patches")

    scores = score_items(patches, bundle.params, bundle.hp)
    rows = []
    for p, s in zip(patches, scores):
        row = {"commit_id": p.commit_id, "score": s.z, "label": s.label.value}
        if p.label is not None:
            row["true_label"] = p.label.value
        rows.append(row)
    rows.sort(key=lambda r: (-r["score"], r["commit_id"]))
    _write_jsonl(args.out, rows)

    n_stable = sum(1 for r in rows if r["label"] == Label.STABLE.value)
    print(
        f"predict: {len(rows)} patches scored "
        f"({n_stable} stable at threshold {bundle.hp.threshold}) -> {args.out}"
    )
    _write_manifest(args, None, [args.checkpoint, args.in_path], [args.out], started)
    return EXIT_OK


def _report_to_row(path: str, report) -> dict:
    obj = report.to_json_obj()
    obj["scores_file"] = path
    return obj


def _cmd_evaluate(args) -> int:
    started = _utc_now()
    reports = []
    for path in args.scores:
        rows = _read_score_rows(path)
        scores = [float(r["score"]) for r in rows]
        labels = [
            _truth_to_int(r["true_label"], f"{path} row {i + 1}")
            for i, r in enumerate(rows)
        ]
        reports.append((path, metrics(scores, labels, args.threshold)))

    if len(reports) == 1:
        path, report = reports[0]
        report_obj = report.to_json_obj()
        summary = report
    else:
        per_fold = [_report_to_row(path, rep) for path, rep in reports]
        values = {
            key: np.array([rep.to_json_obj()[key] for _, rep in reports])
            for key in SCALAR_METRICS
        }
        report_obj = {
            "folds": per_fold,
            "mean": {k: float(v.mean()) for k, v in values.items()},
            "std_population": {k: float(v.std(ddof=0)) for k, v in values.items()},
            "std_sample": {k: float(v.std(ddof=1)) for k, v in values.items()},
        }
        summary = None

    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report_obj, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if args.pr_csv:
        if len(reports) != 1:
            raise UsageError("--pr-csv needs exactly one scores file")
        with open(args.pr_csv, "w", encoding="utf-8") as fh:
            for recall, precision in reports[0][1].pr_points:
                fh.write(f"{recall},{precision}\n")

    if summary is not None:
        print(
            "evaluate: "
            + " ".join(
                f"{k}={summary.to_json_obj()[k]:.4f}" for k in SCALAR_METRICS
            )
            + (f" degenerate={','.join(summary.degenerate)}" if summary.degenerate else "")
        )
    else:
        mean = report_obj["mean"]
        print(
            f"evaluate: {len(reports)} folds, mean "
            + " ".join(f"{k}={mean[k]:.4f}" for k in SCALAR_METRICS)
        )
    outputs = [args.report] + ([args.pr_csv] if args.pr_csv else [])
    _write_manifest(args, None, list(args.scores), outputs, started)
    return EXIT_OK


def _cmd_baseline(args) -> int:
    started = _utc_now()
    commits = _load_commits_checked(args.dataset)
    if not commits:
        raise DataError(f"{args.dataset}: no commits")
    rows = []
    predictions = []
    for c in commits:
        pred = keyword_baseline(c.message)
        predictions.append(pred)
        row = {"commit_id": c.commit_id, "label": pred.value}
        if c.label is not None:
            row["true_label"] = c.label.value
        rows.append(row)
    _write_jsonl(args.out, rows)

    n_stable = sum(1 for p in predictions if p is Label.STABLE)
    print(
        f"baseline: {n_stable} stable, {len(rows) - n_stable} non-stable -> {args.out}"
    )

    outputs = [args.out]
    if args.report:
        missing = [c.commit_id for c in commits if c.label is None]
        if missing:
            raise DataError(
                f"--report needs true labels; {len(missing)} commits lack them "
                f"(first: {missing[0]})"
            )
        scores = [1.0 if p is Label.STABLE else 0.0 for p in predictions]
        truth = [c.label.to_int() for c in commits]
        report = metrics(scores, truth, 0.5)
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(
            "baseline report: "
            + " ".join(f"{k}={report.to_json_obj()[k]:.4f}" for k in SCALAR_METRICS)
        )
        outputs.append(args.report)
    _write_manifest(args, None, [args.dataset], outputs, started)
    return EXIT_OK


def _cmd_folds(args) -> int:
    started = _utc_now()
    commits = _load_commits_checked(args.dataset)
    try:
        splits = chrono_folds(commits, args.n)
    except ValueError as exc:
        raise DataError(str(exc))
    prefix = args.out_prefix or args.dataset + ".fold"
    outputs = []
    for i, (train_items, test_items) in enumerate(splits, start=1):
        path = f"{prefix}{i}.json"
        obj = {
            "fold": i,
            "n_folds": args.n,
            "train_ids": [c.commit_id for c in train_items],
            "test_ids": [c.commit_id for c in test_items],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(path)
    sizes = ", ".join(str(len(test)) for _, test in splits)
    print(f"folds: {len(splits)} splits (test sizes {sizes}) -> {prefix}1..{len(splits)}.json")
    _write_manifest(args, None, [args.dataset], outputs, started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _add_common(sub) -> None:
    sub.add_argument("--config", help="flat key=value file overriding defaults")


def build_parser():
    parser = _Parser(prog="patchnet", description=__doc__)
    parser.add_argument(
        "--version", action="version", version=f"patchnet {__version__}"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    by_name = {}

    sub = subparsers.add_parser("ingest", help="filter, label, and balance commits")
    sub.add_argument("--mainline", required=True, help="mainline commits (export or JSONL)")
    sub.add_argument("--stable", required=True, help="stable-tree commits (export or JSONL)")
    sub.add_argument("--rc-ids", help="file of release-candidate commit ids")
    sub.add_argument("--out", required=True, help="output dataset JSONL")
    sub.add_argument("--seed", type=int, help="tie-break seed recorded in provenance")
    _add_common(sub)
    sub.set_defaults(func=_cmd_ingest)
    by_name["ingest"] = sub

    sub = subparsers.add_parser("label", help="label commits against stable-tree evidence")
    sub.add_argument("--dataset", required=True, help="commits to label (export or JSONL)")
    sub.add_argument("--stable", required=True, help="stable-tree commits")
    sub.add_argument("--rc-ids", help="file of release-candidate commit ids")
    sub.add_argument("--out", required=True, help="output labeled JSONL")
    _add_common(sub)
    sub.set_defaults(func=_cmd_label)
    by_name["label"] = sub

    sub = subparsers.add_parser("preprocess", help="build index tensors and vocabularies")
    sub.add_argument("--dataset", required=True, help="labeled dataset JSONL")
    sub.add_argument("--out", required=True, help="output tensors.bin")
    sub.add_argument("--vocab-out", required=True, help="output vocab.json")
    sub.add_argument("--functions-out", help="retained function names JSON (default: <out>.functions.json)")
    sub.add_argument("--min-count", type=int, default=1, help="minimum token count kept in vocabularies")
    sub.add_argument("--msg-len", type=int, default=512)
    sub.add_argument("--files", type=int, default=5)
    sub.add_argument("--hunks", type=int, default=8)
    sub.add_argument("--lines", type=int, default=10)
    sub.add_argument("--words", type=int, default=120)
    _add_common(sub)
    sub.set_defaults(func=_cmd_preprocess)
    by_name["preprocess"] = sub

    sub = subparsers.add_parser("train", help="fit the model on preprocessed tensors")
    sub.add_argument("--tensors", required=True, help="tensors.bin from preprocess")
    sub.add_argument("--vocab", required=True, help="vocab.json from preprocess")
    sub.add_argument("--functions", help="functions JSON from preprocess")
    sub.add_argument("--out", required=True, help="output checkpoint path")
    sub.add_argument("--d-msg", type=int, default=50)
    sub.add_argument("--d-code", type=int, default=50)
    sub.add_argument("--filter-sizes", default="1,2", help="comma-separated window sizes")
    sub.add_argument("--filters", type=int, default=64, help="filters per window size")
    sub.add_argument("--fc-size", type=int, default=100)
    sub.add_argument("--dropout", type=float, default=0.5)
    sub.add_argument("--l2", type=float, default=1e-5, help="L2 regularization strength")
    sub.add_argument("--threshold", type=float, default=0.5)
    sub.add_argument("--variant", choices=("full", "code", "message"), default="full")
    sub.add_argument("--batch-size", type=int, default=32)
    sub.add_argument("--epochs", type=int, default=50)
    sub.add_argument("--patience", type=int, default=5)
    sub.add_argument("--learning-rate", type=float, default=1e-3)
    sub.add_argument("--no-shuffle", action="store_true", help="keep input order within epochs")
    sub.add_argument("--seed", type=int, help="seed for init, shuffling, and dropout")
    _add_common(sub)
    sub.set_defaults(func=_cmd_train)
    by_name["train"] = sub

    sub = subparsers.add_parser("predict", help="score patches with a checkpoint")
    sub.add_argument("--checkpoint", required=True, help="checkpoint from train")
    sub.add_argument("--in", dest="in_path", required=True, help="tensors.bin or commits (export or JSONL)")
    sub.add_argument("--out", required=True, help="output scores JSONL")
    _add_common(sub)
    sub.set_defaults(func=_cmd_predict)
    by_name["predict"] = sub

    sub = subparsers.add_parser("evaluate", help="metrics from scored patches")
    sub.add_argument("--scores", required=True, nargs="+", help="scores JSONL (several files aggregate as folds)")
    sub.add_argument("--report", required=True, help="output report JSON")
    sub.add_argument("--pr-csv", help="also write recall,precision lines")
    sub.add_argument("--threshold", type=float, default=0.5)
    _add_common(sub)
    sub.set_defaults(func=_cmd_evaluate)
    by_name["evaluate"] = sub

    sub = subparsers.add_parser("baseline", help="keyword baseline labels")
    sub.add_argument("--dataset", required=True, help="commits (export or JSONL)")
    sub.add_argument("--out", required=True, help="output labels JSONL")
    sub.add_argument("--report", help="also write metrics JSON (needs true labels)")
    _add_common(sub)
    sub.set_defaults(func=_cmd_baseline)
    by_name["baseline"] = sub

    sub = subparsers.add_parser("folds", help="chronological cross-validation splits")
    sub.add_argument("--dataset", required=True, help="commits (export or JSONL)")
    sub.add_argument("--n", type=int, default=5, help="number of folds")
    sub.add_argument("--out-prefix", help="split file prefix (default: <dataset>.fold)")
    _add_common(sub)
    sub.set_defaults(func=_cmd_folds)
    by_name["folds"] = sub

    return parser, by_name


def run(argv=None) -> int:
    """Parse argv and execute one subcommand; returns the exit code."""
    if argv is None:
        argv = sys.argv[1:]
    parser, by_name = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            args = _apply_config(parser, by_name, args, argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:
        code = exc.code if exc.code is not None else 0
        return int(code)

    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ParseError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
