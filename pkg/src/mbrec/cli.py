"""Command-line front end.

Commands: ``eval``, ``sparsity``, ``noise``, ``dump-patterns``,
``export-model``, ``score-user``. Exit codes: 0 success, 1 usage or
configuration error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import THREADS_ENV_VAR, RunConfig, build_run_config
from .counting import count_rows
from .dataset import BehaviorSchema, load_dataset
from .errors import ConfigError, DataError
from .evaluation import (
    group_users_by_sparsity,
    grouped_report,
    run_experiment,
    run_noise_sweep,
)
from .model import ScoreBlock, load_model, recommend_topk, score_counts
from .patterns import enumerate_patterns
from .reports import (
    render_eval_json,
    render_eval_tsv,
    render_noise_json,
    render_noise_tsv,
    render_sparsity_json,
    render_sparsity_tsv,
)


class _Parser(argparse.ArgumentParser):
    # usage errors must exit 1 (argparse defaults to 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _csv_strs(text):
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _csv_ints(text):
    return tuple(int(part) for part in text.split(",") if part.strip())


def _csv_floats(text):
    return tuple(float(part) for part in text.split(",") if part.strip())


def _add_common(parser, with_input=True):
    if with_input:
        parser.add_argument("--input", help="interaction TSV (user<TAB>item<TAB>behavior)")
    parser.add_argument(
        "--behaviors", type=_csv_strs,
        help="comma-separated behavior labels, target last",
    )
    parser.add_argument("--config", help="flat 'key = value' config file")
    parser.add_argument("--alpha", type=int, help="walk-length cap (default 1)")
    parser.add_argument("--epsilon", type=float, help="smoothing (default 1)")
    parser.add_argument("--mode", choices=("raw", "zscore"), help="feature transform")
    parser.add_argument("--k", type=_csv_ints, dest="k_values",
                        help="comma-separated K list (default 10,50)")
    parser.add_argument("--chunk-size", type=int, dest="chunk_size")
    parser.add_argument("--split-seed", type=int, dest="split_seed")
    parser.add_argument("--threads", type=int,
                        help=f"worker processes (default ${THREADS_ENV_VAR} or 1)")
    parser.add_argument("--share-prefixes", action="store_const", const=True,
                        dest="share_prefixes", help="reuse shared chain prefixes")
    parser.add_argument("--output", help="also write the report to this file")
    parser.add_argument("--json", action="store_const", const=True,
                        dest="json_output", help="emit JSON instead of TSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mbrec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="leave-one-out Recall@K / NDCG@K")
    _add_common(p)

    p = sub.add_parser("sparsity", help="metrics per user-degree quantile group")
    _add_common(p)
    p.add_argument("--groups", type=int, default=5, help="number of groups")

    p = sub.add_parser("noise", help="metric sweep over auxiliary noise levels")
    _add_common(p)
    p.add_argument("--fractions", type=_csv_floats, dest="noise_fractions",
                   help="comma-separated noise fractions (default 0,0.1,...,0.4)")
    p.add_argument("--noise-seed", type=int, dest="noise_seed")

    p = sub.add_parser("dump-patterns", help="list the enumerated pattern set")
    _add_common(p, with_input=False)

    p = sub.add_parser("export-model", help="fit on the split and save the model JSON")
    _add_common(p)
    p.add_argument("--model-out", required=True, help="path for the model document")

    p = sub.add_parser("score-user", help="replay a saved model for one user")
    p.add_argument("--model", required=True, help="model JSON from export-model")
    p.add_argument("--input", help="interaction TSV to score against")
    p.add_argument("--user", required=True, help="external user key")
    p.add_argument("--k", type=int, default=10, help="list length (default 10)")
    p.add_argument("--config", help="flat 'key = value' config file")
    p.add_argument("--output", help="also write the list to this file")
    return parser


def _config_from_args(args) -> RunConfig:
    flag_fields = (
        "input", "behaviors", "alpha", "epsilon", "mode", "k_values",
        "chunk_size", "split_seed", "noise_seed", "noise_fractions",
        "threads", "share_prefixes", "output", "json_output",
    )
    flags = {f: getattr(args, f, None) for f in flag_fields}
    return build_run_config(flags, getattr(args, "config", None))


def _emit(text: str, output) -> None:
    sys.stdout.write(text)
    if output:
        Path(output).write_text(text, encoding="utf-8")


def _cmd_eval(args) -> int:
    config = _config_from_args(args)
    result = run_experiment(config)
    render = render_eval_json if config.json_output else render_eval_tsv
    _emit(render(result.report, config), config.output)
    return 0


def _cmd_sparsity(args) -> int:
    config = _config_from_args(args)
    result = run_experiment(config)
    groups = group_users_by_sparsity(
        result.train, result.split.test_pairs, args.groups
    )
    grouped = grouped_report(groups, result.ranks, config.k_values)
    render = render_sparsity_json if config.json_output else render_sparsity_tsv
    _emit(render(grouped, config), config.output)
    return 0


def _cmd_noise(args) -> int:
    config = _config_from_args(args)
    rows = run_noise_sweep(config)
    reports = [(fraction, result.report) for fraction, result in rows]
    render = render_noise_json if config.json_output else render_noise_tsv
    _emit(render(reports, config), config.output)
    return 0


def _cmd_dump_patterns(args) -> int:
    config = _config_from_args(args)
    config.validate(require_input=False)
    schema = BehaviorSchema(tuple(config.behaviors))
    patterns = enumerate_patterns(schema, config.alpha)
    lines = [
        f"{idx}\t{pattern.label(schema)}"
        for idx, pattern in enumerate(patterns)
    ]
    _emit("\n".join(lines) + "\n", config.output)
    return 0


def _cmd_export_model(args) -> int:
    config = _config_from_args(args)
    result = run_experiment(config)
    result.estimator.save(args.model_out)
    return 0


def _cmd_score_user(args) -> int:
    model = load_model(args.model)
    if args.k < 1:
        raise ConfigError(f"k must be >= 1, got {args.k}")
    if not args.input:
        raise ConfigError("no input file given (use --input)")
    dataset = load_dataset(args.input, model.schema)
    user = dataset.user_index.get(args.user)
    if user is None:
        raise DataError(f"unknown user key {args.user!r}")
    counts = count_rows(dataset, model.patterns, np.array([user]))
    scores = score_counts(counts, model.weights, model.norm, model.mode)
    block = ScoreBlock((user, user + 1), scores)
    items = recommend_topk(
        block, dataset.target_matrix[user:user + 1], args.k
    )[0]
    lines = [f"{dataset.item_ids[i]}\t{scores[0, i]:.10f}" for i in items]
    _emit("\n".join(lines) + "\n", args.output)
    return 0


_COMMANDS = {
    "eval": _cmd_eval,
    "sparsity": _cmd_sparsity,
    "noise": _cmd_noise,
    "dump-patterns": _cmd_dump_patterns,
    "export-model": _cmd_export_model,
    "score-user": _cmd_score_user,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse --help (0) or usage error (1)
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"mbrec: config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        stage = getattr(exc, "stage", None)
        tag = f" [{stage}]" if stage else ""
        print(f"mbrec: data error{tag}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary: everything maps to exit 3
        stage = getattr(exc, "stage", None)
        tag = f" [{stage}]" if stage else ""
        print(f"mbrec: error{tag}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
