"""Command-line interface.

Subcommands:
  parse           round-trip check an explanation string
  forge           generate a synthetic task bundle
  explain         search for the most faithful explanation of a CSV of
                  input-prediction pairs
  evaluate        score a given explanation string against a CSV
  bench           run the budget-constrained comparison protocol
  sweep-features  repeat bench over top-k feature subsets
  scale-examples  compare subset ensembling against single-subset search

Exit codes: 0 success, 2 parse/config error, 3 budget failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields

from . import harness, taskforge
from .baselines import BudgetExhausted
from .executor import evaluate as exec_evaluate
from .explainer import SearchConfig, SearchStrategy, explain
from .harness import ExperimentConfig, load_csv, run_budget_experiment
from .lang import ParseError, parse, render
from .schema import LabelKind
from .taskforge import ComplexityDescriptor, binarize, generate_task, save_task

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _load_config_file(path: str) -> dict:
    if path.endswith(".toml"):
        try:
            import tomllib  # Python >= 3.11
        except ImportError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        return json.load(fh)


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if getattr(args, "config", None):
        raw = _load_config_file(args.config)
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    overrides = {
        "dataset": args.dataset,
        "classifier": args.classifier,
        "n_subsets": args.subsets,
        "subset_size": args.subset_size,
        "budget": args.budget,
        "seed": args.seed,
        "label_of_interest": getattr(args, "label_of_interest", None),
    }
    if getattr(args, "strategies", None):
        overrides["strategies"] = tuple(args.strategies.split(","))
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "strategies" in values and not isinstance(values["strategies"], tuple):
        values["strategies"] = tuple(values["strategies"])
    return ExperimentConfig(**values)


def _write_output(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_parse(args) -> int:
    expl = parse(args.text)
    canonical = render(expl)
    round_trip = render(parse(canonical))
    payload = {
        "canonical": canonical,
        "ast": expl.to_json(),
        "round_trip_ok": round_trip == canonical,
    }
    _write_output(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_forge(args) -> int:
    descriptor = ComplexityDescriptor(
        quantifier=args.quantifier, conjunction=args.conjunction, negation=args.negation
    )
    task = generate_task(descriptor, args.features, args.train, args.test, args.seed)
    save_task(task, args.out)
    print(f"planted: {render(task.planted)}")
    print(f"wrote {args.out}/ (train={len(task.train)}, test={len(task.test)})")
    return EXIT_OK


def _batch_from_csv(path: str, label_col: str | None, label_of_interest: str | None,
                    kind: LabelKind, seed: int):
    dataset = load_csv(path, seed=seed, label_col=label_col)
    batch = dataset.batch
    loi = label_of_interest or batch.label_of_interest
    batch = binarize(batch, loi)
    batch.label_kind = kind
    return batch


def cmd_explain(args) -> int:
    batch = _batch_from_csv(
        args.input, args.predictions_col, args.label_of_interest,
        LabelKind.PREDICTED, args.seed,
    )
    config = SearchConfig(
        strategy=SearchStrategy(args.strategy),
        beam_width=args.beam,
        quantifier_fitting=not args.no_quantifiers,
    )
    result = explain(batch, config)
    payload = {
        "explanation": {"text": render(result.best), "ast": result.best.to_json()},
        "report": result.report.to_json(),
        "candidates": [
            {"text": render(e), "faithfulness": round(s, 4)}
            for e, s in result.candidates.candidates
        ],
    }
    _write_output(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    expl = parse(args.explanation)
    kind = LabelKind.GOLD if args.label_kind == "gold" else LabelKind.PREDICTED
    batch = _batch_from_csv(
        args.input, args.label_col, args.label_of_interest or expl.label, kind, args.seed
    )
    if kind is LabelKind.PREDICTED:
        report = exec_evaluate(expl, predicted_batch=batch)
    else:
        report = exec_evaluate(expl, gold_batch=batch)
    _write_output(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _experiment_config(args)
    report = run_budget_experiment(config)
    _write_output(report.to_json_text(), args.out)
    if args.markdown:
        print(report.to_markdown())
    return EXIT_OK


def cmd_sweep_features(args) -> int:
    config = _experiment_config(args)
    lo, _, hi = args.k_range.partition(":")
    report = harness.feature_sweep(config, range(int(lo), int(hi) + 1))
    _write_output(report.to_json_text(), args.out)
    return EXIT_OK


def cmd_scale_examples(args) -> int:
    config = _experiment_config(args)
    n_range = [int(x) for x in args.n_range.split(",")]
    report = harness.scale_examples_experiment(config, n_range)
    _write_output(report.to_json_text(), args.out)
    return EXIT_OK


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON config file")
    p.add_argument("--dataset", help="CSV path or 'adult-like'")
    p.add_argument("--classifier", choices=["logistic", "tree", "mlp", "lr", "dt", "nn"])
    p.add_argument("--subsets", type=int, help="number of validation subsets")
    p.add_argument("--subset-size", type=int, dest="subset_size")
    p.add_argument("--budget", type=int, help="classifier calls allowed per method run")
    p.add_argument("--strategies", help="comma list from: lime,anchors,top1,beam,perfeat")
    p.add_argument("--label-of-interest", dest="label_of_interest")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(prog="rulelens", description=__doc__,
                                   formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="round-trip check an explanation string")
    p.add_argument("text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("forge", help="generate a synthetic task bundle")
    p.add_argument("--quantifier", action="store_true")
    p.add_argument("--conjunction", choices=taskforge.CONJUNCTIONS, default="none")
    p.add_argument("--negation", choices=taskforge.NEGATIONS, default="none")
    p.add_argument("--features", type=int, default=5)
    p.add_argument("--train", type=int, default=100)
    p.add_argument("--test", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_forge)

    p = sub.add_parser("explain", help="explain a CSV of input-prediction pairs")
    p.add_argument("--input", required=True, help="CSV with a predictions column")
    p.add_argument("--predictions-col", dest="predictions_col", default=None)
    p.add_argument("--strategy", choices=[s.value for s in SearchStrategy], default="perfeat")
    p.add_argument("--beam", type=int, default=20)
    p.add_argument("--no-quantifiers", action="store_true")
    p.add_argument("--label-of-interest", dest="label_of_interest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="score an explanation string against a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--explanation", required=True)
    p.add_argument("--label-kind", choices=["predicted", "gold"], default="predicted")
    p.add_argument("--label-col", dest="label_col")
    p.add_argument("--label-of-interest", dest="label_of_interest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="run the budget-constrained comparison")
    _add_experiment_flags(p)
    p.add_argument("--markdown", action="store_true", help="also print a summary table")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep-features", help="bench across top-k feature subsets")
    _add_experiment_flags(p)
    p.add_argument("--k-range", dest="k_range", default="5:11", help="inclusive lo:hi")
    p.set_defaults(func=cmd_sweep_features)

    p = sub.add_parser("scale-examples", help="ensembling vs single-subset search")
    _add_experiment_flags(p)
    p.add_argument("--n-range", dest="n_range", default="10,20,40,80",
                   help="comma list of input-example counts")
    p.set_defaults(func=cmd_scale_examples)

    return root


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExhausted as exc:
        print(f"budget failure: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
