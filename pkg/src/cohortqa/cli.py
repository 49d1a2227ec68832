"""Single entry point wiring all modules: validate, check, exec, eval,
reward, sim, stats, report."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from collections import defaultdict
from pathlib import Path

from . import __version__
from .data_model import SchemaError, load_cohorts, validate_cohort
from .dsl import ParseError, check_program, parse_program
from .evaluation import (
    EvalCriterion,
    aggregate,
    apply_criterion,
    rejection_stats,
    run_cohort,
    self_consistency,
)
from .retriever import (
    FactTable,
    MockRetriever,
    RemoteRetriever,
    RemoteRetrieverConfig,
    normalize_question,
)
from .reward import CohortExecutionSummary, cohort_reward
from .runtime import ExecutionLimits, execute
from .sim import ToyTrainConfig, run_toy_training

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _base_report(args) -> dict:
    report = {"version": __version__, "seed": getattr(args, "seed", 0)}
    if not getattr(args, "no_timestamp", False):
        report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    return report


def _add_retriever_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--retriever", choices=["mock", "remote"], default="mock")
    parser.add_argument("--facts", help="fact table JSONL (required for mock)")
    parser.add_argument("--endpoint", help="chat-completion URL (required for remote)")
    parser.add_argument("--model", default="retriever")
    parser.add_argument("--temperature", type=float, default=0.7)
    parser.add_argument("--timeout-ms", type=int, default=30_000)
    parser.add_argument("--max-retries", type=int, default=3)


def _add_limit_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-retrieve-calls", type=int, default=64)
    parser.add_argument("--max-steps", type=int, default=10_000)
    parser.add_argument("--max-list-len", type=int, default=1024)


def _make_retriever(args, parser: argparse.ArgumentParser):
    if args.retriever == "mock":
        if not args.facts:
            parser.error("--retriever mock requires --facts")
        return MockRetriever(FactTable.from_jsonl(args.facts))
    if not args.endpoint:
        parser.error("--retriever remote requires --endpoint")
    config = RemoteRetrieverConfig(
        endpoint=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        timeout_s=args.timeout_ms / 1000.0,
        max_retries=args.max_retries,
    )
    return RemoteRetriever(config)


def _make_limits(args) -> ExecutionLimits:
    return ExecutionLimits(
        max_retrieve_calls=args.max_retrieve_calls,
        max_steps=args.max_steps,
        max_list_len=args.max_list_len,
    )


def _retriever_config_json(args) -> dict:
    config = {"retriever": args.retriever}
    if args.retriever == "mock":
        config["facts"] = args.facts
    else:
        config.update(endpoint=args.endpoint, model=args.model, temperature=args.temperature)
    return config


def _load_program_batch(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            obj = json.loads(raw)
            for key in ("cohort_id", "sample_index", "source"):
                if key not in obj:
                    raise SchemaError(f"missing key {key!r}", key, lineno)
            records.append(obj)
    return records


# --- subcommands ---------------------------------------------------------

def cmd_validate(args, parser) -> int:
    try:
        cohorts = load_cohorts(args.cohorts)
    except (OSError, SchemaError) as exc:
        print(f"validate: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if not cohorts:
        print("0 cohorts")
        return EXIT_OK
    failures = 0
    for cohort in cohorts:
        report = validate_cohort(cohort)
        status = "ok" if report.ok else "FAIL"
        print(f"{cohort.cohort_id}: {status}")
        if not report.ok:
            failures += 1
            for i, member in enumerate(report.members):
                if not member.ok:
                    label = "original" if i == 0 else f"variant {i - 1}"
                    problems = [
                        name
                        for name, flag in (
                            ("template-match", member.template_match),
                            ("gold-range", member.gold_in_range),
                            ("binding-keys", member.bindings_match),
                        )
                        if not flag
                    ]
                    print(f"  {label}: {', '.join(problems)}")
    print(f"{len(cohorts)} cohorts, {failures} failing")
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_check(args, parser) -> int:
    cohorts = {c.cohort_id: c for c in load_cohorts(args.cohorts)}
    records = _load_program_batch(args.programs)
    any_fail = False
    for record in records:
        tag = f"{record['cohort_id']}#{record['sample_index']}"
        cohort = cohorts.get(record["cohort_id"])
        if cohort is None:
            print(f"{tag}: unknown cohort")
            any_fail = True
            continue
        try:
            program = parse_program(record["source"], cohort.template.function_header)
        except ParseError as exc:
            print(f"{tag}: parse error: {exc}")
            any_fail = True
            continue
        report = check_program(program, cohort.template)
        print(
            f"{tag}: params_used={report.all_params_used} "
            f"retrieves={report.static_retrieve_count} "
            f"min_retrieves={report.meets_min_retrieves} "
            f"all_paths_return={report.every_path_returns}"
        )
        if not report.ok:
            any_fail = True
    return EXIT_FAILURE if any_fail else EXIT_OK


def cmd_exec(args, parser) -> int:
    cohorts = {c.cohort_id: c for c in load_cohorts(args.cohorts)}
    cohort = cohorts.get(args.cohort_id)
    if cohort is None:
        print(f"exec: unknown cohort {args.cohort_id!r}", file=sys.stderr)
        return EXIT_FAILURE
    if not 0 <= args.member < len(cohort.members):
        parser.error(f"--member must be in [0, {len(cohort.members) - 1}]")
    source = Path(args.program).read_text(encoding="utf-8")
    try:
        program = parse_program(source, cohort.template.function_header)
    except ParseError as exc:
        print(f"exec: parse error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    retriever = _make_retriever(args, parser)
    result = execute(program, cohort.members[args.member].bindings, retriever, _make_limits(args))
    for event in result.trace:
        print(_dump(event.to_json()))
    print(_dump({
        "status": result.status,
        "answer": result.answer,
        "failure_reason": result.failure_reason,
        "limit": result.limit_which,
        "was_rejected": result.was_rejected,
        "dynamic_retrieve_count": result.dynamic_retrieve_count,
    }))
    if any(event.outcome == "error" for event in result.trace):
        return EXIT_BACKEND
    return EXIT_OK


def cmd_eval(args, parser) -> int:
    cohorts = {c.cohort_id: c for c in load_cohorts(args.cohorts)}
    records = _load_program_batch(args.programs)
    retriever = _make_retriever(args, parser)
    limits = _make_limits(args)
    criterion = EvalCriterion(args.criterion)

    by_cohort: dict[str, list[dict]] = defaultdict(list)
    for record in records:
        by_cohort[record["cohort_id"]].append(record)

    rows = []
    outcome_pairs = []
    for cohort_id in sorted(by_cohort):
        cohort = cohorts.get(cohort_id)
        if cohort is None:
            print(f"eval: unknown cohort {cohort_id!r}", file=sys.stderr)
            return EXIT_FAILURE
        group = sorted(by_cohort[cohort_id], key=lambda r: r["sample_index"])[: args.k]
        try:
            programs = [
                parse_program(r["source"], cohort.template.function_header) for r in group
            ]
        except ParseError as exc:
            print(f"eval: parse error in {cohort_id}: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        if len(programs) == 1:
            outcome = run_cohort(programs[0], cohort, retriever, limits, jobs=args.jobs)
        else:
            outcome = self_consistency(programs, cohort, retriever, limits, jobs=args.jobs)
        passed = apply_criterion(outcome, criterion)
        outcome_pairs.append((cohort.template.domain_tag, passed))
        rows.append({
            "cohort_id": cohort_id,
            "domain": cohort.template.domain_tag,
            "k": len(programs),
            "n_correct": outcome.n_correct,
            "n_rejected": outcome.n_rejected,
            "n_calls": outcome.summary.n_calls,
            "passed": passed,
        })
    if not rows:
        print("eval: no programs to evaluate", file=sys.stderr)
        return EXIT_FAILURE

    accuracy = aggregate(outcome_pairs)
    report = _base_report(args)
    report.update(
        config={
            **_retriever_config_json(args),
            "criterion": args.criterion,
            "k": args.k,
            "limits": {
                "max_retrieve_calls": limits.max_retrieve_calls,
                "max_steps": limits.max_steps,
                "max_list_len": limits.max_list_len,
            },
        },
        cohorts=rows,
        accuracy=accuracy.to_json(),
    )
    if args.output:
        Path(args.output).write_text(_dump(report) + "\n", encoding="utf-8")
    print(_format_accuracy_table(accuracy, args.criterion))
    return EXIT_OK


def _format_accuracy_table(accuracy, criterion: str) -> str:
    lines = [f"{criterion.capitalize()} accuracy (%)"]
    lines.append(f"{'Domain':<16}{'Accuracy':>10}{'±':>8}{'N':>7}")
    data = accuracy.to_json()
    for domain, stats in data["per_domain"].items():
        lines.append(
            f"{domain:<16}{stats['pass_rate'] * 100:>10.1f}"
            f"{stats['ci_halfwidth'] * 100:>8.1f}{stats['n']:>7}"
        )
    overall = data["overall"]
    lines.append(
        f"{'overall':<16}{overall['pass_rate'] * 100:>10.1f}"
        f"{overall['ci_halfwidth'] * 100:>8.1f}{overall['n']:>7}"
    )
    return "\n".join(lines)


def cmd_reward(args, parser) -> int:
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        with open(args.outcomes, encoding="utf-8") as handle:
            for raw in handle:
                if not raw.strip():
                    continue
                obj = json.loads(raw)
                summary = CohortExecutionSummary(
                    n_correct=obj["n_correct"],
                    n_calls=obj["n_calls"],
                    n_rejected=obj["n_rejected"],
                )
                breakdown = cohort_reward(summary, variant=obj.get("variant", "normal"))
                record = {
                    "cohort_id": obj.get("cohort_id", ""),
                    "sample_index": obj.get("sample_index", 0),
                    "n_correct": summary.n_correct,
                    "n_calls": summary.n_calls,
                    "n_rejected": summary.n_rejected,
                    **breakdown.to_json(),
                }
                print(_dump(record), file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_sim(args, parser) -> int:
    cohorts = load_cohorts(args.cohorts)
    retriever = MockRetriever(FactTable.from_jsonl(args.facts))
    pool = []
    names = []
    with open(args.pool, encoding="utf-8") as handle:
        for raw in handle:
            if not raw.strip():
                continue
            obj = json.loads(raw)
            header = cohorts[0].template.function_header
            pool.append(parse_program(obj["source"], header))
            names.append(obj.get("name", f"candidate-{len(names)}"))
    config = ToyTrainConfig(
        rollouts_per_update=args.rollouts,
        updates=args.updates,
        learning_rate=args.lr,
        mode=args.variant,
        seed=args.seed,
    )
    log = run_toy_training(config, pool, cohorts, retriever)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as out:
            meta = _base_report(args)
            meta.update(
                kind="sim-log",
                variant=args.variant,
                updates=args.updates,
                rollouts=args.rollouts,
                learning_rate=args.lr,
                candidates=names,
                kl_regularized=log.kl_regularized,
            )
            print(_dump(meta), file=out)
            for record in log.updates:
                print(_dump(record.to_json()), file=out)
    finals = dict(zip(names, log.final_probabilities))
    print(_dump({"variant": args.variant, "final_probabilities": finals}))
    return EXIT_OK


def cmd_stats(args, parser) -> int:
    label_map = {}
    if args.labels:
        raw_map = json.loads(Path(args.labels).read_text(encoding="utf-8"))
        label_map = {normalize_question(k): v for k, v in raw_map.items()}

    def label(question: str) -> str:
        return label_map.get(normalize_question(question), args.default_category)

    events = []
    for path in args.traces:
        with open(path, encoding="utf-8") as handle:
            for raw in handle:
                if raw.strip():
                    events.append(json.loads(raw))
    try:
        stats = rejection_stats(events, label)
    except ValueError as exc:
        print(f"stats: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    data = stats.to_json()
    lines = [f"{'Category':<40}{'Rejection Rate(%)':>18}"]
    for category, entry in data["per_category"].items():
        lines.append(f"{category:<40}{entry['rate'] * 100:>18.1f}")
    lines.append(f"{'Overall':<40}{data['overall']['rate'] * 100:>18.1f}")
    print("\n".join(lines))
    if args.output:
        report = _base_report(args)
        report.update(rejection=data)
        Path(args.output).write_text(_dump(report) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_report(args, parser) -> int:
    for path in args.inputs:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        print(f"== {path} ==")
        if "accuracy" in data:
            criterion = data.get("config", {}).get("criterion", "accuracy")
            acc = data["accuracy"]
            print(f"{criterion.capitalize()} accuracy (%)")
            print(f"{'Domain':<16}{'Accuracy':>10}{'±':>8}{'N':>7}")
            for domain, stats in acc["per_domain"].items():
                print(
                    f"{domain:<16}{stats['pass_rate'] * 100:>10.1f}"
                    f"{stats['ci_halfwidth'] * 100:>8.1f}{stats['n']:>7}"
                )
            overall = acc["overall"]
            print(
                f"{'overall':<16}{overall['pass_rate'] * 100:>10.1f}"
                f"{overall['ci_halfwidth'] * 100:>8.1f}{overall['n']:>7}"
            )
        if "rejection" in data:
            rej = data["rejection"]
            print(f"{'Category':<40}{'Rejection Rate(%)':>18}")
            for category, entry in rej["per_category"].items():
                print(f"{category:<40}{entry['rate'] * 100:>18.1f}")
            print(f"{'Overall':<40}{rej['overall']['rate'] * 100:>18.1f}")
    return EXIT_OK


# --- argument wiring -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohortqa",
        description="Cohort-consistency program harness",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a cohort JSONL file")
    p.add_argument("cohorts")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="static-check a program batch")
    p.add_argument("--cohorts", required=True)
    p.add_argument("--programs", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("exec", help="execute one program on one cohort member")
    p.add_argument("--program", required=True)
    p.add_argument("--cohorts", required=True)
    p.add_argument("--cohort-id", required=True)
    p.add_argument("--member", type=int, default=0, help="0 = original, 1-5 = variants")
    _add_retriever_args(p)
    _add_limit_args(p)
    p.set_defaults(func=cmd_exec)

    p = sub.add_parser("eval", help="cohort execution test over a program batch")
    p.add_argument("--cohorts", required=True)
    p.add_argument("--programs", required=True)
    p.add_argument("--criterion", choices=["strict", "lenient"], default="lenient")
    p.add_argument("--k", type=int, default=1, help="samples per cohort for self-consistency")
    p.add_argument("--output", help="write the JSON report here")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timestamp", action="store_true")
    _add_retriever_args(p)
    _add_limit_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reward", help="recompute reward breakdowns from outcome records")
    p.add_argument("--outcomes", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_reward)

    p = sub.add_parser("sim", help="toy policy training on a candidate pool")
    p.add_argument("--variant", choices=["cohort", "normal", "org"], default="cohort")
    p.add_argument("--updates", type=int, default=200)
    p.add_argument("--rollouts", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pool", required=True)
    p.add_argument("--cohorts", required=True)
    p.add_argument("--facts", required=True)
    p.add_argument("--output", help="write the training log JSONL here")
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("stats", help="rejection-rate table from trace files")
    p.add_argument("--traces", nargs="+", required=True)
    p.add_argument("--labels", help="JSON map question -> category")
    p.add_argument("--default-category", default="uncategorized")
    p.add_argument("--output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="render JSON reports as text tables")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (OSError, SchemaError, ParseError, json.JSONDecodeError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
