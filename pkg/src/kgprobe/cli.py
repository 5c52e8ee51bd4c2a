"""Command-line pipeline: build-graphs, gen-variants, run, score, analyze, report.

Stages communicate through JSON/JSONL files only, so every stage can be
re-run or resumed independently. Exit codes: 0 success, 1 validation error,
2 partial run failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from kgprobe.analysis import analyze_scores
from kgprobe.backends import BackendSpec, GenerationRecord
from kgprobe.config import Config
from kgprobe.embedding import make_embedder
from kgprobe.errors import KgprobeError
from kgprobe.kg_core import (
    LocalGraph,
    build_local_graph,
    load_graph,
    load_problems,
    save_graph,
    validate_graph,
)
from kgprobe.metrics import RoleInventory, ScoreRecord, score_hypothesis
from kgprobe.report import add_reference_rows, aggregate_summary, emit, sufficiency_curves
from kgprobe.runner import GenerationTask, read_jsonl, run_experiment, write_jsonl
from kgprobe.seeding import derive_seed
from kgprobe.variants import KgVariant, apply_condition, parse_condition
from kgprobe.verbalize import assemble_prompt, verbalize_triples


def _load_graph_dir(path: Path) -> dict[str, LocalGraph]:
    graphs = {}
    for file in sorted(path.glob("*.json")):
        g = load_graph(file)
        graphs[g.problem_id] = g
    if not graphs:
        raise KgprobeError(f"no graph JSON files found in {path}")
    return graphs


def cmd_build_graphs(args, cfg: Config) -> int:
    problems = load_problems(args.infile)
    schema = cfg.schema()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    warnings = 0
    for problem in problems:
        graph = build_local_graph(problem, schema)
        report = validate_graph(graph, schema)
        if not report.ok:
            raise KgprobeError(
                f"graph for {problem.id} failed validation: "
                + "; ".join(i.message for i in report.issues if i.severity == "error")
            )
        warnings += sum(1 for i in report.issues if i.severity == "warning")
        save_graph(graph, out / f"{problem.id}.json")
    print(f"built {len(problems)} graphs in {out} ({warnings} size warnings)")
    return 0


def cmd_gen_variants(args, cfg: Config) -> int:
    problems = load_problems(args.problems)
    graphs = _load_graph_dir(Path(args.graphs))
    conditions = (
        [c.strip() for c in args.conditions.split(",") if c.strip()]
        if args.conditions
        else list(cfg.plan["conditions"])
    )
    for tag in conditions:
        parse_condition(tag)  # fail fast on typos
    schema = cfg.schema()
    stopwords = cfg.stopwords()
    corpus = [graphs[p.id] for p in problems if p.id in graphs]
    rows = []
    for problem in problems:
        if problem.id not in graphs:
            raise KgprobeError(f"no graph for problem {problem.id}")
        for tag in conditions:
            variant = apply_condition(
                graphs[problem.id],
                tag,
                problem_statement=problem.problem_statement,
                schema=schema,
                corpus=corpus,
                seed=derive_seed(args.seed, problem.id, tag),
                stopwords=stopwords,
                sparse_fraction=float(cfg.variants["sparse_fraction"]),
                medium_fraction=float(cfg.variants["medium_fraction"]),
            )
            rows.append(variant.to_dict())
    write_jsonl(rows, args.out)
    print(f"wrote {len(rows)} variants ({len(conditions)} conditions) to {args.out}")
    return 0


def _build_backend(args, cfg: Config) -> BackendSpec:
    gen_cfg = cfg.generation
    return BackendSpec(
        kind=args.backend,
        model_name=args.model_name or args.backend,
        endpoint=args.endpoint or gen_cfg.get("http", {}).get("endpoint"),
        temperature=args.temperature if args.temperature is not None
        else float(gen_cfg.get("temperature", 0.0)),
        max_tokens=int(gen_cfg.get("max_tokens", 256)),
        samples=args.samples,
        text_path=gen_cfg.get("http", {}).get("text_path", "choices.0.text"),
    )


def cmd_run(args, cfg: Config) -> int:
    problems = {p.id: p for p in load_problems(args.problems)}
    problem_order = list(problems)
    variants = [KgVariant.from_dict(d) for d in read_jsonl(args.variants)]
    by_problem: dict[str, list[KgVariant]] = {}
    for v in variants:
        by_problem.setdefault(v.problem_id, []).append(v)
    backend = _build_backend(args, cfg)
    style_default = args.verbalize_style or cfg.plan.get("style", "compact")
    overrides = cfg.plan.get("style_overrides", {}) or {}
    template = cfg.templates["prompt"]

    tasks = []
    for pid in problem_order:
        for variant in by_problem.get(pid, []):
            style = overrides.get(variant.condition, style_default)
            ctx = verbalize_triples(variant, style, cfg.templates)
            prompt = assemble_prompt(problems[pid], ctx, template)
            for sample in range(args.samples):
                tasks.append(GenerationTask(prompt, backend, sample))
    summary = run_experiment(
        tasks,
        args.out,
        seed=args.seed,
        max_in_flight=args.max_in_flight
        or int(cfg.generation.get("max_in_flight", 4)),
        retry_attempts=int(cfg.generation.get("retry_attempts", 3)),
        retry_backoff_s=float(cfg.generation.get("retry_backoff_s", 1.0)),
    )
    print(
        f"run complete: {summary.written} written, {summary.skipped} skipped, "
        f"{len(summary.failed)} failed"
    )
    if summary.failed:
        for failure in summary.failed:
            print(f"  failed {failure['key']}: {failure['error']}", file=sys.stderr)
        return 2
    return 0


def cmd_score(args, cfg: Config) -> int:
    generations = [GenerationRecord.from_dict(d) for d in read_jsonl(args.generations)]
    variants = {
        (v.problem_id, v.condition): v
        for v in (KgVariant.from_dict(d) for d in read_jsonl(args.variants))
    }
    graphs = _load_graph_dir(Path(args.graphs))
    inventory = RoleInventory.from_config(cfg.tree["role_cues"])
    stopwords = cfg.stopwords()
    embedder = make_embedder(cfg.scoring["embedding"], stopwords=stopwords)
    reference_condition = cfg.plan.get("reference_condition")
    references = {
        (g.problem_id, g.model_name): g.hypothesis
        for g in generations
        if g.condition == reference_condition and g.sample_index == 0
    }
    rows = []
    for gen in generations:
        key = (gen.problem_id, gen.condition)
        if key not in variants:
            raise KgprobeError(f"no variant for generation {key}")
        if gen.problem_id not in graphs:
            raise KgprobeError(f"no graph for problem {gen.problem_id}")
        record = score_hypothesis(
            gen.hypothesis,
            variants[key],
            graphs[gen.problem_id],
            inventory,
            model_name=gen.model_name,
            sample_index=gen.sample_index,
            reference_hypothesis=references.get((gen.problem_id, gen.model_name)),
            embedder=embedder,
            stopwords=stopwords,
        )
        rows.append(record.to_dict())
    write_jsonl(rows, args.out)
    print(f"scored {len(rows)} generations to {args.out}")
    return 0


def cmd_analyze(args, cfg: Config) -> int:
    scores = [ScoreRecord.from_dict(d) for d in read_jsonl(args.scores)]
    generations = None
    if args.generations:
        generations = [
            GenerationRecord.from_dict(d) for d in read_jsonl(args.generations)
        ]
    stopwords = cfg.stopwords()
    embedder = make_embedder(cfg.scoring["embedding"], stopwords=stopwords)
    rows = analyze_scores(
        scores,
        generations,
        cfg.analysis,
        embedder,
        resamples=args.resamples,
        seed=args.seed,
        ci_level=args.ci_level,
        correction=args.correction,
    )
    write_jsonl(rows, args.out)
    print(f"wrote {len(rows)} analysis rows to {args.out}")
    return 0


def cmd_report(args, cfg: Config) -> int:
    scores = [ScoreRecord.from_dict(d) for d in read_jsonl(args.scores)]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    variance_ratios = {}
    if args.analysis:
        for row in read_jsonl(args.analysis):
            if row.get("kind") == "variance_ratio":
                variance_ratios[row["model"]] = row["value"]
    table = aggregate_summary(scores, cfg.analysis, variance_ratios)
    if args.paper_constants:
        with open(args.paper_constants, encoding="utf-8") as fh:
            add_reference_rows(table, json.load(fh))
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    written = []
    for fmt in formats:
        ext = "md" if fmt == "markdown" else fmt
        written.append(emit(table, fmt, out_dir / f"summary.{ext}"))
    ks = [int(k) for k in args.ks.split(",") if k.strip()]
    selectors = [s.strip() for s in args.selectors.split(",") if s.strip()]
    curves = sufficiency_curves(scores, ks, selectors)
    if curves:
        for fmt in formats:
            ext = "md" if fmt == "markdown" else fmt
            written.append(emit(curves, fmt, out_dir / f"curves.{ext}"))
    print(f"report files: {', '.join(str(p) for p in written)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgprobe",
        description="Local KG perturbation and graph-use evaluation pipeline",
    )
    parser.add_argument("--config", default=None, help="YAML config overriding defaults")
    parser.add_argument("--seed", type=int, default=0, help="global seed")
    parser.add_argument("--out-dir", default=".", help="base directory for outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graphs", help="expand problems into local graphs")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_build_graphs)

    p = sub.add_parser("gen-variants", help="generate KG condition variants")
    p.add_argument("--problems", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--conditions", default=None, help="comma-separated condition tags")
    p.set_defaults(handler=cmd_gen_variants)

    p = sub.add_parser("run", help="generate hypotheses for every variant")
    p.add_argument("--problems", required=True)
    p.add_argument("--variants", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", required=True,
                   choices=["http", "mock_echo", "mock_ignore", "mock_template"])
    p.add_argument("--model-name", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--verbalize-style", choices=["compact", "expanded"], default=None)
    p.add_argument("--max-in-flight", type=int, default=None)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("score", help="compute graph-use metrics per generation")
    p.add_argument("--generations", required=True)
    p.add_argument("--variants", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("analyze", help="permutation tests, CIs, variance summaries")
    p.add_argument("--scores", required=True)
    p.add_argument("--generations", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--resamples", type=int, default=10_000)
    p.add_argument("--correction", choices=["holm", "bh", "none"], default="holm")
    p.add_argument("--ci-level", type=float, default=0.95)
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("report", help="emit summary tables and curve data")
    p.add_argument("--scores", required=True)
    p.add_argument("--analysis", default=None)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--paper-constants", default=None,
                   help="JSON file of reference rows to append")
    p.add_argument("--formats", default="markdown,csv")
    p.add_argument("--ks", default="1,2,4,8,18")
    p.add_argument("--selectors", default="semantic")
    p.set_defaults(handler=cmd_report)
    return parser


def _resolve_outputs(args) -> None:
    """Relative output paths land under the global --out-dir."""
    base = Path(getattr(args, "out_dir", ".") or ".")
    for attr in ("out",):
        value = getattr(args, attr, None)
        if value is not None and not Path(value).is_absolute():
            setattr(args, attr, str(base / value))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        _resolve_outputs(args)
        cfg = Config.load(args.config)
        return args.handler(args, cfg)
    except KgprobeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
