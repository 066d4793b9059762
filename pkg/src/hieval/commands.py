"""Implementations behind the command-line subcommands.

Keeps the file plumbing in one place: load and align inputs, apply a decision
rule, evaluate, and write outputs. Score files are softmaxed when they carry
logits, and every output write is atomic. Table rows report top-1 error
rather than accuracy; report files keep accuracy at full precision.
"""

from __future__ import annotations

import os

import numpy as np

from . import ensemble, fileio, risk, synth
from . import taxonomy as tx
from .errors import DuplicateMethod, InputError
from .metrics import EvalReport, eval_report
from .scores import LOGITS, PROBABILITIES, ScoreMatrix, argmax_rows, as_probabilities

METHODS = ("argmax", "hie", "hie-self", "crm", "hie-crm", "cascade")

_KIND_FLAG = {"logits": LOGITS, "probs": PROBABILITIES, None: None}


def parse_ks(text: str) -> list[int]:
    try:
        ks = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--k must be a comma list of integers, got {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise InputError(f"--k values must be positive integers, got {text!r}")
    return ks


def parse_levels(entries) -> list[tuple[int, str]]:
    out = []
    for entry in entries or []:
        depth, sep, path = entry.partition("=")
        if not sep or not path:
            raise InputError(f"--level expects depth=path, got {entry!r}")
        try:
            d = int(depth)
        except ValueError:
            raise InputError(f"--level depth must be an integer, got {depth!r}") from None
        out.append((d, path))
    return out


class MethodInputs:
    """Everything a decision rule may need, loaded and aligned once."""

    def __init__(self, t: tx.Taxonomy, fine: ScoreMatrix | None = None,
                 coarse: ScoreMatrix | None = None,
                 levels: list[tuple[int, ScoreMatrix]] | None = None):
        self.taxonomy = t
        self.fine = fine
        self.coarse = coarse
        self.levels = levels or []


def load_method_inputs(args) -> MethodInputs:
    t = fileio.load_hierarchy(args.hierarchy)
    kind = _KIND_FLAG[getattr(args, "kind", None)]
    fine = coarse = None
    if getattr(args, "fine", None):
        raw = fileio.load_scores(args.fine, declared_kind=kind)
        fine = as_probabilities(fileio.align_columns(raw, t, "leaf"))
    if getattr(args, "coarse", None):
        raw = fileio.load_scores(args.coarse, declared_kind=kind)
        coarse = as_probabilities(fileio.align_columns(raw, t, "coarse"))
    levels = []
    for depth, path in parse_levels(getattr(args, "level", None)):
        raw = fileio.load_scores(path, declared_kind=kind)
        levels.append((depth, as_probabilities(fileio.align_columns(raw, t, depth))))
    return MethodInputs(t, fine, coarse, levels)


def apply_method(method: str, inputs: MethodInputs):
    """Run one decision rule; returns (ranking_source, writable_matrix).

    ranking_source feeds eval_report (a probability matrix or a risk
    ranking); writable_matrix is what ``infer`` serializes. Risk methods
    serialize negated risks as logits so that generic descending-score
    ranking reproduces the ascending-risk order downstream.
    """
    t = inputs.taxonomy
    if inputs.fine is None:
        raise InputError(f"method {method} requires --fine")
    fine = inputs.fine
    if method == "argmax":
        return fine, fine
    if method == "hie":
        if inputs.coarse is None:
            raise InputError("method hie requires --coarse")
        combined = ensemble.hie_combine(fine, inputs.coarse, tx.parent_index_map(t))
        return combined.scores, combined.scores
    if method == "hie-self":
        combined = ensemble.hie_self(fine, tx.parent_index_map(t), t.n_coarse)
        return combined.scores, combined.scores
    if method == "cascade":
        if not inputs.levels:
            raise InputError("method cascade requires at least one --level depth=path")
        uppers = [(m, tx.ancestor_index_map(t, d)) for d, m in inputs.levels]
        combined = ensemble.cascade_combine(
            fine, uppers, levels=[d for d, _ in inputs.levels]
        )
        return combined.scores, combined.scores
    if method in ("crm", "hie-crm"):
        probs = fine
        if method == "hie-crm":
            if inputs.coarse is None:
                raise InputError("method hie-crm requires --coarse")
            probs = ensemble.hie_combine(fine, inputs.coarse, tx.parent_index_map(t)).scores
        costs = tx.cost_matrix(t)
        ranking = risk.crm_rerank(probs, costs)
        neg_risks = ScoreMatrix(-risk.expected_costs(probs, costs), LOGITS, fine.class_names)
        return ranking, neg_risks
    raise InputError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def _config_echo(args, method: str, ks=None) -> dict:
    inputs = {}
    for role in ("hierarchy", "fine", "coarse", "labels"):
        path = getattr(args, role, None)
        if path:
            inputs[role] = fileio.sha256_digest(path)
    levels = parse_levels(getattr(args, "level", None))
    for depth, path in levels:
        inputs[f"level{depth}"] = fileio.sha256_digest(path)
    preds = getattr(args, "preds", None)
    if preds:
        inputs["preds"] = fileio.sha256_digest(preds)
    echo = {
        "method": method,
        "kind": getattr(args, "kind", None) or "auto",
        "levels": [d for d, _ in levels],
        "inputs": inputs,
    }
    if ks is not None:
        echo["ks"] = list(ks)
    return echo


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.6f}"


def summary_row(r: EvalReport) -> str:
    cells = [r.method, _fmt(1.0 - r.top1_accuracy), _fmt(r.avg_mistake_severity)]
    cells += [_fmt(v) for _, v in sorted(r.hier_dist_at_k.items())]
    return "\t".join(cells)


def summary_header(ks) -> str:
    return "\t".join(["method", "top1_err", "severity"] + [f"hd@{k}" for k in sorted(ks)])


# ----------------------------------------------------------------- commands

def cmd_validate(args, out) -> int:
    t = fileio.load_hierarchy(args.hierarchy)
    leveled = "yes" if t.is_leveled() else "no"
    print(
        f"nodes={t.n_nodes} leaves={t.n_leaves} coarse={t.n_coarse} "
        f"depth={t.max_depth} leveled={leveled}",
        file=out,
    )
    return 0


def cmd_infer(args, out) -> int:
    inputs = load_method_inputs(args)
    ranking_source, matrix = apply_method(args.method, inputs)
    fileio.save_scores(matrix, args.out)
    if isinstance(ranking_source, risk.RiskRanking):
        pred = ranking_source.predictions
    else:
        pred = argmax_rows(ranking_source)
    preds_path = args.preds_out or args.out + ".preds.txt"
    fileio.write_labels(inputs.taxonomy, pred, preds_path)
    print(f"wrote {args.out} and {preds_path}", file=out)
    return 0


def _evaluate(args, method: str, inputs: MethodInputs, gt, ks) -> EvalReport:
    ranking_source, _ = apply_method(method, inputs)
    return eval_report(
        ranking_source, gt, inputs.taxonomy, ks, method,
        config=_config_echo(args, method, ks),
    )


def cmd_eval(args, out) -> int:
    ks = parse_ks(args.k)
    if getattr(args, "preds", None):
        t = fileio.load_hierarchy(args.hierarchy)
        gt = fileio.load_labels(args.labels, t)
        pred = fileio.load_labels(args.preds, t)
        report = eval_report(
            pred.reshape(-1, 1), gt, t, ks, args.method or "preds",
            config=_config_echo(args, args.method or "preds", ks),
        )
    else:
        inputs = load_method_inputs(args)
        gt = fileio.load_labels(args.labels, inputs.taxonomy)
        report = _evaluate(args, args.method or "argmax", inputs, gt, ks)
    if args.out:
        fileio.write_report(report, args.out)
    print(summary_row(report), file=out)
    return 0


def cmd_compare(args, out) -> int:
    ks = parse_ks(args.k)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise InputError("--methods must list at least one method")
    seen = set()
    for m in methods:
        if m in seen:
            raise DuplicateMethod(f"method {m!r} listed twice")
        seen.add(m)
        if m not in METHODS:
            raise InputError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    inputs = load_method_inputs(args)
    gt = fileio.load_labels(args.labels, inputs.taxonomy)
    reports = [_evaluate(args, m, inputs, gt, ks) for m in methods]
    print(summary_header(ks), file=out)
    for r in reports:
        print(summary_row(r), file=out)
    if args.out:
        fileio.write_report_list(reports, args.out)
    return 0


def cmd_costs(args, out) -> int:
    t = fileio.load_hierarchy(args.hierarchy)
    costs = tx.cost_matrix(t)
    matrix = ScoreMatrix(costs.astype(np.float64), LOGITS, t.leaf_names())
    fileio.save_scores(matrix, args.out)
    print(f"wrote {args.out}", file=out)
    return 0


def cmd_synth(args, out) -> int:
    cfg = synth.SynthConfig(
        branching=tuple(int(b) for b in args.branching.split(",")),
        n_samples=args.n_samples,
        noise=tuple(float(s) for s in args.noise.split(",")),
        seed=args.seed,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    t = synth.gen_taxonomy(cfg)
    labels, fine, uppers = synth.gen_instance(cfg)

    paths = {"hierarchy": "hierarchy.json", "labels": "labels.txt", "fine": "fine.hies"}
    fileio.save_hierarchy(t, os.path.join(args.out_dir, paths["hierarchy"]))
    fileio.write_labels(t, labels, os.path.join(args.out_dir, paths["labels"]))
    fileio.save_scores(fine, os.path.join(args.out_dir, paths["fine"]))
    for depth, matrix in enumerate(uppers, start=1):
        name = f"level_d{depth}.hies"
        paths[f"level{depth}"] = name
        fileio.save_scores(matrix, os.path.join(args.out_dir, name))

    manifest = {
        "branching": list(cfg.branching),
        "noise": list(cfg.noise),
        "n_samples": cfg.n_samples,
        "seed": cfg.seed,
        "margin": synth.MARGIN,
        "rng": synth.RNG_ALGORITHM,
        "files": paths,
    }
    fileio.write_json(manifest, os.path.join(args.out_dir, "manifest.json"))
    print(f"wrote synthetic instance to {args.out_dir}", file=out)
    return 0
