"""Command-line interface: ``hybridcoref {train,resolve,eval,gridsearch,ablate,gen}``.

Settings come from four layers, later ones winning: built-in defaults, a JSON
config file (``--config``), ``HYBRIDCOREF_<KEY>`` environment variables and
command-line flags. Every report is written as a text table with a JSON
sidecar next to it.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

from .corpus import Document, read_conll, write_conll
from .errors import ConfigError, CorefError, ModelModeMismatch
from .features import EmbeddingTable, FeatureSpace, Mode, load_embeddings
from .learner.forest import GridPoint, load_model, save_model, train_logistic
from .learner.sampling import build_training_set
from .learner.selection import GridSpec, cross_validate, grid_search, grid_table_csv
from .mentions import Lexicons, load_lexicons
from .resolver import (
    FOREST, LOGISTIC, RULES, Policy, Resolution, Setting, ablation_run, dump_predictions, evaluate,
    format_report, load_predictions, make_scorer, prepare_corpus, resolve_prepared, standard_matrix,
    train_model,
)
from .sieves import DEFAULT_ORDER
from .synth import ABLATION_SPEC, SynthSpec, gen_corpus, synthetic_embeddings

log = logging.getLogger("hybridcoref")

ENV_PREFIX = "HYBRIDCOREF_"

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "jobs": 1,
    "lexicons": None,
    "embeddings": None,
    "mode": "hybrid",
    "classifier": FOREST,
    "threshold": 0.5,
    "window": 3,
    "sieve_order": None,
    "no_rule_sieves": False,
    "gold_clusters": False,
    "policy": "all",
    "trees": 100,
    "depth": None,
    "criterion": "gini",
    "cv": 10,
}
_TYPES = {
    "seed": int, "jobs": int, "threshold": float, "window": int, "trees": int, "cv": int,
    "no_rule_sieves": bool, "gold_clusters": bool,
}


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return None
    if key == "depth":
        return None if str(value).lower() in ("none", "") else int(value)
    if key == "sieve_order":
        if isinstance(value, str):
            return [s.strip() for s in value.split(",") if s.strip()]
        return list(value)
    typ = _TYPES.get(key)
    if typ is bool and isinstance(value, str):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if typ is not None:
        try:
            return typ(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"setting {key!r}: cannot read {value!r} as {typ.__name__}") from exc
    return value


def resolve_settings(args: argparse.Namespace, env: dict[str, str] | None = None) -> dict[str, Any]:
    """Merge defaults, config file, environment and flags (flags win)."""
    env = os.environ if env is None else env
    out = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {args.config} does not exist") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from exc
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        out.update({k: _coerce(k, v) for k, v in cfg.items()})
    for key in DEFAULTS:
        name = ENV_PREFIX + key.upper()
        if name in env:
            out[key] = _coerce(key, env[name])
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None and not (v is False and _TYPES.get(key) is bool):
            out[key] = _coerce(key, v)
    return out


def _setting(s: dict[str, Any], name: str = "cli") -> Setting:
    try:
        mode = Mode(s["mode"])
    except ValueError as exc:
        raise ConfigError(f"mode must be 'hybrid' or 'mention_pair', not {s['mode']!r}") from exc
    return Setting(
        name=name,
        mode=mode,
        classifier=s["classifier"],
        rule_sieves=not s["no_rule_sieves"],
        gold_clusters=s["gold_clusters"],
        embeddings=s["embeddings"] is not None,
        sieve_order=tuple(s["sieve_order"]) if s["sieve_order"] else None,
        point=GridPoint(s["depth"], s["trees"], s["criterion"]),
        merge_threshold=s["threshold"],
        sentence_window=s["window"],
    )


def setting_meta(st: Setting) -> dict:
    return {
        "rule_sieves": st.rule_sieves,
        "gold_clusters": st.gold_clusters,
        "embeddings": st.embeddings,
        "sieve_order": list(st.sieve_order) if st.sieve_order else None,
        "sentence_window": st.sentence_window,
    }


def _need(path: str | None, what: str) -> Path:
    if not path:
        raise ConfigError(f"{what} path is required")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} file {p} does not exist")
    return p


def _lexicons(s: dict) -> Lexicons:
    return load_lexicons(s["lexicons"]) if s["lexicons"] else load_lexicons()


def _embeddings(s: dict) -> EmbeddingTable | None:
    if s["embeddings"] is None:
        return None
    return load_embeddings(_need(s["embeddings"], "embeddings"))


def write_report(path: str | Path | None, text: str, data: dict) -> None:
    """Print ``text``; with a path, also write it and a ``.json`` sidecar."""
    sys.stdout.write(text)
    if path:
        p = Path(path)
        p.write_text(text, encoding="utf-8")
        p.with_suffix(p.suffix + ".json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n",
                                                   encoding="utf-8")


def _score_dict(sc) -> dict:
    return {"precision": sc.precision, "recall": sc.recall, "f1": sc.f1,
            "correct": sc.correct, "linked": sc.linked, "gold_anaphoric": sc.gold_anaphoric}


# --------------------------------------------------------------------------
# commands


def cmd_gen(args, s) -> int:
    if args.preset == "ablation":
        spec = ABLATION_SPEC
    else:
        spec = SynthSpec()
    overrides = {k: v for k, v in {
        "entities": args.entities, "mentions": args.mentions, "pronoun_rate": args.pronoun_rate,
        "min_sentence_len": args.min_len, "max_sentence_len": args.max_len,
    }.items() if v is not None}
    spec = replace(spec, **overrides)
    docs = gen_corpus(spec, args.docs, s["seed"])
    Path(args.out).write_text(write_conll(docs), encoding="utf-8")
    if args.embeddings_out:
        table = synthetic_embeddings(args.embedding_dim, s["seed"])
        lines = [" ".join([tok, *(repr(float(x)) for x in vec)]) for tok, vec in sorted(table.vectors.items())]
        Path(args.embeddings_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    log.info("wrote %d documents to %s", len(docs), args.out)
    return 0


def _cv_report(examples, st: Setting, s: dict, space_dim: int):
    n_docs = len({e.doc_id for e in examples})
    k = min(s["cv"], n_docs)
    if k < 2:
        return None
    space = FeatureSpace(st.mode, space_dim)
    trainer = None
    if st.classifier == LOGISTIC:
        trainer = lambda X, y, sp, seed: train_logistic(X, y, sp, seed=seed)  # noqa: E731
    return cross_validate(examples, st.point, k, 1, s["seed"], space, trainer)


def cmd_train(args, s) -> int:
    st = _setting(s)
    if st.classifier == RULES:
        raise ConfigError("the rule classifier has nothing to train")
    docs = read_conll(_need(args.corpus, "corpus"))
    lex, table = _lexicons(s), _embeddings(s)
    preps = prepare_corpus(docs, st, lex, table)
    dim = table.dim if table is not None else 0
    report: dict[str, Any] = {"setting": setting_meta(st), "mode": st.mode.value}
    lines = []
    if args.grid:
        examples = build_training_set(preps, st.mode)
        best, rows = grid_search(examples, GridSpec(), min(s["cv"], len(docs)), s["seed"],
                                 FeatureSpace(st.mode, dim))
        grid_path = Path(args.model).with_suffix(".grid.csv")
        grid_path.write_text(grid_table_csv(rows), encoding="utf-8")
        st = replace(st, point=best)
        lines.append(f"grid search: {len(rows)} points, best {best.label()} (table in {grid_path})")
        report["grid_table"] = str(grid_path)
    if s["cv"] and s["cv"] >= 2:
        cv = _cv_report(build_training_set(preps, st.mode), st, s, dim)
        if cv is not None:
            lines.append(f"{len(cv.folds)}-fold cross-validation (classifier level, positive class)")
            lines.append(f"{'fold':>4}  {'precision':>9}  {'recall':>9}  {'F1':>9}")
            for f in cv.folds:
                p, r, f1 = f.scores
                lines.append(f"{f.fold:>4}  {p:9.4f}  {r:9.4f}  {f1:9.4f}")
            lines.append(f"{'mean':>4}  {cv.precision:9.4f}  {cv.recall:9.4f}  {cv.f1:9.4f}")
            report["cv"] = {"precision": cv.precision, "recall": cv.recall, "f1": cv.f1,
                            "folds": [list(f.scores) for f in cv.folds]}
    model = train_model(preps, st, s["seed"], dim)
    model.meta = setting_meta(st)
    save_model(model, args.model)
    report["model"] = str(args.model)
    lines.append(f"model written to {args.model}")
    write_report(args.report, "\n".join(lines) + "\n", report)
    return 0


# worker state for process-parallel resolution
_WORKER: dict[str, Any] = {}


def _init_worker(setting, model, lexdir, emb_path) -> None:
    _WORKER.update(setting=setting, model=model,
                   lex=load_lexicons(lexdir) if lexdir else load_lexicons(),
                   table=load_embeddings(emb_path) if emb_path else None)


def _resolve_one(doc: Document) -> tuple[str, list[Resolution]]:
    st = _WORKER["setting"]
    prep = prepare_corpus([doc], st, _WORKER["lex"], _WORKER["table"])[0]
    return doc.doc_id, resolve_prepared(prep, make_scorer(st, _WORKER["model"]), st.resolver_config())[1]


def resolve_corpus(docs: Sequence[Document], st: Setting, model, s: dict) -> dict[str, list[Resolution]]:
    """Resolve every document, in parallel when ``jobs > 1``; output is keyed by doc id."""
    args = (st, model, s["lexicons"], s["embeddings"])
    if s["jobs"] > 1 and len(docs) > 1:
        with ProcessPoolExecutor(s["jobs"], initializer=_init_worker, initargs=args) as ex:
            results = list(ex.map(_resolve_one, docs))
    else:
        _init_worker(*args)
        results = [_resolve_one(d) for d in docs]
    return {doc_id: res for doc_id, res in sorted(results)}


def _resolve_setting(args, s) -> tuple[Setting, Any]:
    """Settings for resolution: the model's training-time pipeline unless flags override it."""
    if args.rules_only:
        return replace(_setting(s), classifier=RULES), None
    model = load_model(_need(args.model, "model"))
    meta = model.meta or {}
    if "rule_sieves" in meta and not s["no_rule_sieves"]:
        s = dict(s, no_rule_sieves=not meta["rule_sieves"])
    for key, mkey in (("gold_clusters", "gold_clusters"), ("sieve_order", "sieve_order")):
        if not s[key] and meta.get(mkey):
            s = dict(s, **{key: meta[mkey]})
    if meta.get("embeddings") and s["embeddings"] is None:
        raise ConfigError("model was trained with embeddings; pass --embeddings")
    # the model fixes the mode; an explicit request for a different one is an error
    if s["mode"] != DEFAULTS["mode"] and s["mode"] != model.mode.value:
        raise ModelModeMismatch(f"model was trained in {model.mode.value} mode, not {s['mode']}")
    s = dict(s, mode=model.mode.value)
    st = _setting(s)
    if model.kind == "logistic":
        st = replace(st, classifier=LOGISTIC)
    return st, model


def cmd_resolve(args, s) -> int:
    st, model = _resolve_setting(args, s)
    text = Path(_need(args.corpus, "corpus")).read_text(encoding="utf-8")
    docs = read_conll(args.corpus) if text.strip() else []
    preds = resolve_corpus(docs, st, model, s)
    out = dump_predictions(preds)
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    return 0


def cmd_eval(args, s) -> int:
    docs = read_conll(_need(args.gold, "gold corpus"))
    preds = load_predictions(_need(args.predictions, "predictions").read_text(encoding="utf-8"))
    policy = Policy(s["policy"])
    sc = evaluate(docs, preds, policy)
    write_report(args.report, format_report([("system", sc)]), {"policy": policy.value, **_score_dict(sc)})
    return 0


def cmd_gridsearch(args, s) -> int:
    st = _setting(s)
    docs = read_conll(_need(args.corpus, "corpus"))
    lex, table = _lexicons(s), _embeddings(s)
    examples = build_training_set(prepare_corpus(docs, st, lex, table), st.mode)
    grid = GridSpec()
    if args.depths or args.estimators or args.criteria:
        grid = GridSpec(
            tuple(_coerce("depth", d) for d in args.depths.split(",")) if args.depths else grid.max_depth,
            tuple(int(n) for n in args.estimators.split(",")) if args.estimators else grid.n_estimators,
            tuple(args.criteria.split(",")) if args.criteria else grid.criterion,
        )
    best, rows = grid_search(examples, grid, min(s["cv"], len(docs)), s["seed"],
                             FeatureSpace(st.mode, table.dim if table else 0),
                             progress=lambda r: log.info("%s f1=%.4f", r.point.label(), r.f1))
    Path(args.out).write_text(grid_table_csv(rows), encoding="utf-8")
    sys.stdout.write(f"{len(rows)} grid points evaluated; best {best.label()}\n")
    return 0


def cmd_ablate(args, s) -> int:
    train = read_conll(_need(args.train, "training corpus"))
    test = read_conll(_need(args.test, "test corpus"))
    lex, table = _lexicons(s), _embeddings(s)
    point = GridPoint(s["depth"], s["trees"], s["criterion"])
    matrix = [replace(st, merge_threshold=s["threshold"], sentence_window=s["window"])
              for st in standard_matrix(point, embeddings=table is not None)]
    if args.only:
        keep = set(args.only.split(","))
        matrix = [st for st in matrix if st.name in keep]
        if not matrix:
            raise ConfigError(f"--only matched no settings: {args.only}")
    rows = ablation_run(matrix, train, test, lex, s["seed"], table, Policy(s["policy"]))
    data = {r.setting.name: _score_dict(r.score) for r in rows}
    write_report(args.report, format_report([(r.setting.name, r.score) for r in rows]), data)
    return 0


# --------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes for per-document resolution")
    p.add_argument("--lexicons", help="directory of lexicon files (default: bundled English lists)")
    p.add_argument("--embeddings", help="word vector text file")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--classifier", choices=[FOREST, LOGISTIC, RULES])
    p.add_argument("--threshold", type=float, help="merge threshold for the pronoun sieve")
    p.add_argument("--window", type=int, help="sentence window")
    p.add_argument("--sieve-order", dest="sieve_order", help=f"comma list from {','.join(DEFAULT_ORDER)}")
    p.add_argument("--no-rule-sieves", dest="no_rule_sieves", action="store_true", default=None)
    p.add_argument("--gold-clusters", dest="gold_clusters", action="store_true", default=None)
    p.add_argument("--policy", choices=[p_.value for p_ in Policy])
    p.add_argument("--trees", type=int)
    p.add_argument("--depth", help="max tree depth or 'None'")
    p.add_argument("--criterion", choices=["gini", "entropy"])
    p.add_argument("--cv", type=int, help="cross-validation folds (0 to skip)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridcoref", description="Hybrid rule + random-forest pronoun resolution")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a pronoun model")
    _common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--grid", action="store_true", help="run the full 88-point grid search first")
    p.add_argument("--report")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("resolve", help="resolve pronouns in a corpus")
    _common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--model")
    p.add_argument("--rules-only", action="store_true", help="use the rule agreement baseline, no model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("eval", help="score predictions against gold chains")
    _common(p)
    p.add_argument("--gold", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gridsearch", help="cross-validated forest grid search")
    _common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--depths", help="comma list overriding the depth grid")
    p.add_argument("--estimators", help="comma list overriding the tree-count grid")
    p.add_argument("--criteria", help="comma list overriding the criterion grid")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("ablate", help="train and evaluate the standard comparison settings")
    _common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--only", help="comma list of setting names to run")
    p.add_argument("--report")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    _common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--docs", type=int, default=10)
    p.add_argument("--preset", choices=["default", "ablation"], default="default")
    p.add_argument("--entities", type=int)
    p.add_argument("--mentions", type=int)
    p.add_argument("--pronoun-rate", dest="pronoun_rate", type=float)
    p.add_argument("--min-len", dest="min_len", type=int)
    p.add_argument("--max-len", dest="max_len", type=int)
    p.add_argument("--embeddings-out", dest="embeddings_out", help="also write toy word vectors here")
    p.add_argument("--embedding-dim", dest="embedding_dim", type=int, default=8)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve_settings(args)
        return args.func(args, settings)
    except (CorefError, ValueError, OSError) as exc:
        print(f"hybridcoref {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
