"""Command-line entry point.

Exit status: 0 for a fully clean run, 1 on error, 2 on usage errors, and 3
when the run finished but something needs attention (skipped files,
degenerate labels, failed fetches). Logs go to stderr; data goes to files
or stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import MODES, ConfigError, RunConfig, hp_pairs, read_config
from .dataset import CorpusError
from .disasm import MalformedInputError, OpcodeParseError, format_opcode_text
from .simplify import mapping_table, simplify_sequence

log = logging.getLogger("opvec")

EXIT_OK, EXIT_ERROR, EXIT_ISSUES = 0, 1, 3


def _config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    flags = {
        "mode": getattr(args, "mode", None),
        "seed": getattr(args, "seed", None),
        "train_fraction": getattr(args, "train_fraction", None),
        "stratify_by": getattr(args, "stratify", None),
        "workers": getattr(args, "workers", None),
        "skip_bad": True if getattr(args, "skip_bad", False) else None,
        "models": getattr(args, "models", None),
        "chain": getattr(args, "chain", None),
        "chain_base": getattr(args, "chain_base", None),
        "chain_feed": getattr(args, "chain_feed", None),
        "figures": False if getattr(args, "no_figures", False) else None,
    }
    cfg.update(flags)
    cfg.update(hp_pairs(getattr(args, "hp", None)))
    return cfg.validate()


def _finish(result) -> int:
    for issue in result.issues:
        log.warning("%s", issue)
    return EXIT_OK if result.clean else EXIT_ISSUES


def cmd_vocab(args) -> int:
    table = mapping_table()
    if args.json:
        print(json.dumps(table, indent=1))
        return EXIT_OK
    for i, tok in enumerate(table["vocabulary"]):
        members = table["groups"].get(tok)
        rule = next((f"{p}*" for p, t in table["prefix_rules"] if t == tok), None)
        src = ", ".join(members) if members else rule or tok
        print(f"{i:2d}  {tok:<14} <- {src}")
    print(f"dropped: {', '.join(table['dropped'])} (and any other opcode)")
    return EXIT_OK


def _read_input(path: str):
    p = Path(path)
    if not p.exists() and path.lstrip().startswith(("0x", "0X")):
        from .disasm import Bytecode, disassemble

        return disassemble(Bytecode.from_hex(path, "stdin"))
    return pipeline.read_contract(p)


def cmd_disasm(args) -> int:
    seq = _read_input(args.input)
    if args.offsets:
        text = "".join(f"{ins.offset:06x}  {ins}\n" for ins in seq)
    else:
        text = format_opcode_text(seq)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simplify(args) -> int:
    s = simplify_sequence(_read_input(args.input))
    sys.stdout.write(" ".join(s.tokens) + "\n")
    log.info("%d tokens kept, %d dropped", len(s), s.dropped_count)
    return EXIT_OK


def cmd_vectorize(args) -> int:
    return _finish(pipeline.vectorize(args.corpus, args.labels, args.out, _config(args)))


def cmd_train(args) -> int:
    return _finish(pipeline.train(args.vectors, args.out, _config(args)))


def cmd_evaluate(args) -> int:
    res = pipeline.evaluate(args.vectors, args.models_dir, args.out, _config(args))
    sys.stdout.write(res.info["table"])
    return _finish(res)


def cmd_run(args) -> int:
    res = pipeline.run(args.corpus, args.labels, args.out, _config(args))
    sys.stdout.write(res.info["table"])
    return _finish(res)


def cmd_predict(args) -> int:
    preds = pipeline.predict(args.models_dir, args.corpus_model, args.contracts, args.model)
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_id", "model", "label", "prediction", "score", "empty"])
        for p in preds:
            w.writerow([p.source_id, p.model, p.label, p.prediction, format(p.score, ".6f"), int(p.empty)])
    finally:
        if args.out:
            fh.close()
    flagged = sorted({p.source_id for p in preds if p.empty})
    for sid in flagged:
        log.warning("%s has no bigrams; predicted from a zero vector", sid)
    return EXIT_ISSUES if flagged else EXIT_OK


def cmd_fetch(args) -> int:
    from .fetcher import DEFAULT_BASE_URL, BytecodeFetcher, EmptyCode, FetchConfig, FetchError, validate_address

    cfg = RunConfig()
    if args.config:
        cfg.update(read_config(args.config))
    fc = FetchConfig.from_env(
        args.api_key_env,
        base_url=args.base_url or cfg.fetch_base_url or DEFAULT_BASE_URL,
        rate_limit=args.rate_limit or cfg.fetch_rate_limit or 5.0,
    )
    if not fc.api_key:
        log.warning("%s is not set; requests go out without an API key", args.api_key_env)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    addresses = [ln.split("#", 1)[0].strip() for ln in Path(args.addresses).read_text("utf-8").splitlines()]
    failures = 0
    with BytecodeFetcher(fc) as fetcher:
        for raw in filter(None, addresses):
            try:
                addr = validate_address(raw)
                code = fetcher.fetch_bytecode(addr)
            except (ValueError, FetchError) as exc:
                log.error("%s: %s", raw, exc)
                failures += 1
                continue
            if isinstance(code, EmptyCode):
                log.warning("%s has no code (externally owned account)", addr)
                failures += 1
                continue
            (out / f"{addr}.hex").write_text(code.to_hex() + "\n", encoding="utf-8")
            print(f"{addr}\t{len(code)} bytes")
    return EXIT_ISSUES if failures else EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import make_corpus

    path = make_corpus(args.out, args.n, args.seed)
    print(path)
    return EXIT_OK


def cmd_compare(args) -> int:
    from .plotting import method_comparison_chart
    from .reports import read_csv, render_table

    results = {}
    for item in args.reports:
        name, _, path = item.rpartition("=")
        p = Path(path)
        results[name or p.name] = read_csv(p / "metrics.csv" if p.is_dir() else p)
    method_comparison_chart(results, args.out, models=args.models.split(","), label=args.label)
    for name, rows in results.items():
        sys.stdout.write(render_table([r for r in rows if r.label == args.label], f"{name}"))
    return EXIT_OK


def _add_run_opts(p, corpus=True, training=True):
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--seed", type=int)
    if corpus:
        p.add_argument("--mode", choices=MODES, help="simplified (35-token) or raw opcode bigrams")
        p.add_argument("--train-fraction", type=float)
        p.add_argument("--stratify", metavar="LABEL", help="stratify the split on this label")
        p.add_argument("--workers", type=int, help="parallel file readers")
        p.add_argument("--skip-bad", action="store_true", help="skip unreadable contract files")
    if training:
        p.add_argument("--models", help="comma-separated kinds (default: all five)")
        p.add_argument("--chain", dest="chain", action="store_true", default=None)
        p.add_argument("--no-chain", dest="chain", action="store_false")
        p.add_argument("--chain-base", help="base kind for chain links (default random_forest)")
        p.add_argument("--chain-feed", choices=("hard", "score"))
        p.add_argument("--hp", action="append", metavar="KIND.NAME=VALUE", help="hyperparameter override")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="opvec", description="Opcode bigram TF-IDF features and vulnerability classifiers for EVM contracts.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("-q", "--quiet", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vocab", help="print the simplification table")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("disasm", help="disassemble a .hex file (or a 0x literal)")
    p.add_argument("input")
    p.add_argument("--offsets", action="store_true", help="prefix byte offsets")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_disasm)

    p = sub.add_parser("simplify", help="print the simplified token sequence of a contract")
    p.add_argument("input")
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("vectorize", help="split a corpus and write TF-IDF vectors")
    p.add_argument("--corpus", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    _add_run_opts(p, corpus=True, training=False)
    p.set_defaults(func=cmd_vectorize)

    p = sub.add_parser("train", help="train the binary models and the chain")
    p.add_argument("--vectors", required=True)
    p.add_argument("--out", required=True)
    _add_run_opts(p, corpus=False, training=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score trained models on the test split")
    p.add_argument("--vectors", required=True)
    p.add_argument("--models-dir", "--model-dir", dest="models_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    _add_run_opts(p, corpus=False, training=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="vectorize, train and evaluate in one go")
    p.add_argument("--corpus", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    _add_run_opts(p, corpus=True, training=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("predict", help="label new contracts with trained models")
    p.add_argument("--models-dir", "--model-dir", dest="models_dir", required=True)
    p.add_argument("--corpus-model", required=True)
    p.add_argument("--model", action="append", help="restrict to these kinds (or 'chain')")
    p.add_argument("-o", "--out")
    p.add_argument("contracts", nargs="+")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("fetch", help="download deployed bytecode for a list of addresses")
    p.add_argument("--addresses", required=True, help="file with one address per line")
    p.add_argument("--out", required=True)
    p.add_argument("--base-url")
    p.add_argument("--rate-limit", type=float)
    p.add_argument("--api-key-env", default="ETHERSCAN_API_KEY")
    p.add_argument("--config")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("synth", help="write a synthetic labeled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("compare", help="figure comparing report directories, e.g. simplified=out1/reports raw=out2/reports")
    p.add_argument("reports", nargs="+", metavar="NAME=DIR")
    p.add_argument("--out", required=True)
    p.add_argument("--models", default="decision_tree,random_forest")
    p.add_argument("--label", default="macro")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CorpusError, ConfigError, MalformedInputError, OpcodeParseError, pipeline.PipelineError,
            FileNotFoundError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
