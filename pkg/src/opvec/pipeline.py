"""End-to-end workflow: vectorize, train, evaluate, predict.

Each stage reads and writes plain files in one directory and finishes by
writing ``manifest.json`` there, listing every output with its SHA-256.
Nothing time- or host-dependent goes into outputs, so reruns with the same
inputs and seed reproduce them byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import classifiers, tfidf
from .chain import fit_chain, load_chain, save_chain
from .classifiers import DegenerateTrainingWarning
from .config import RunConfig
from .dataset import ContractRecord, Corpus, CorpusError, SplitSpec, load_corpus, read_labels, split, write_labels
from .disasm import OpcodeSequence, disassemble, parse_opcode_text, read_hex_file, table_version
from .metrics import compute_metrics, confusion, macro_average
from .reports import ReportRow, render_table, write_csv
from .simplify import simplify_sequence, vocabulary

log = logging.getLogger(__name__)

CORPUS_MODEL = "corpus_model.json"
TRAIN_VECTORS = "train_vectors.csv"
TEST_VECTORS = "test_vectors.csv"
LABELS = "labels.csv"
SPLIT = "split.csv"
MANIFEST = "manifest.json"
CHAIN_FILE = "chain.json"


class PipelineError(RuntimeError):
    pass


@dataclass
class StageResult:
    out_dir: Path
    outputs: list[str]
    issues: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not self.issues


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, stage: str, outputs: Sequence[str], extra: dict) -> None:
    doc = {
        "stage": stage,
        **extra,
        "outputs": {name: sha256_file(out_dir / name) for name in sorted(outputs)},
    }
    (out_dir / MANIFEST).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def read_manifest(directory) -> dict:
    p = Path(directory) / MANIFEST
    return json.loads(p.read_text("utf-8")) if p.exists() else {}


# -- sequences and vectors ---------------------------------------------------


def read_contract(path, source_id: Optional[str] = None) -> OpcodeSequence:
    p = Path(path)
    sid = source_id or p.stem
    if p.suffix == ".hex":
        return disassemble(read_hex_file(p, sid))
    return parse_opcode_text(p.read_text("utf-8"), sid)


def _read_one(record: ContractRecord):
    try:
        return record.read(), None
    except (OSError, UnicodeDecodeError, ValueError) as exc:
        return None, f"{record.path}: {exc}"


def read_sequences(records: Sequence[ContractRecord], workers: int = 1):
    """``(sequences, errors)`` in record order; failed reads give None."""
    if workers > 1 and len(records) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_read_one, records, chunksize=8))
    else:
        results = [_read_one(r) for r in records]
    return [s for s, _ in results], [e for _, e in results if e]


def tokens_for(seq: OpcodeSequence, mode: str):
    return simplify_sequence(seq) if mode == "simplified" else seq


def vectorize_sequence(seq: OpcodeSequence, model: tfidf.TfidfCorpusModel) -> tfidf.FeatureVector:
    return tfidf.tfidf_vector(tfidf.count_bigrams(tokens_for(seq, model.mode)), model)


def vectorize(corpus_dir, label_file, out_dir, config: RunConfig) -> StageResult:
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus: Corpus = load_corpus(corpus_dir, label_file)
    if not corpus.records:
        raise CorpusError(f"{corpus_dir}: no labeled contracts to vectorize")
    seqs, errors = read_sequences(corpus.records, config.workers)
    if errors and not config.skip_bad:
        raise PipelineError("unreadable contract files (use --skip-bad to continue):\n  " + "\n  ".join(errors))
    issues = [f"skipped {e}" for e in errors]
    pairs = [(r, s) for r, s in zip(corpus.records, seqs) if s is not None]
    records = [r for r, _ in pairs]
    seq_of = {r.source_id: s for r, s in pairs}
    train, test = split(records, SplitSpec(config.train_fraction, config.seed, config.stratify_by))

    if config.mode == "simplified":
        universe = tfidf.build_universe(vocabulary())
    else:
        universe = tfidf.build_raw_universe(seq_of[r.source_id] for r in train)
    train_counts = [tfidf.count_bigrams(tokens_for(seq_of[r.source_id], config.mode)) for r in train]
    model = tfidf.fit_corpus(train_counts, universe, config.mode)
    train_vecs = [tfidf.tfidf_vector(c, model) for c in train_counts]
    test_vecs = [vectorize_sequence(seq_of[r.source_id], model) for r in test]

    tfidf.save_model(model, out / CORPUS_MODEL)
    tfidf.write_vectors_csv(train_vecs, out / TRAIN_VECTORS, universe)
    tfidf.write_vectors_csv(test_vecs, out / TEST_VECTORS, universe)
    write_labels(out / LABELS, records, corpus.label_names)
    empty = {v.source_id for v in train_vecs + test_vecs if v.empty}
    with open(out / SPLIT, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("source_id,split,instructions,empty\n")
        for part, recs in (("train", train), ("test", test)):
            for r in recs:
                fh.write(f"{r.source_id},{part},{len(seq_of[r.source_id])},{int(r.source_id in empty)}\n")
    if empty:
        log.warning("%d contracts produced no bigrams (zero vectors)", len(empty))

    outputs = [CORPUS_MODEL, TRAIN_VECTORS, TEST_VECTORS, LABELS, SPLIT]
    info = {
        "mode": config.mode,
        "dimension": len(universe),
        "vocabulary_digest": vocabulary().digest() if config.mode == "simplified" else None,
        "universe_digest": universe.digest(),
        "corpus_model_digest": model.digest(),
        "opcode_table": table_version(),
        "n_train": len(train),
        "n_test": len(test),
        "label_names": list(corpus.label_names),
        "seed": config.seed,
        "config": config.to_dict(),
        "skipped": sorted(errors),
        "missing_files": corpus.missing_files,
        "unlabeled": corpus.unlabeled,
    }
    write_manifest(out, "vectorize", outputs, info)
    log.info("vectorized %d train / %d test contracts, %d dims", len(train), len(test), len(universe))
    return StageResult(out, outputs, issues, info)


# -- training ----------------------------------------------------------------


def _load_split(vectors_dir: Path, which: str):
    ids, X, header = tfidf.read_vectors_csv(vectors_dir / (TRAIN_VECTORS if which == "train" else TEST_VECTORS))
    names, rows = read_labels(vectors_dir / LABELS)
    Y = np.array([[rows[i][n] for n in names] for i in ids], dtype=np.int64).reshape(len(ids), len(names))
    return ids, X, Y, names, header


def model_filename(kind: str, label: str) -> str:
    return f"{kind}__{label}.json"


def train(vectors_dir, out_dir, config: RunConfig) -> StageResult:
    config.validate()
    vdir, out = Path(vectors_dir), Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_model = tfidf.load_model(vdir / CORPUS_MODEL)
    ids, X, Y, names, _ = _load_split(vdir, "train")
    if len(ids) < 2:
        raise PipelineError("need at least 2 training contracts")
    digest = corpus_model.digest()
    extra = {"feature_digest": digest, "mode": corpus_model.mode}
    outputs, issues, degenerate = [], [], []
    for kind in config.models:
        hp = config.hyperparams.get(kind)
        for j, label in enumerate(names):
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DegenerateTrainingWarning)
                model = classifiers.fit(kind, X, Y[:, j], hp, seed=config.seed)
            for w in caught:
                log.warning("%s", w.message)
            if model.degenerate:
                degenerate.append(f"{kind}/{label}")
            fname = model_filename(kind, label)
            classifiers.save_model(model, out / fname, {**extra, "label": label})
            outputs.append(fname)
            log.info("trained %s for %s", kind, label)
    chain_info = None
    if config.chain:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegenerateTrainingWarning)
            chain = fit_chain(
                X, Y, names, config.chain_base, config.hyperparams.get(config.chain_base),
                seed=config.seed, feed=config.chain_feed,
            )
        for w in caught:
            log.warning("chain: %s", w.message)
        for name, link in zip(chain.label_order, chain.links):
            if link.degenerate:
                degenerate.append(f"chain/{name}")
        save_chain(chain, out / CHAIN_FILE, extra)
        outputs.append(CHAIN_FILE)
        chain_info = {"label_order": list(chain.label_order), "link_dims": chain.link_dims}
        log.info("chain order %s, link dims %s", chain.label_order, chain.link_dims)
    issues += [f"degenerate training labels: {d}" for d in degenerate]
    info = {
        "feature_digest": digest,
        "mode": corpus_model.mode,
        "dimension": X.shape[1],
        "n_train": len(ids),
        "label_names": list(names),
        "seed": config.seed,
        "config": config.to_dict(),
        "degenerate": degenerate,
        "chain": chain_info,
    }
    write_manifest(out, "train", outputs, info)
    return StageResult(out, outputs, issues, info)


# -- evaluation --------------------------------------------------------------


def _rows_for(model_name: str, preds: dict, truth: dict, degenerate: set) -> list[ReportRow]:
    rows, per = [], {}
    for label, y in truth.items():
        if label in degenerate:
            rows.append(ReportRow(model_name, label, "degenerate"))
            continue
        cm = confusion(preds[label], y)
        per[label] = compute_metrics(cm)
        rows.append(ReportRow(model_name, label, "ok", per[label], cm))
    if per:
        macro = macro_average(per)
        n_skipped = len(truth) - len(per)
        excluded = n_skipped + max(macro.excluded.values())
        rows.append(ReportRow(model_name, "macro", "ok", macro.metrics, None, excluded))
    else:
        rows.append(ReportRow(model_name, "macro", "degenerate", None, None, len(truth)))
    return rows


def evaluate(vectors_dir, models_dir, out_dir, config: RunConfig) -> StageResult:
    vdir, mdir, out = Path(vectors_dir), Path(models_dir), Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = tfidf.load_model(vdir / CORPUS_MODEL).digest()
    ids, X, Y, names, _ = _load_split(vdir, "test")
    if not ids:
        raise PipelineError("test split is empty")
    truth = {n: Y[:, j] for j, n in enumerate(names)}
    tmanifest = read_manifest(mdir)
    kinds = [k for k in config.models if (mdir / model_filename(k, names[0])).exists()]
    rows: list[ReportRow] = []
    issues = []
    for kind in kinds:
        preds, degenerate = {}, set()
        for label in names:
            doc = json.loads((mdir / model_filename(kind, label)).read_text("utf-8"))
            if doc.get("feature_digest") != digest:
                raise PipelineError(f"{kind}/{label} was trained on different features")
            model = classifiers.model_from_dict(doc)
            if model.degenerate:
                degenerate.add(label)
            preds[label] = model.predict(X)
        rows += _rows_for(kind, preds, truth, degenerate)
    chain_info = None
    if config.chain and (mdir / CHAIN_FILE).exists():
        doc = json.loads((mdir / CHAIN_FILE).read_text("utf-8"))
        if doc.get("feature_digest") != digest:
            raise PipelineError("chain was trained on different features")
        chain = load_chain(mdir / CHAIN_FILE)
        P = chain.predict(X)
        preds = {n: P[:, j] for j, n in enumerate(chain.label_names)}
        degenerate = {n for n, link in zip(chain.label_order, chain.links) if link.degenerate}
        rows += _rows_for("chain", preds, truth, degenerate)
        chain_info = {"label_order": list(chain.label_order), "link_dims": chain.link_dims}
    issues += [f"degenerate: {r.model}/{r.label}" for r in rows if r.status == "degenerate" and r.label != "macro"]

    mode = tmanifest.get("mode", "")
    title = f"Test metrics ({mode} features, {len(ids)} contracts)"
    write_csv(rows, out / "metrics.csv")
    table = render_table(rows, title)
    if chain_info:
        table += f"Classifier chain order: {' -> '.join(chain_info['label_order'])}; link input dims: {chain_info['link_dims']}\n"
    (out / "metrics.txt").write_text(table, encoding="utf-8")
    outputs = ["metrics.csv", "metrics.txt"]
    if config.figures and rows:
        from .plotting import metrics_chart

        metrics_chart(rows, out / "metrics.png", title)
        outputs.append("metrics.png")
    info = {"feature_digest": digest, "mode": mode, "n_test": len(ids), "label_names": list(names), "chain": chain_info}
    write_manifest(out, "evaluate", outputs, info)
    return StageResult(out, outputs, issues, {**info, "rows": rows, "table": table})


def run(corpus_dir, label_file, out_dir, config: RunConfig) -> StageResult:
    """vectorize + train + evaluate into ``out_dir/{vectors,models,reports}``."""
    out = Path(out_dir)
    v = vectorize(corpus_dir, label_file, out / "vectors", config)
    t = train(out / "vectors", out / "models", config)
    e = evaluate(out / "vectors", out / "models", out / "reports", config)
    return StageResult(e.out_dir, e.outputs, v.issues + t.issues + e.issues, e.info)


# -- prediction --------------------------------------------------------------


@dataclass(frozen=True)
class Prediction:
    source_id: str
    model: str
    label: str
    prediction: int
    score: float
    empty: bool


def predict(models_dir, corpus_model_path, contract_paths: Sequence, kinds: Optional[Sequence[str]] = None) -> list[Prediction]:
    mdir = Path(models_dir)
    corpus_model = tfidf.load_model(corpus_model_path)
    digest = corpus_model.digest()
    vecs = [vectorize_sequence(read_contract(p), corpus_model) for p in contract_paths]
    X = np.vstack([v.values for v in vecs]) if vecs else np.zeros((0, len(corpus_model.universe)))
    found = sorted(mdir.glob("*__*.json"))
    models = []
    for p in found:
        kind, label = p.stem.split("__", 1)
        if kinds and kind not in kinds:
            continue
        models.append((kind, label, p))
    chain_path = mdir / CHAIN_FILE
    use_chain = chain_path.exists() and (not kinds or "chain" in kinds)
    if not models and not use_chain:
        raise PipelineError(f"no models found in {mdir}")
    for kind, label, p in models:
        doc = json.loads(p.read_text("utf-8"))
        if doc.get("feature_digest") != digest:
            raise PipelineError(
                f"{p.name} was trained on features {str(doc.get('feature_digest'))[:12]}, "
                f"but {corpus_model_path} has {digest[:12]}; vectorize and train must come from the same run"
            )
    out: list[Prediction] = []
    per_model = []
    for kind, label, p in models:
        m = classifiers.load_model(p)
        per_model.append((kind, label, m.predict(X), m.predict_score(X)))
    if use_chain:
        doc = json.loads(chain_path.read_text("utf-8"))
        if doc.get("feature_digest") != digest:
            raise PipelineError(f"{CHAIN_FILE} was trained on different features than {corpus_model_path}")
        chain = load_chain(chain_path)
        P, S = chain.predict(X), chain.predict_scores(X)
        for j, label in enumerate(chain.label_names):
            per_model.append(("chain", label, P[:, j], S[:, j]))
    for i, v in enumerate(vecs):
        for kind, label, P, S in per_model:
            out.append(Prediction(v.source_id, kind, label, int(P[i]), float(S[i]), v.empty))
    return out
