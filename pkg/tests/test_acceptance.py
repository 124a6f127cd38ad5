"""Exit criteria, each at its stated tolerance and time budget.

The terminal summary prints one PASS/FAIL line per criterion.
"""

import logging
import time
from pathlib import Path

import numpy as np
import pytest

from opvec.chain import fit_binary_relevance, fit_chain
from opvec.classifiers import fit
from opvec.classifiers.linear import logistic_loss_grad
from opvec.cli import main
from opvec.config import RunConfig
from opvec.dataset import ContractRecord, SplitSpec, split
from opvec.disasm import assemble, decode_hex, disassemble
from opvec.metrics import ConfusionMatrix, compute_metrics, f1_score
from opvec.pipeline import run
from opvec.simplify import vocabulary
from opvec.synthetic import make_corpus
from opvec.tfidf import build_universe, count_bigrams, fit_corpus, tfidf_vector

from conftest import FIXTURES
from mockapi import MockApi
from oracles import tfidf_reference_matrix, window_bigrams

TOKENS = list(vocabulary().tokens)


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.2f}s, budget {self.seconds}s"


@pytest.mark.acceptance(1, "35-token vocabulary and 1225 bigrams, exact")
def test_vocabulary_and_dimension():
    with Budget(1):
        v = vocabulary()
        u = build_universe(v)
        assert len(v) == 35
        assert len(u.bigrams) == 1225 == len(set(u.bigrams))


@pytest.mark.acceptance(2, "bigram counts equal a sliding-window recount on 1,000 random sequences")
def test_bigram_oracle():
    rng = np.random.default_rng(2)
    with Budget(5):
        for _ in range(1000):
            toks = [TOKENS[i] for i in rng.integers(0, 35, rng.integers(0, 201))]
            c = count_bigrams(toks)
            assert c.counts == window_bigrams(toks)
            assert c.total == max(len(toks) - 1, 0)


@pytest.mark.acceptance(3, "TF-IDF equals an independent evaluator within 1e-9 on 50 random corpora")
def test_tfidf_oracle():
    rng = np.random.default_rng(3)
    universe = build_universe(vocabulary())
    saw_negative = saw_empty = False
    with Budget(10):
        for trial in range(50):
            # some corpora draw from few tokens so bigrams become ubiquitous
            alphabet = TOKENS[: int(rng.choice([2, 3, 8, 35]))]
            docs = [
                [alphabet[i] for i in rng.integers(0, len(alphabet), rng.integers(0, 60))]
                for _ in range(rng.integers(1, 21))
            ]
            probes = docs + [[], [alphabet[0]], [alphabet[i] for i in rng.integers(0, len(alphabet), 30)]]
            model = fit_corpus([count_bigrams(d) for d in docs], universe)
            got = np.array([tfidf_vector(count_bigrams(p), model).values for p in probes])
            want = tfidf_reference_matrix(docs, probes, TOKENS)
            assert np.max(np.abs(got - want)) <= 1e-9
            saw_negative |= bool((got < 0).any())
            saw_empty |= not got[len(docs)].any()
    assert saw_negative and saw_empty


@pytest.mark.acceptance(4, "F1 for the reference precision/recall pairs within 0.001; harmonic-mean identity to 1e-12")
def test_metric_consistency():
    rng = np.random.default_rng(4)
    with Budget(5):
        assert abs(f1_score(0.583, 1.0) - 0.737) <= 0.001
        assert abs(f1_score(0.65, 0.929) - 0.765) <= 0.001
        checked = 0
        for tp, tn, fp, fn in rng.integers(0, 200, (10_000, 4)):
            if tp + tn + fp + fn == 0:
                continue
            m = compute_metrics(ConfusionMatrix(int(tp), int(tn), int(fp), int(fn)))
            if m.f1 is None:
                continue
            assert abs(m.f1 - 2 * m.precision * m.recall / (m.precision + m.recall)) <= 1e-12
            assert abs(m.f1 - 2 * tp / (2 * tp + fp + fn)) <= 1e-12
            checked += 1
        assert checked > 9_000


@pytest.mark.acceptance(5, "disassembly round-trips 500 random byte arrays and a deployed contract")
def test_disassembler_round_trip():
    rng = np.random.default_rng(5)
    cases = [rng.integers(0, 256, rng.integers(0, 2001), dtype=np.uint8).tobytes() for _ in range(500)]
    cases.append(decode_hex((FIXTURES / "erc20_token.hex").read_text()))
    with Budget(5):
        for code in cases:
            seq = disassemble(code)
            assert assemble(seq) == code
            covered = np.zeros(len(code), dtype=np.int64)
            for ins in seq:
                covered[ins.offset : ins.offset + ins.size] += 1
            assert (covered == 1).all()


def separable(n=200, d=1225, seed=6):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.normal(0.0, 0.05, (n, d))
    X[:, 0] = np.where(y == 1, rng.uniform(1, 2, n), rng.uniform(-2, -1, n))
    return X, y


@pytest.mark.acceptance(6, "tree and KNN >= 0.95 on separable 1225-dim data; logistic gradient within 1e-5")
def test_classifier_sanity():
    X, y = separable()
    tr, te = slice(0, 140), slice(140, None)
    with Budget(60):
        for kind in ("decision_tree", "knn"):
            acc = (fit(kind, X[tr], y[tr]).predict(X[te]) == y[te]).mean()
            assert acc >= 0.95, kind
        rng = np.random.default_rng(7)
        w, b = rng.normal(0, 0.1, X.shape[1]), 0.2
        sw, yf = np.ones(140), y[tr].astype(float)
        _, gw, gb = logistic_loss_grad(w, b, X[tr], yf, sw, 1e-4)
        h = 1e-6
        num = np.empty_like(w)
        for j in range(len(w)):
            e = np.zeros_like(w)
            e[j] = h
            num[j] = (logistic_loss_grad(w + e, b, X[tr], yf, sw, 1e-4)[0]
                      - logistic_loss_grad(w - e, b, X[tr], yf, sw, 1e-4)[0]) / (2 * h)
        nb = (logistic_loss_grad(w, b + h, X[tr], yf, sw, 1e-4)[0]
              - logistic_loss_grad(w, b - h, X[tr], yf, sw, 1e-4)[0]) / (2 * h)
        assert np.linalg.norm(num - gw) <= 1e-5 * np.linalg.norm(num)
        assert abs(nb - gb) <= 1e-5 * abs(nb)


def duplicated_label_data(seed, n=200, d=1225, informative=200, shift=1.0):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, n)
    X = rng.normal(size=(n, d))
    X[:, :informative] += shift * a[:, None]
    return X, np.stack([a, a], 1)


@pytest.mark.acceptance(7, "chain link dims [1225, 1226]; chain accuracy on a duplicated label >= binary relevance")
def test_chain_structure_and_benefit():
    with Budget(120):
        X, Y = duplicated_label_data(0)
        assert fit_chain(X, Y, ["a", "b"], "random_forest", {"n_trees": 5}).link_dims == [1225, 1226]
        chain_acc, br_acc = [], []
        for seed in range(10):
            X, Y = duplicated_label_data(100 + seed)
            tr, te = slice(0, 140), slice(140, None)
            # labels tie on frequency, so "a" goes first and "b" receives its prediction
            chain = fit_chain(X[tr], Y[tr], ["a", "b"], "random_forest", seed=seed)
            assert chain.label_order == ("a", "b")
            br = fit_binary_relevance(X[tr], Y[tr], ["a", "b"], "random_forest", seed=seed)
            chain_acc.append((chain.predict(X[te])[:, 1] == Y[te, 1]).mean())
            br_acc.append((br["b"].predict(X[te]) == Y[te, 1]).mean())
        print(f"chain {np.mean(chain_acc):.4f} vs binary relevance {np.mean(br_acc):.4f}")
        assert np.mean(chain_acc) >= np.mean(br_acc)


@pytest.mark.acceptance(8, "500 records split 350/150, a partition, identical across runs")
def test_split_determinism():
    recs = [ContractRecord(f"k{i:03d}", None, {"a": i % 3 == 0}) for i in range(500)]
    with Budget(1):
        train, test = split(recs, SplitSpec(0.7, seed=42))
        assert (len(train), len(test)) == (350, 150)
        tr_ids, te_ids = {r.source_id for r in train}, {r.source_id for r in test}
        assert not tr_ids & te_ids and len(tr_ids | te_ids) == 500
        for _ in range(5):
            assert split(recs[::-1], SplitSpec(0.7, seed=42)) == (train, test)


def tree_bytes(root: Path):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.acceptance(9, "two full pipeline runs per mode on 60 contracts give byte-identical reports")
def test_end_to_end_determinism(tmp_path):
    labels = make_corpus(tmp_path / "corpus", n=60, seed=9)
    with Budget(300):
        for mode in ("simplified", "raw"):
            outs = []
            for rep in ("a", "b"):
                cfg = RunConfig(mode=mode, seed=5).validate()
                run(tmp_path / "corpus", labels, tmp_path / f"{mode}-{rep}", cfg)
                outs.append(tree_bytes(tmp_path / f"{mode}-{rep}"))
            assert outs[0] == outs[1]
            assert {"reports/metrics.csv", "reports/metrics.txt", "reports/metrics.png"} <= set(outs[0])


@pytest.mark.acceptance(10, "fetcher never exceeds 5 req/s in any 1 s window over a 10 s burst; key never leaks")
def test_fetcher_contract(tmp_path, monkeypatch, capsys):
    key = "K3yThatMustNotLeak0123456789"
    rate = 5
    addrs = ["0x" + f"{i:040x}" for i in range(1, 56)]
    codes = {a: "0x6001600201" for a in addrs[::2]}
    (tmp_path / "addrs.txt").write_text("\n".join(addrs) + "\n")
    log_file = tmp_path / "fetch.log"
    handler = logging.FileHandler(log_file)
    handler.setLevel(logging.DEBUG)
    root = logging.getLogger()
    old_level = root.level
    root.addHandler(handler)
    root.setLevel(logging.DEBUG)
    monkeypatch.setenv("ETHERSCAN_API_KEY", key)
    try:
        with Budget(30), MockApi(codes) as api:
            rc = main(["-v", "-v", "fetch", "--addresses", str(tmp_path / "addrs.txt"), "--out", str(tmp_path / "out"),
                       "--base-url", api.url, "--rate-limit", str(rate)])
    finally:
        root.removeHandler(handler)
        root.setLevel(old_level)
        handler.close()
    assert rc == 3  # half the addresses are externally owned accounts
    t = np.array(api.arrivals)
    assert len(t) == 55 and t[-1] - t[0] >= 9.0
    worst = max(int(((t >= s) & (t < s + 1.0)).sum()) for s in t)
    assert worst <= rate
    assert all(q.get("apikey") == key for q in api.queries)
    text = log_file.read_text()
    assert "GET /api" in text  # the transport did log request lines
    out = capsys.readouterr()
    leaked = [p for p in [log_file, *sorted((tmp_path / "out").iterdir())] if key in p.read_text()]
    assert not leaked and key not in out.out + out.err
    assert len(list((tmp_path / "out").iterdir())) == len(codes)
