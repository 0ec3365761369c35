import json
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from textcf import models
from textcf.corpus import Corpus
from textcf.models import (
    BudgetExhausted,
    EcLedger,
    ec_guarded_call,
    guarded_lm_loss,
    guarded_mask_fill,
    train_class_suggesters,
    train_naive_bayes,
    train_ngram_lm,
)
from textcf.remote import ScorerError, remote_scorer


def corpus_of(*pairs):
    labels = []
    for _, label in pairs:
        if label not in labels:
            labels.append(label)
    return Corpus(examples=tuple(pairs), labels=tuple(labels))


class TestNaiveBayes:
    def test_hand_computed_posterior(self):
        # vocab {good, bad}; P(good|pos) = (2+1)/(2+2), P(good|neg) = (0+1)/(2+2)
        clf = train_naive_bayes(corpus_of(("good good", "pos"), ("bad bad", "neg")))
        assert clf.classify_proba("good", "pos") == pytest.approx(0.75)
        assert clf.classify_proba("good", "pos") > 0.5

    def test_normalization(self):
        clf = train_naive_bayes(
            corpus_of(("good fine movie", "pos"), ("bad awful movie", "neg"))
        )
        rng = random.Random(0)
        words = ["good", "bad", "fine", "awful", "movie", "zzz"]
        for _ in range(100):
            text = " ".join(rng.choices(words, k=rng.randint(1, 8)))
            total = sum(clf.classify_proba(text, lab) for lab in clf.labels)
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_unseen_token_gives_priors(self):
        clf = train_naive_bayes(
            corpus_of(("good", "pos"), ("good", "pos"), ("bad", "neg"))
        )
        assert clf.classify_proba("qqqq", "pos") == pytest.approx(2 / 3)

    def test_predict_is_argmax(self):
        clf = train_naive_bayes(corpus_of(("good good", "pos"), ("bad bad", "neg")))
        assert clf.predict("good") == "pos"
        assert clf.predict("bad bad bad") == "neg"

    def test_duplication_keeps_priors_and_clear_predictions(self):
        # add-1 smoothing shifts posteriors a little under corpus duplication
        # (the pseudo-count stays fixed while counts double), so only priors
        # and clear-margin decisions are stable
        base = corpus_of(
            ("good fine", "pos"), ("good good", "pos"), ("bad awful", "neg")
        )
        doubled = Corpus(examples=base.examples * 2, labels=base.labels)
        clf1, clf2 = train_naive_bayes(base), train_naive_bayes(doubled)
        assert clf1.log_priors == clf2.log_priors
        for text in ("good", "bad", "good fine", "bad awful"):
            assert clf1.predict(text) == clf2.predict(text)

    def test_vocab_cap(self):
        clf = train_naive_bayes(
            corpus_of(("a a a b b c", "x"), ("a b c d e", "y")), vocab_cap=2
        )
        assert set(clf.vocab) == {"a", "b"}

    def test_empty_corpus(self):
        with pytest.raises(Exception):
            train_naive_bayes(Corpus(examples=(), labels=("a", "b")))

    def test_json_round_trip(self):
        clf = train_naive_bayes(corpus_of(("good good", "pos"), ("bad bad", "neg")))
        clone = models.NaiveBayesClassifier.from_json(
            json.loads(json.dumps(clf.to_json()))
        )
        assert clone.classify_proba("good", "pos") == clf.classify_proba("good", "pos")


class TestNgramLm:
    def _lm(self):
        texts = [
            "the movie was good .",
            "the movie was fine .",
            "the food was good .",
            "we liked the movie .",
            "the staff was fine .",
        ]
        return train_ngram_lm([t for t in texts], order=2), texts

    def test_seen_text_beats_shuffle(self):
        lm, texts = self._lm()
        seen = texts[0]
        tokens = seen.split()
        rng = random.Random(4)
        shuffled = tokens[:]
        while shuffled == tokens:
            rng.shuffle(shuffled)
        assert lm.lm_loss(seen) < lm.lm_loss(" ".join(shuffled))

    def test_nonnegative(self):
        lm, _ = self._lm()
        for text in ("", "zf qq pp", "the the the", "movie"):
            assert lm.lm_loss(text) >= 0.0

    def test_single_token_formula(self):
        lm, _ = self._lm()
        # loss of a one-token text is -ln P(token | start padding)
        expected = -lm._log_prob((models.START,), "the")
        assert lm.lm_loss("the") == pytest.approx(expected)

    def test_deterministic(self):
        lm, _ = self._lm()
        assert lm.lm_loss("the movie") == lm.lm_loss("the movie")

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            train_ngram_lm(["a b"], order=5)

    def test_json_round_trip(self):
        lm, _ = self._lm()
        clone = models.NgramLanguageModel.from_json(json.loads(json.dumps(lm.to_json())))
        assert clone.lm_loss("the movie was good .") == pytest.approx(
            lm.lm_loss("the movie was good .")
        )


class TestClassSuggesters:
    def test_bigram_product_ranking(self):
        corpus = corpus_of(
            *[("the best movie", "pos") for _ in range(5)],
            ("the bad movie", "neg"),
        )
        suggesters = train_class_suggesters(corpus)
        fills = suggesters["pos"].mask_fill(("the", "worst", "movie"), 1, "replace", 5)
        assert fills[0].word == "best"
        # independent oracle: add-k bigram product over the class vocabulary
        k, v = 0.1, len({"the", "best", "movie"}) + 2
        def score(w, c_prev_w, c_prev, c_w_next, c_w):
            return ((c_prev_w + k) / (c_prev + k * v)) * ((c_w_next + k) / (c_w + k * v))
        # counts in the pos sub-corpus: the->best 5, the->movie 0, best->movie 5
        expected_best = score("best", 5, 5, 5, 5)
        assert fills[0].score == pytest.approx(expected_best)

    def test_sorted_descending(self):
        corpus = corpus_of(("a b c a b", "x"), ("c c c", "y"))
        fills = train_class_suggesters(corpus)["x"].mask_fill(("a", "b"), 1, "replace", 10)
        scores = [s.score for s in fills]
        assert scores == sorted(scores, reverse=True)

    def test_top_n_truncation(self):
        corpus = corpus_of(("a b c d e", "x"), ("f", "y"))
        fills = train_class_suggesters(corpus)["x"].mask_fill(("a", "b"), 1, "replace", 1)
        assert len(fills) <= 1

    def test_insert_mode_uses_gap_neighbors(self):
        corpus = corpus_of(*[("really very good", "pos") for _ in range(3)], ("bad", "neg"))
        fills = train_class_suggesters(corpus)["pos"].mask_fill(
            ("really", "good"), 1, "insert", 3
        )
        assert fills[0].word == "very"

    def test_deterministic(self):
        corpus = corpus_of(("a b a c", "x"), ("d", "y"))
        s = train_class_suggesters(corpus)["x"]
        first = s.mask_fill(("a", "b"), 0, "replace", 5)
        second = s.mask_fill(("a", "b"), 0, "replace", 5)
        assert first == second

    def test_missing_class_examples(self):
        with pytest.raises(Exception):
            train_class_suggesters(Corpus(examples=(("a", "x"),), labels=("x", "y")))


class TestEmbedders:
    def test_word_vector_file(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("a 1 0\nb 0 1\n")
        emb = models.load_word_vectors(path)
        assert np.allclose(emb.embed("a b"), [0.5, 0.5])
        assert np.allclose(emb.embed("zzz"), [0.0, 0.0])
        assert np.allclose(emb.embed_word("A"), [1.0, 0.0])

    def test_inconsistent_dimension(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("a 1 0\nb 0 1 2\n")
        with pytest.raises(ValueError, match="components"):
            models.load_word_vectors(path)

    def test_count_embedder_separates_planted_words(self):
        corpus = corpus_of(("great great fine", "pos"), ("awful fine", "neg"))
        emb = models.train_count_embedder(corpus)
        assert emb.embed_word("great")[0] == pytest.approx(1.0)
        assert emb.embed_word("awful")[0] == pytest.approx(0.0)
        assert emb.embed_word("fine")[0] == pytest.approx(0.5)
        assert emb.embed_word("zzz") is None


class TestEcLedger:
    def test_budget_exhaustion(self):
        ledger = EcLedger(budget=1)
        ec_guarded_call(ledger, "lm", "a", lambda: 1.0)
        assert ledger.ec_count == 1
        with pytest.raises(BudgetExhausted):
            ec_guarded_call(ledger, "lm", "b", lambda: 2.0)
        assert ledger.ec_count == 1

    def test_classifier_calls_free(self):
        ledger = EcLedger(budget=0)
        for i in range(5):
            ec_guarded_call(ledger, "classifier", f"k{i}", lambda: "pos")
        assert ledger.ec_count == 0

    def test_cache_hit_does_not_count(self):
        ledger = EcLedger(budget=10)
        calls = []
        for _ in range(2):
            ec_guarded_call(ledger, "mask_fill", "same", lambda: calls.append(1) or 7)
        assert ledger.ec_count == 1
        assert len(calls) == 1

    def test_count_equals_distinct_counted_misses(self):
        ledger = EcLedger(budget=100)
        rng = random.Random(1)
        issued = set()
        kinds = ["lm", "mask_fill", "classifier", "embedder"]
        for _ in range(300):
            kind = rng.choice(kinds)
            key = rng.randint(0, 30)
            before = ledger.ec_count
            ec_guarded_call(ledger, kind, key, lambda: 0)
            assert ledger.ec_count >= before  # non-decreasing
            issued.add((kind, key))
        expected = sum(1 for kind, _ in issued if kind in ("lm", "mask_fill"))
        assert ledger.ec_count == expected

    def test_budget_check_precedes_evaluation(self):
        ledger = EcLedger(budget=0)
        with pytest.raises(BudgetExhausted):
            ec_guarded_call(ledger, "lm", "x", lambda: 1 / 0)


class _StubHandler(BaseHTTPRequestHandler):
    hits = None  # dict injected per server

    def log_message(self, *args):
        pass

    def do_GET(self):
        self._respond({"labels": ["pos", "neg"]} if self.path == "/labels" else None)

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        self.hits[self.path] = self.hits.get(self.path, 0) + 1
        if self.path == "/classify":
            self._respond({"proba": 0.7})
        elif self.path == "/predict":
            self._respond({"label": "pos"})
        elif self.path == "/lm_loss":
            self._respond({"loss": 2.5})
        elif self.path == "/mask_fill":
            self._respond(
                {"suggestions": [{"word": "great", "score": 1.0}, {"word": "ok", "score": 0.4}]}
            )
        elif self.path == "/embed":
            self._respond({"vector": [1.0, 0.0]})
        elif self.path == "/boom":
            self._respond(None)
        else:
            self._respond(None)

    def _respond(self, payload):
        if payload is None:
            self.send_response(500)
            self.end_headers()
            return
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture()
def stub_server():
    hits = {}
    handler = type("Handler", (_StubHandler,), {"hits": hits})
    server = HTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", hits
    server.shutdown()


class TestRemoteScorer:
    def test_classify_round_trip(self, stub_server):
        url, _ = stub_server
        clf = remote_scorer(url, "classifier")
        assert clf.labels == ("pos", "neg")
        assert clf.classify_proba("hi", "pos") == pytest.approx(0.7)
        assert clf.predict("hi") == "pos"

    def test_mask_fill_round_trip(self, stub_server):
        url, _ = stub_server
        sug = remote_scorer(url, "mask_fill", "pos")
        fills = sug.mask_fill(("a", "b"), 1, "replace", 5)
        assert [s.word for s in fills] == ["great", "ok"]

    def test_embed_round_trip(self, stub_server):
        url, _ = stub_server
        emb = remote_scorer(url, "embedder")
        assert np.allclose(emb.embed("hi"), [1.0, 0.0])

    def test_server_error_raises_scorer_error(self, stub_server):
        url, _ = stub_server
        lm = remote_scorer(url + "/boom", "lm")  # wrong base -> 500
        with pytest.raises(ScorerError) as err:
            lm.lm_loss("hi")
        assert err.value.kind == "lm"

    def test_unreachable_endpoint(self):
        with pytest.raises(ScorerError):
            remote_scorer("http://127.0.0.1:9", "classifier")

    def test_ledger_deduplicates_http_calls(self, stub_server):
        url, hits = stub_server
        lm = remote_scorer(url, "lm")
        ledger = EcLedger(budget=10)
        for _ in range(3):
            loss = guarded_lm_loss(ledger, lm, "same text")
        assert loss == pytest.approx(2.5)
        assert hits["/lm_loss"] == 1
        assert ledger.ec_count == 1


class TestGuardedHelpers:
    def test_guarded_mask_fill_key_includes_position_mode_class(self):
        calls = []

        class Fake(models.MaskFillSuggester):
            def mask_fill(self, tokens, position, mode, top_n):
                calls.append((tokens, position, mode))
                return []

        ledger = EcLedger(budget=10)
        fake = Fake()
        guarded_mask_fill(ledger, fake, ("a", "b"), 0, "replace", "pos", 5)
        guarded_mask_fill(ledger, fake, ("a", "b"), 1, "replace", "pos", 5)
        guarded_mask_fill(ledger, fake, ("a", "b"), 0, "insert", "pos", 5)
        guarded_mask_fill(ledger, fake, ("a", "b"), 0, "replace", "neg", 5)
        guarded_mask_fill(ledger, fake, ("a", "b"), 0, "replace", "pos", 5)  # cached
        assert len(calls) == 4
        assert ledger.ec_count == 4
