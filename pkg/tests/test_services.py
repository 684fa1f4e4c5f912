import json

import numpy as np
import pytest

from kgaudit.exceptions import ProviderProtocolError, RetriableProviderError
from kgaudit.services import (
    AlignChoice,
    AlignChoiceResult,
    Categorize,
    Extract,
    HashEmbedder,
    HttpAdjudicator,
    HttpEmbedder,
    HttpSettings,
    PrunePaths,
    ResponseCache,
    StubAdjudicator,
    canonical_digest,
    cosine,
)


def test_cosine_identity_antisymmetry_orthogonality():
    v = np.array([0.3, -1.2, 0.5])
    assert cosine(v, v) == pytest.approx(1.0)
    assert cosine(v, -v) == pytest.approx(-1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_cosine_rejects_bad_input():
    with pytest.raises(ValueError, match="zero-norm"):
        cosine(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError, match="dimension"):
        cosine(np.ones(3), np.ones(4))


def test_hash_embedder_deterministic():
    e = HashEmbedder(dimension=32)
    a = e.embed(["fever", "rash"])
    b = e.embed(["fever", "rash"])
    np.testing.assert_array_equal(a, b)
    assert a.shape == (2, 32)
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)


def test_hash_embedder_distinct_texts_differ():
    e = HashEmbedder(dimension=32)
    vecs = e.embed(["fever", "rash"])
    assert abs(cosine(vecs[0], vecs[1])) < 0.9


def test_hash_embedder_pinned_pair():
    e = HashEmbedder(dimension=64, pinned=[("fever", "pyrexia", 0.95)])
    vecs = e.embed(["fever", "pyrexia"])
    assert cosine(vecs[0], vecs[1]) == pytest.approx(0.95, abs=1e-9)
    np.testing.assert_allclose(np.linalg.norm(vecs, axis=1), 1.0, atol=1e-9)


def test_hash_embedder_rejects_empty_batch():
    with pytest.raises(ValueError):
        HashEmbedder().embed([])


def test_stub_align_choice_picks_highest_similarity():
    stub = StubAdjudicator()
    req = AlignChoice(
        mention="x",
        context="",
        candidates=(("e1", "a", 0.4), ("e2", "b", 0.8), ("e3", "c", 0.6)),
    )
    assert stub.adjudicate(req).index == 1
    sorted_req = AlignChoice(
        mention="x", context="", candidates=(("e2", "b", 0.8), ("e3", "c", 0.6))
    )
    assert stub.adjudicate(sorted_req).index == 0
    assert stub.adjudicate(AlignChoice("x", "", ())).index is None


def test_stub_prune_paths_is_passthrough():
    stub = StubAdjudicator()
    req = PrunePaths(context="", paths=(("a", "b"), ("a", "c", "d")))
    assert stub.adjudicate(req).indices == (0, 1)


def test_stub_extract_orders_by_first_occurrence():
    stub = StubAdjudicator(known_terms={"rash": "Symptom", "fever": "Symptom"})
    got = stub.adjudicate(Extract(text="A rash then a Fever appeared."))
    assert got.mentions == (("rash", "Symptom"), ("fever", "Symptom"))


def test_stub_categorize_uses_kinds_and_sentinel_summary():
    stub = StubAdjudicator()
    got = stub.adjudicate(
        Categorize(
            context="",
            error_entities=(("e1", "fracture", "Disease"),),
            reference_entities=(("e2", "fever", "Symptom"),),
        )
    )
    assert got.error_labels == {"e1": "Disease"}
    assert got.reference_labels == {"e2": "Symptom"}
    assert got.summary == "stub"


def test_response_cache_roundtrip(tmp_path):
    cache = ResponseCache(tmp_path)
    digest = canonical_digest("Extract", {"text": "x"})
    assert cache.get("prov", digest) is None
    cache.put("prov", digest, {"text": "x"}, {"result": {"mentions": []}})
    assert cache.get("prov", digest) == {"result": {"mentions": []}}


def test_response_cache_rejects_other_versions(tmp_path):
    cache = ResponseCache(tmp_path)
    digest = canonical_digest("Extract", {"text": "x"})
    cache.put("prov", digest, {}, {"ok": 1})
    path = tmp_path / "prov" / f"{digest}.json"
    entry = json.loads(path.read_text())
    entry["cache_version"] = 99
    path.write_text(json.dumps(entry))
    assert cache.get("prov", digest) is None


class _Resp:
    def __init__(self, status_code, body):
        self.status_code = status_code
        self._body = body
        self.text = json.dumps(body)

    def json(self):
        return self._body


class _FakeClient:
    """Scripted stand-in for httpx.post."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append(json)
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def _settings(retries=2):
    return HttpSettings(endpoint="http://unit.test/api", model="m1", retries=retries, backoff=0.0)


def test_http_adjudicator_parses_and_caches(tmp_path):
    cache = ResponseCache(tmp_path)
    ok = _Resp(200, {"result": {"index": 1}})
    client = _FakeClient([ok])
    adj = HttpAdjudicator(_settings(), cache=cache, client=client)
    req = AlignChoice("x", "ctx", (("e1", "a", 0.4), ("e2", "b", 0.8)))
    assert adj.adjudicate(req) == AlignChoiceResult(index=1)
    # second call is served from cache: the scripted client has no responses left
    assert adj.adjudicate(req) == AlignChoiceResult(index=1)
    assert len(client.calls) == 1


def test_http_adjudicator_retries_then_succeeds():
    import httpx

    client = _FakeClient(
        [httpx.ConnectError("boom"), _Resp(503, {}), _Resp(200, {"result": {"indices": [0]}})]
    )
    adj = HttpAdjudicator(_settings(retries=2), client=client)
    got = adj.adjudicate(PrunePaths(context="", paths=(("a", "b"),)))
    assert got.indices == (0,)
    assert len(client.calls) == 3


def test_http_adjudicator_gives_up_after_bounded_retries():
    client = _FakeClient([_Resp(503, {})] * 3)
    adj = HttpAdjudicator(_settings(retries=2), client=client)
    with pytest.raises(RetriableProviderError):
        adj.adjudicate(Extract(text="x"))
    assert len(client.calls) == 3


def test_http_adjudicator_schema_violation_keeps_payload():
    client = _FakeClient([_Resp(200, {"result": {"wrong": True}})])
    adj = HttpAdjudicator(_settings(), client=client)
    with pytest.raises(ProviderProtocolError) as err:
        adj.adjudicate(AlignChoice("x", "", (("e1", "a", 0.5),)))
    assert "wrong" in (err.value.raw_payload or "")


def test_http_adjudicator_rejects_out_of_range_index():
    client = _FakeClient([_Resp(200, {"result": {"index": 7}})])
    adj = HttpAdjudicator(_settings(), client=client)
    with pytest.raises(ProviderProtocolError, match="out of range"):
        adj.adjudicate(AlignChoice("x", "", (("e1", "a", 0.5),)))


def test_http_embedder_validates_dimension():
    client = _FakeClient([_Resp(200, {"embeddings": [[1.0, 0.0, 0.0]]})])
    emb = HttpEmbedder(_settings(), dimension=2, client=client)
    with pytest.raises(ProviderProtocolError, match="dimension"):
        emb.embed(["x"])


def test_http_embedder_happy_path():
    client = _FakeClient([_Resp(200, {"embeddings": [[1.0, 0.0], [0.0, 1.0]]})])
    emb = HttpEmbedder(_settings(), dimension=2, client=client)
    got = emb.embed(["a", "b"])
    np.testing.assert_array_equal(got, np.eye(2))


def test_request_digests_are_canonical():
    a = canonical_digest("Extract", {"text": "x", "z": 1})
    b = canonical_digest("Extract", {"z": 1, "text": "x"})
    assert a == b
    assert a != canonical_digest("Extract", {"text": "y", "z": 1})
