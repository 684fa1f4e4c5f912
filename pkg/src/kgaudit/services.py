"""External intelligence services: text embedding and LLM adjudication.

Two provider families exist behind small protocols: deterministic offline
doubles (the default, used by tests and the demo) and HTTP clients for real
endpoints. Adjudication requests are capability-tagged payloads with
canonical JSON digests, which drive both retry idempotence and the on-disk
response cache.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .exceptions import ProviderProtocolError, RetriableProviderError

log = logging.getLogger(__name__)

CAPABILITIES = frozenset({"AlignChoice", "PrunePaths", "Extract", "Categorize"})


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; rejects mismatched dimensions and zero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm vectors")
    return float(np.dot(a, b) / (na * nb))


def canonical_digest(kind: str, payload: dict) -> str:
    blob = json.dumps({"kind": kind, "payload": payload}, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# -- request/response payloads ---------------------------------------------


@dataclass(frozen=True)
class AlignChoice:
    """Pick the KG candidate a mention refers to, or abstain."""

    mention: str
    context: str
    candidates: tuple[tuple[str, str, float], ...]  # (entity_id, name, similarity)

    kind = "AlignChoice"

    def payload(self) -> dict:
        return {
            "mention": self.mention,
            "context": self.context,
            "candidates": [list(c) for c in self.candidates],
        }


@dataclass(frozen=True)
class PrunePaths:
    """Keep only the paths relevant to the case; returns indices."""

    context: str
    paths: tuple[tuple[str, ...], ...]  # node-id sequences

    kind = "PrunePaths"

    def payload(self) -> dict:
        return {"context": self.context, "paths": [list(p) for p in self.paths]}


@dataclass(frozen=True)
class Extract:
    """Pull medical entity mentions out of free text."""

    text: str

    kind = "Extract"

    def payload(self) -> dict:
        return {"text": self.text}


@dataclass(frozen=True)
class Categorize:
    """Assign semantic categories to two entity groups and summarize the
    difference between them."""

    context: str
    error_entities: tuple[tuple[str, str, str], ...]  # (entity_id, name, kind)
    reference_entities: tuple[tuple[str, str, str], ...]

    kind = "Categorize"

    def payload(self) -> dict:
        return {
            "context": self.context,
            "error_entities": [list(e) for e in self.error_entities],
            "reference_entities": [list(e) for e in self.reference_entities],
        }


Request = AlignChoice | PrunePaths | Extract | Categorize


@dataclass(frozen=True)
class AlignChoiceResult:
    index: int | None  # None is an explicit abstention


@dataclass(frozen=True)
class PrunePathsResult:
    indices: tuple[int, ...]


@dataclass(frozen=True)
class ExtractResult:
    mentions: tuple[tuple[str, str], ...]  # (text, kind-label)


@dataclass(frozen=True)
class CategorizeResult:
    error_labels: dict[str, str]  # entity_id -> category label
    reference_labels: dict[str, str]
    summary: str


# -- protocols ---------------------------------------------------------------


@runtime_checkable
class EmbeddingProvider(Protocol):
    identity: str
    dimension: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


@runtime_checkable
class Adjudicator(Protocol):
    identity: str
    capabilities: frozenset[str]

    def adjudicate(self, request: Request): ...


# -- deterministic doubles ---------------------------------------------------


class HashEmbedder:
    """Offline embedder: unit vectors pseudo-randomly seeded by the text's
    digest, so equal text always embeds identically. Specific similarity
    values can be pinned per text pair for tests: the second text's vector
    is rebuilt in the plane spanned by the first text's vector and an
    orthogonal direction, hitting the requested cosine exactly."""

    def __init__(
        self,
        dimension: int = 64,
        identity: str = "hash-embedder-v1",
        pinned: Sequence[tuple[str, str, float]] = (),
    ):
        if dimension < 2:
            raise ValueError("dimension must be >= 2")
        self.dimension = dimension
        self.identity = identity
        self._pinned: dict[str, tuple[str, float]] = {}
        for anchor, other, target in pinned:
            if not (-1.0 <= target <= 1.0):
                raise ValueError(f"pinned cosine out of range: {target}")
            self._pinned[other] = (anchor, float(target))

    def _base_vector(self, text: str) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
        rng = np.random.Generator(np.random.PCG64(seed))
        v = rng.standard_normal(self.dimension)
        return v / np.linalg.norm(v)

    def _vector(self, text: str) -> np.ndarray:
        pin = self._pinned.get(text)
        if pin is None:
            return self._base_vector(text)
        anchor_text, target = pin
        a = self._vector(anchor_text) if anchor_text in self._pinned else self._base_vector(anchor_text)
        raw = self._base_vector(text)
        w = raw - np.dot(raw, a) * a
        norm = np.linalg.norm(w)
        if norm < 1e-12:
            w = np.zeros(self.dimension)
            w[0 if abs(a[0]) < 0.9 else 1] = 1.0
            w -= np.dot(w, a) * a
            norm = np.linalg.norm(w)
        w /= norm
        return target * a + np.sqrt(max(0.0, 1.0 - target * target)) * w

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not len(texts):
            raise ValueError("embed requires at least one text")
        return np.stack([self._vector(t) for t in texts])


class StubAdjudicator:
    """Rule-based offline adjudicator.

    AlignChoice picks the highest-similarity candidate (abstaining on
    mentions outside the term table when one is configured), PrunePaths
    keeps everything, Extract matches the term table, Categorize labels
    each entity with its kind and emits a fixed sentinel summary.
    """

    identity = "stub-adjudicator-v1"
    capabilities = CAPABILITIES

    def __init__(self, known_terms: dict[str, str] | None = None):
        # surface text (lowercase) -> kind label, for Extract and the
        # AlignChoice abstention rule
        self.known_terms = {k.lower(): v for k, v in (known_terms or {}).items()}

    def adjudicate(self, request: Request):
        if isinstance(request, AlignChoice):
            if not request.candidates:
                return AlignChoiceResult(index=None)
            if self.known_terms and request.mention.casefold().strip() not in self.known_terms:
                return AlignChoiceResult(index=None)
            best = max(range(len(request.candidates)), key=lambda i: request.candidates[i][2])
            return AlignChoiceResult(index=best)
        if isinstance(request, PrunePaths):
            return PrunePathsResult(indices=tuple(range(len(request.paths))))
        if isinstance(request, Extract):
            found = []
            lowered = request.text.lower()
            for term in sorted(self.known_terms):
                pos = lowered.find(term)
                if pos >= 0:
                    found.append((pos, term))
            found.sort()
            return ExtractResult(
                mentions=tuple((term, self.known_terms[term]) for _, term in found)
            )
        if isinstance(request, Categorize):
            return CategorizeResult(
                error_labels={eid: kind for eid, _, kind in request.error_entities},
                reference_labels={eid: kind for eid, _, kind in request.reference_entities},
                summary="stub",
            )
        raise ProviderProtocolError(f"unsupported request type: {type(request).__name__}")


class AbstainingAdjudicator(StubAdjudicator):
    """Stub variant that always abstains on AlignChoice (test double)."""

    identity = "abstaining-adjudicator-v1"

    def adjudicate(self, request: Request):
        if isinstance(request, AlignChoice):
            return AlignChoiceResult(index=None)
        return super().adjudicate(request)


# -- response cache ----------------------------------------------------------

CACHE_VERSION = 1


class ResponseCache:
    """One JSON file per (provider identity, request digest). Writes are
    atomic via temp + rename so concurrent readers never see torn files."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    def _path(self, identity: str, digest: str) -> Path:
        safe = identity.replace("/", "_")
        return self.root / safe / f"{digest}.json"

    def get(self, identity: str, digest: str) -> dict | None:
        path = self._path(identity, digest)
        try:
            with open(path, encoding="utf-8") as fh:
                entry = json.load(fh)
        except FileNotFoundError:
            return None
        except json.JSONDecodeError:
            log.warning("discarding unreadable cache entry %s", path)
            return None
        if entry.get("cache_version") != CACHE_VERSION:
            return None
        return entry["response"]

    def put(self, identity: str, digest: str, request_payload: dict, response: dict) -> None:
        path = self._path(identity, digest)
        entry = {
            "cache_version": CACHE_VERSION,
            "identity": identity,
            "digest": digest,
            "request": request_payload,
            "response": response,
        }
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(entry, sort_keys=True, ensure_ascii=False), encoding="utf-8")
            os.replace(tmp, path)


# -- HTTP providers ----------------------------------------------------------


def _load_template(name: str) -> str:
    return (resources.files("kgaudit") / "templates" / name).read_text(encoding="utf-8")


@dataclass
class HttpSettings:
    endpoint: str
    model: str
    credential_env: str = ""
    timeout: float = 30.0
    retries: int = 2
    backoff: float = 0.2
    concurrency: int = 4


class _HttpBase:
    def __init__(self, settings: HttpSettings, cache: ResponseCache | None = None, client=None):
        self.settings = settings
        self.cache = cache
        self._client = client  # anything with httpx.post's signature
        self._sem = threading.Semaphore(max(1, settings.concurrency))

    def _headers(self) -> dict:
        headers = {"content-type": "application/json"}
        if self.settings.credential_env:
            token = os.environ.get(self.settings.credential_env, "")
            if token:
                headers["authorization"] = f"Bearer {token}"
        return headers

    def _post(self, body: dict) -> dict:
        import httpx

        client = self._client or httpx
        last: Exception | None = None
        for attempt in range(self.settings.retries + 1):
            if attempt:
                time.sleep(min(2.0, self.settings.backoff * 2**attempt))
            try:
                with self._sem:
                    resp = client.post(
                        self.settings.endpoint,
                        json=body,
                        headers=self._headers(),
                        timeout=self.settings.timeout,
                    )
            except httpx.HTTPError as exc:
                last = exc
                continue
            if resp.status_code >= 500:
                last = RetriableProviderError(f"server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise ProviderProtocolError(
                    f"unexpected status {resp.status_code}", raw_payload=resp.text
                )
            try:
                return resp.json()
            except ValueError as exc:
                raise ProviderProtocolError(
                    "response is not JSON", raw_payload=resp.text
                ) from exc
        raise RetriableProviderError(
            f"gave up after {self.settings.retries + 1} attempts: {last}"
        )


class HttpEmbedder(_HttpBase):
    """Batch embedding over a generic JSON endpoint."""

    def __init__(
        self,
        settings: HttpSettings,
        dimension: int,
        cache: ResponseCache | None = None,
        client=None,
    ):
        super().__init__(settings, cache, client)
        self.dimension = dimension
        self.identity = f"http-embedder:{settings.model}"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not len(texts):
            raise ValueError("embed requires at least one text")
        payload = {"model": self.settings.model, "input": list(texts)}
        digest = canonical_digest("Embed", payload)
        data = self.cache.get(self.identity, digest) if self.cache else None
        if data is None:
            data = self._post(payload)
            if self.cache:
                self.cache.put(self.identity, digest, payload, data)
        vectors = data.get("embeddings")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderProtocolError(
                "embedding response must carry one vector per input",
                raw_payload=json.dumps(data)[:2000],
            )
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != self.dimension:
            raise ProviderProtocolError(
                f"expected dimension {self.dimension}, got shape {arr.shape}",
                raw_payload=json.dumps(data)[:2000],
            )
        return arr


_TEMPLATE_FILES = {
    "AlignChoice": "align_choice.txt",
    "PrunePaths": "prune_paths.txt",
    "Extract": "extract.txt",
    "Categorize": "categorize.txt",
}


class HttpAdjudicator(_HttpBase):
    """LLM adjudication over a generic chat endpoint with structured JSON
    replies. Prompts come from the bundled template files."""

    capabilities = CAPABILITIES

    def __init__(self, settings: HttpSettings, cache: ResponseCache | None = None, client=None):
        super().__init__(settings, cache, client)
        self.identity = f"http-adjudicator:{settings.model}"

    def adjudicate(self, request: Request):
        payload = request.payload()
        digest = canonical_digest(request.kind, payload)
        data = self.cache.get(self.identity, digest) if self.cache else None
        if data is None:
            # plain token substitution: templates hold literal JSON braces
            prompt = _load_template(_TEMPLATE_FILES[request.kind]).replace(
                "{payload}", json.dumps(payload, sort_keys=True, ensure_ascii=False)
            )
            body = {"model": self.settings.model, "kind": request.kind, "prompt": prompt}
            data = self._post(body)
            if self.cache:
                self.cache.put(self.identity, digest, payload, data)
        return self._parse(request, data)

    def _parse(self, request: Request, data: dict):
        result = data.get("result")
        raw = json.dumps(data)[:2000]
        if not isinstance(result, dict):
            raise ProviderProtocolError("missing result object", raw_payload=raw)
        try:
            if isinstance(request, AlignChoice):
                index = result["index"]
                if index is not None:
                    index = int(index)
                    if not (0 <= index < len(request.candidates)):
                        raise ProviderProtocolError(
                            f"candidate index {index} out of range", raw_payload=raw
                        )
                return AlignChoiceResult(index=index)
            if isinstance(request, PrunePaths):
                indices = tuple(
                    int(i) for i in result["indices"] if 0 <= int(i) < len(request.paths)
                )
                return PrunePathsResult(indices=indices)
            if isinstance(request, Extract):
                return ExtractResult(
                    mentions=tuple((str(t), str(k)) for t, k in result["mentions"])
                )
            if isinstance(request, Categorize):
                return CategorizeResult(
                    error_labels={str(k): str(v) for k, v in result["error_labels"].items()},
                    reference_labels={
                        str(k): str(v) for k, v in result["reference_labels"].items()
                    },
                    summary=str(result["summary"]),
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderProtocolError(
                f"malformed {request.kind} result: {exc}", raw_payload=raw
            ) from exc
        raise ProviderProtocolError(f"unsupported request type: {type(request).__name__}")


# -- factory -----------------------------------------------------------------


def build_providers(
    config,
    cache_dir: str | Path | None = None,
    vocabulary: dict[str, str] | None = None,
):
    """(embedder, adjudicator) per the providers section of the config.

    `vocabulary` (term -> kind) grounds the offline adjudicator so that it
    extracts and aligns exactly the known terms instead of guessing.
    """
    from .config import Config

    assert isinstance(config, Config)
    p = config.providers
    if p.mode == "doubles":
        return (
            HashEmbedder(dimension=p.embedder.dimension or 64),
            StubAdjudicator(known_terms=vocabulary),
        )
    cache = ResponseCache(cache_dir) if cache_dir else None
    embedder = HttpEmbedder(
        HttpSettings(
            endpoint=p.embedder.endpoint,
            model=p.embedder.model,
            credential_env=p.embedder.credential_env,
            timeout=p.embedder.timeout,
            retries=p.embedder.retries,
            concurrency=config.concurrency,
        ),
        dimension=p.embedder.dimension,
        cache=cache,
    )
    adjudicator = HttpAdjudicator(
        HttpSettings(
            endpoint=p.adjudicator.endpoint,
            model=p.adjudicator.model,
            credential_env=p.adjudicator.credential_env,
            timeout=p.adjudicator.timeout,
            retries=p.adjudicator.retries,
            concurrency=config.concurrency,
        ),
        cache=cache,
    )
    return embedder, adjudicator
