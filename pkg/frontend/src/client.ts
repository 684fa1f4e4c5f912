import type {
  CasesQuery,
  CasesResponse,
  ErrorKind,
  ExpandMode,
  ExpandResponse,
  InstanceResponse,
  NodeLinksResponse,
  OverviewResponse,
  PathViewResponse,
  ProjectionResponse,
} from './api';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface IssuedRequest {
  method: string;
  url: string;
  body?: unknown;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

/** Thin typed transport. Fetch is injected so tests can fake or record it;
 * onRequest sees every issued request regardless of transport. */
export class ApiClient {
  readonly issued: IssuedRequest[] = [];

  constructor(
    private base: string,
    private fetchFn: FetchLike = (...args) => fetch(...args),
    private onRequest?: (req: IssuedRequest) => void,
  ) {}

  private async get<T>(path: string, params: Record<string, unknown> = {}): Promise<T> {
    const qs = Object.entries(params)
      .filter(([, v]) => v !== undefined && v !== null && v !== '')
      .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`)
      .join('&');
    const url = this.base + path + (qs ? `?${qs}` : '');
    this.record({ method: 'GET', url });
    const resp = await this.fetchFn(url);
    return this.parse<T>(resp, url);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const url = this.base + path;
    this.record({ method: 'POST', url, body });
    const resp = await this.fetchFn(url, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    return this.parse<T>(resp, url);
  }

  private record(req: IssuedRequest): void {
    this.issued.push(req);
    this.onRequest?.(req);
  }

  private async parse<T>(resp: Response, url: string): Promise<T> {
    if (!resp.ok) {
      let detail = '';
      try {
        const payload = (await resp.json()) as { error?: string };
        detail = payload.error ?? '';
      } catch {
        // non-JSON error body; status alone will have to do
      }
      throw new ApiError(resp.status, detail || `${url} -> ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  overview(kind?: ErrorKind | null): Promise<OverviewResponse> {
    return this.get('/api/overview', { kind });
  }

  projection(k: number, kind?: ErrorKind | null): Promise<ProjectionResponse> {
    return this.get('/api/projection', { k, kind });
  }

  pathView(entityIds: string[], minErrorIntensity: number): Promise<PathViewResponse> {
    return this.post('/api/path-view', {
      entity_ids: entityIds,
      min_error_intensity: minErrorIntensity,
    });
  }

  nodeLinks(entityId: string): Promise<NodeLinksResponse> {
    return this.get(`/api/node/${encodeURIComponent(entityId)}/links`);
  }

  expand(anchor: string, kind: ErrorKind, mode: ExpandMode): Promise<ExpandResponse> {
    return this.post('/api/errors/expand', { anchor, kind, mode });
  }

  cases(query: CasesQuery = {}): Promise<CasesResponse> {
    return this.get('/api/cases', { ...query });
  }

  instance(caseId: string): Promise<InstanceResponse> {
    return this.get(`/api/cases/${encodeURIComponent(caseId)}/instance`);
  }
}

/** Serializes view refreshes: concurrent calls for the same key are deduped
 * while in flight, and a response is applied only if no newer request for
 * that key started meanwhile (stale responses are discarded). */
export class RequestGate {
  private seq = new Map<string, number>();
  private inflight = new Map<string, Promise<void>>();

  run<T>(key: string, exec: () => Promise<T>, apply: (value: T) => void): Promise<void> {
    const pending = this.inflight.get(key);
    if (pending) return pending;
    const ticket = (this.seq.get(key) ?? 0) + 1;
    this.seq.set(key, ticket);
    const job = exec()
      .then((value) => {
        if (this.seq.get(key) === ticket) apply(value);
      })
      .finally(() => {
        if (this.inflight.get(key) === job) this.inflight.delete(key);
      });
    this.inflight.set(key, job);
    return job;
  }

  /** Force the next run for key to issue a fresh request even if one is in
   * flight; its eventual response supersedes the older one. */
  invalidate(key: string): void {
    this.inflight.delete(key);
  }
}
