import { describe, expect, it } from 'vitest';
import { ApiClient, ApiError, RequestGate } from '../src/client';

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}

describe('api client', () => {
  it('drops empty query parameters and records issued requests', async () => {
    const urls: string[] = [];
    const client = new ApiClient('', async (url) => {
      urls.push(url);
      return jsonResponse({ total: 0, offset: 0, limit: 50, cases: [] });
    });
    await client.cases({ sort: 'CaseIdAsc', kind: undefined, text: '' });
    expect(urls).toEqual(['/api/cases?sort=CaseIdAsc']);
    expect(client.issued).toEqual([{ method: 'GET', url: '/api/cases?sort=CaseIdAsc' }]);
  });

  it('records post bodies for downstream assertions', async () => {
    const client = new ApiClient('', async () => jsonResponse({}));
    await client.expand('n1', 'Missing', 'AlongErrorSet');
    expect(client.issued[0]).toEqual({
      method: 'POST',
      url: '/api/errors/expand',
      body: { anchor: 'n1', kind: 'Missing', mode: 'AlongErrorSet' },
    });
  });

  it('surfaces the service error message with the status code', async () => {
    const client = new ApiClient('', async () => jsonResponse({ error: 'run is incomplete' }, 409));
    const err = await client.overview().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).message).toBe('run is incomplete');
  });

  it('falls back to a url/status message for non-json errors', async () => {
    const client = new ApiClient('', async () => new Response('boom', { status: 502 }));
    const err = await client.overview().catch((e: unknown) => e);
    expect((err as ApiError).message).toBe('/api/overview -> 502');
  });
});

interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
}

function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((r) => (resolve = r));
  return { promise, resolve };
}

describe('request gate', () => {
  it('dedupes concurrent runs for the same key', async () => {
    const gate = new RequestGate();
    const d = deferred<string>();
    let execs = 0;
    const applied: string[] = [];
    const exec = () => {
      execs++;
      return d.promise;
    };
    const first = gate.run('k', exec, (v) => applied.push(v));
    const second = gate.run('k', exec, (v) => applied.push(`dup:${v}`));
    expect(second).toBe(first);
    d.resolve('a');
    await first;
    expect(execs).toBe(1);
    expect(applied).toEqual(['a']);
  });

  it('discards a stale response after invalidation', async () => {
    const gate = new RequestGate();
    const slow = deferred<string>();
    const fast = deferred<string>();
    const applied: string[] = [];
    const first = gate.run('k', () => slow.promise, (v) => applied.push(v));
    gate.invalidate('k');
    const second = gate.run('k', () => fast.promise, (v) => applied.push(v));
    fast.resolve('new');
    await second;
    slow.resolve('old');
    await first;
    expect(applied).toEqual(['new']);
  });

  it('tracks keys independently', async () => {
    const gate = new RequestGate();
    const applied: string[] = [];
    await Promise.all([
      gate.run('a', async () => 'va', (v) => applied.push(v)),
      gate.run('b', async () => 'vb', (v) => applied.push(v)),
    ]);
    expect(applied.sort()).toEqual(['va', 'vb']);
  });
});
