import { readFileSync } from 'node:fs';
import path from 'node:path';
import type { FetchLike } from '../src/client';

// The backend's committed API goldens double as frontend fixtures, so both
// suites agree on the wire format byte for byte. Vitest runs rooted at
// frontend/, one level below the repository.
const GOLDEN_DIR = path.resolve(process.cwd(), '../tests/goldens/api');

export interface GoldenExchange {
  request: { method: string; path: string; payload: Record<string, unknown> | null };
  status: number;
  body: string;
}

export function golden(name: string): GoldenExchange {
  const raw = readFileSync(path.join(GOLDEN_DIR, `${name}.json`), 'utf8');
  return JSON.parse(raw) as GoldenExchange;
}

/** Parses a golden's response body into the typed payload. */
export function goldenBody<T>(name: string): T {
  return JSON.parse(golden(name).body) as T;
}

function json(body: string, status = 200): Response {
  return new Response(body, {
    status,
    headers: { 'content-type': 'application/json' },
  });
}

/** Routes API requests to the committed goldens. Unknown cases 404 like the
 * real service; everything else resolves to fixture bytes. */
export function fixtureFetch(): FetchLike {
  return async (url: string, init?: RequestInit): Promise<Response> => {
    const u = new URL(url, 'http://fixtures.test');
    const body = init?.body ? (JSON.parse(String(init.body)) as Record<string, unknown>) : null;

    if (u.pathname === '/api/overview') {
      return json(golden(u.searchParams.get('kind') === 'Missing' ? 'overview_missing' : 'overview').body);
    }
    if (u.pathname === '/api/projection') {
      return json(golden('projection_k3').body);
    }
    if (u.pathname === '/api/path-view') {
      return json(golden('path_view_all').body);
    }
    const links = u.pathname.match(/^\/api\/node\/([^/]+)\/links$/);
    if (links) {
      if (links[1] === 'n1') return json(golden('node_n1_links').body);
      return json(
        JSON.stringify({
          schema_version: 1,
          run_id: 'fixture',
          entity_id: links[1],
          outgoing: [],
          incoming: [],
        }),
      );
    }
    if (u.pathname === '/api/errors/expand') {
      return json(golden(body?.kind === 'Missing' ? 'expand_n1_missing' : 'expand_n1_relation').body);
    }
    const instance = u.pathname.match(/^\/api\/cases\/([^/]+)\/instance$/);
    if (instance) {
      if (instance[1] === 'CASE-B') return json(golden('instance_case_b').body);
      return json(JSON.stringify({ error: `unknown case ${instance[1]}` }), 404);
    }
    if (u.pathname === '/api/cases') {
      return json(golden(u.searchParams.get('entity') === 'n1' ? 'cases_entity_n1' : 'cases_default').body);
    }
    return json(JSON.stringify({ error: `unrouted ${u.pathname}` }), 404);
  };
}

/** Entity-id to display-name lookup taken from the projection fixture. */
export function fixtureNames(): (id: string) => string {
  const p = goldenBody<{ entities: string[]; names: string[] }>('projection_k3');
  const names = new Map(p.entities.map((eid, i) => [eid, p.names[i]]));
  return (id) => names.get(id) ?? id;
}

export function host(): HTMLElement {
  const node = document.createElement('section');
  document.body.appendChild(node);
  return node;
}
