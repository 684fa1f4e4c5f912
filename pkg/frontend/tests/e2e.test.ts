import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import path from 'node:path';
import { App } from '../src/app';
import { ApiClient } from '../src/client';
import { Store } from '../src/state';

// Full steering pass against a live demo server: select the Missing kind,
// brush the whole projection, select the top error node, expand its error
// set, open the top case, and land on the instance view showing the entity
// the model failed to mention.

const PORT = 8300 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

let child: ChildProcess | null = null;
let storeDir = '';
let serverLog = '';

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 90_000;
  for (;;) {
    try {
      const resp = await fetch(`${BASE}/api/overview`);
      if (resp.status === 200) return;
    } catch {
      // not accepting connections yet
    }
    if (child?.exitCode !== null && child?.exitCode !== undefined) {
      throw new Error(`demo server exited early (${child.exitCode}):\n${serverLog}`);
    }
    if (Date.now() > deadline) {
      throw new Error(`demo server not ready on ${BASE}:\n${serverLog}`);
    }
    await new Promise((r) => setTimeout(r, 250));
  }
}

beforeAll(async () => {
  storeDir = mkdtempSync(path.join(tmpdir(), 'kgaudit-e2e-'));
  child = spawn(
    'kgaudit',
    ['demo', '--store', storeDir, '--serve', '--host', '127.0.0.1', '--port', String(PORT)],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  child.stdout?.on('data', (chunk: Buffer) => (serverLog += chunk.toString()));
  child.stderr?.on('data', (chunk: Buffer) => (serverLog += chunk.toString()));
  await waitForServer();
}, 110_000);

afterAll(async () => {
  if (child && child.exitCode === null) {
    child.kill('SIGTERM');
    await new Promise((r) => setTimeout(r, 300));
    if (child.exitCode === null) child.kill('SIGKILL');
  }
  if (storeDir) rmSync(storeDir, { recursive: true, force: true });
});

describe('steering a live session', () => {
  it('walks from kind selection to the missing entity of the top case', async () => {
    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById('app')!;
    const app = new App(root, new ApiClient(BASE), new Store());
    await app.start();
    expect(root.querySelector('#panel-projection .projection-canvas')).not.toBeNull();

    // 1. select the Missing kind
    (root.querySelector('.kind-tile[data-kind="Missing"]') as HTMLButtonElement).click();
    await app.whenIdle();
    expect(app.store.get().selectedErrorKind).toBe('Missing');
    expect(root.querySelector('#panel-overview .slice-line')?.textContent).toContain('Missing');

    // 2. brush the full projection extent
    app.applyBrush(0, 0, 1, 1);
    await app.whenIdle();
    expect(app.store.get().brushedEntityIds?.length).toBeGreaterThan(0);
    expect(root.querySelector('#panel-overview .region-line')).not.toBeNull();

    // 3. select the top node for this kind
    const topDot = root.querySelector('#panel-projection .top-dot');
    expect(topDot).not.toBeNull();
    const topEntity = topDot!.getAttribute('data-entity')!;
    expect(topEntity).toBe('n1');
    const glyph = root.querySelector(`#panel-paths .glyph[data-entity="${topEntity}"]`)!;
    glyph.dispatchEvent(new MouseEvent('click', { bubbles: true }));
    await app.whenIdle();
    expect(app.store.get().selectedNode).toBe(topEntity);

    // 4. expand along the error set
    (root.querySelector('.expand-btn[data-mode="AlongErrorSet"]') as HTMLButtonElement).click();
    await app.whenIdle();
    expect(app.store.get().expansion).toEqual({
      anchor: topEntity,
      kind: 'Missing',
      mode: 'AlongErrorSet',
    });
    expect(
      root.querySelector('#panel-patterns .anchor-box')?.getAttribute('data-entity'),
    ).toBe(topEntity);

    // 5. open the top case in the filtered table
    const row = root.querySelector('#panel-cases .case-row') as HTMLTableRowElement;
    expect(row).not.toBeNull();
    const caseId = row.getAttribute('data-case-id')!;
    expect(caseId).toBe('CASE-A');
    row.click();
    await app.whenIdle();

    // 6. the instance view shows the entity the model never mentioned
    expect(root.querySelector('#panel-instance .case-title')?.textContent).toBe('CASE-A');
    const missingChip = root.querySelector(
      '#panel-instance .path-row.missing .chip[data-entity="n1"]',
    );
    expect(missingChip).not.toBeNull();
    expect(missingChip!.textContent).toBe('fever');
    expect(missingChip!.classList.contains('unmentioned')).toBe(true);
  }, 110_000);
});
