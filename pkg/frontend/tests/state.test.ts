import { describe, expect, it } from 'vitest';
import {
  bindToLocation,
  DEFAULT_STATE,
  deserializeState,
  serializeState,
  Store,
  type SessionState,
} from '../src/state';

const FULL: SessionState = {
  selectedErrorKind: 'Missing',
  brushedEntityIds: ['n1', 'n2'],
  minErrorIntensity: 2,
  selectedNode: 'n1',
  expansion: { anchor: 'n1', kind: 'Missing', mode: 'AlongErrorSet' },
  selectedCase: 'CASE-A',
  topK: 5,
};

describe('session state codec', () => {
  it('round-trips every field through the fragment', () => {
    const frag = serializeState(FULL);
    expect(deserializeState(`#s=${frag}`)).toEqual(FULL);
  });

  it('serializes the default session to an empty fragment', () => {
    expect(serializeState(DEFAULT_STATE)).toBe('');
    expect(deserializeState('')).toEqual(DEFAULT_STATE);
  });

  it('restores defaults from malformed fragments', () => {
    for (const junk of ['#s=%7Bnope', '#s=not-json', '#garbage', '#s=%7B%22k%22%3A']) {
      expect(deserializeState(junk)).toEqual(DEFAULT_STATE);
    }
  });

  it('keeps fields not present in a partial fragment at their defaults', () => {
    const frag = encodeURIComponent(JSON.stringify({ k: 'Branch' }));
    const state = deserializeState(`#s=${frag}`);
    expect(state.selectedErrorKind).toBe('Branch');
    expect(state.topK).toBe(DEFAULT_STATE.topK);
    expect(state.brushedEntityIds).toBeNull();
  });
});

describe('store', () => {
  it('notifies subscribers with next and previous state', () => {
    const store = new Store();
    const seen: [string | null, string | null][] = [];
    store.subscribe((next, prev) => seen.push([next.selectedNode, prev.selectedNode]));
    store.update({ selectedNode: 'n1' });
    store.update({ selectedNode: 'n2' });
    expect(seen).toEqual([
      ['n1', null],
      ['n2', 'n1'],
    ]);
  });

  it('ignores updates that do not change the serialized state', () => {
    const store = new Store();
    let calls = 0;
    store.subscribe(() => calls++);
    store.update({ selectedNode: 'n1' });
    store.update({ selectedNode: 'n1' });
    store.update({ expansion: null });
    expect(calls).toBe(1);
  });
});

describe('location binding', () => {
  it('mirrors updates into the hash and restores on hashchange', () => {
    window.location.hash = '';
    const store = new Store();
    const unbind = bindToLocation(store, window);

    store.update({ selectedErrorKind: 'Missing', selectedCase: 'CASE-A' });
    expect(window.location.hash.startsWith('#s=')).toBe(true);
    const recorded = window.location.hash;

    // simulate back/forward landing on a different fragment
    window.location.hash = `#s=${serializeState({ ...DEFAULT_STATE, topK: 3 })}`;
    window.dispatchEvent(new Event('hashchange'));
    expect(store.get().topK).toBe(3);
    expect(store.get().selectedErrorKind).toBeNull();

    window.location.hash = recorded;
    window.dispatchEvent(new Event('hashchange'));
    expect(store.get().selectedErrorKind).toBe('Missing');
    expect(store.get().selectedCase).toBe('CASE-A');

    unbind();
    store.update({ topK: 9 });
    expect(window.location.hash).toBe(recorded);
  });
});
