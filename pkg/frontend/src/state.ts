import type { ErrorKind, ExpandMode } from './api';

// Single source of truth for everything the views coordinate on. Views
// render from this plus API data only, so restoring a serialized state
// replays the whole session.

export interface ExpansionRef {
  anchor: string;
  kind: ErrorKind;
  mode: ExpandMode;
}

export interface SessionState {
  selectedErrorKind: ErrorKind | null;
  brushedEntityIds: string[] | null; // null = no brush (all entities)
  minErrorIntensity: number;
  selectedNode: string | null;
  expansion: ExpansionRef | null;
  selectedCase: string | null;
  topK: number;
}

export const DEFAULT_STATE: SessionState = {
  selectedErrorKind: null,
  brushedEntityIds: null,
  minErrorIntensity: 0,
  selectedNode: null,
  expansion: null,
  selectedCase: null,
  topK: 8,
};

export type Listener = (state: SessionState, prev: SessionState) => void;

export class Store {
  private state: SessionState;
  private listeners: Listener[] = [];

  constructor(initial: SessionState = DEFAULT_STATE) {
    this.state = { ...initial };
  }

  get(): SessionState {
    return this.state;
  }

  update(patch: Partial<SessionState>): void {
    const prev = this.state;
    const next = { ...prev, ...patch };
    if (serializeState(next) === serializeState(prev)) return;
    this.state = next;
    for (const fn of this.listeners) fn(next, prev);
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }
}

// -- location-fragment codec -------------------------------------------------
// Short keys keep the fragment readable; defaults are omitted entirely so an
// untouched session has an empty fragment.

interface FragmentShape {
  k?: ErrorKind;
  b?: string[];
  t?: number;
  n?: string;
  x?: [string, ErrorKind, ExpandMode];
  c?: string;
  K?: number;
}

export function serializeState(state: SessionState): string {
  const frag: FragmentShape = {};
  if (state.selectedErrorKind) frag.k = state.selectedErrorKind;
  if (state.brushedEntityIds) frag.b = state.brushedEntityIds;
  if (state.minErrorIntensity !== 0) frag.t = state.minErrorIntensity;
  if (state.selectedNode) frag.n = state.selectedNode;
  if (state.expansion) frag.x = [state.expansion.anchor, state.expansion.kind, state.expansion.mode];
  if (state.selectedCase) frag.c = state.selectedCase;
  if (state.topK !== DEFAULT_STATE.topK) frag.K = state.topK;
  return Object.keys(frag).length ? encodeURIComponent(JSON.stringify(frag)) : '';
}

export function deserializeState(fragment: string): SessionState {
  const state: SessionState = { ...DEFAULT_STATE };
  const raw = fragment.replace(/^#/, '').replace(/^s=/, '');
  if (!raw) return state;
  let frag: FragmentShape;
  try {
    frag = JSON.parse(decodeURIComponent(raw)) as FragmentShape;
  } catch {
    return state; // malformed fragments restore the default session
  }
  if (frag.k) state.selectedErrorKind = frag.k;
  if (Array.isArray(frag.b)) state.brushedEntityIds = frag.b.map(String);
  if (typeof frag.t === 'number') state.minErrorIntensity = frag.t;
  if (frag.n) state.selectedNode = String(frag.n);
  if (Array.isArray(frag.x) && frag.x.length === 3) {
    state.expansion = { anchor: frag.x[0], kind: frag.x[1], mode: frag.x[2] };
  }
  if (frag.c) state.selectedCase = String(frag.c);
  if (typeof frag.K === 'number') state.topK = frag.K;
  return state;
}

/** Mirror the store into location.hash and restore on back/forward. */
export function bindToLocation(store: Store, win: Window): () => void {
  let applying = false;
  const unsubscribe = store.subscribe((state) => {
    if (applying) return;
    const frag = serializeState(state);
    const next = frag ? `#s=${frag}` : '';
    if (win.location.hash !== next) {
      // replaceState would lose back/forward; assignment records history
      win.location.hash = next;
    }
  });
  const onHashChange = () => {
    applying = true;
    try {
      store.update(deserializeState(win.location.hash));
    } finally {
      applying = false;
    }
  };
  win.addEventListener('hashchange', onHashChange);
  return () => {
    unsubscribe();
    win.removeEventListener('hashchange', onHashChange);
  };
}
