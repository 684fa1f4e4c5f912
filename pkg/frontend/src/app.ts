import type {
  CaseSort,
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
import { ApiClient, ApiError, RequestGate } from './client';
import type { SessionState } from './state';
import { Store } from './state';
import { clear, el, toast } from './views/dom';
import { renderCases } from './views/cases';
import { renderInstance } from './views/instance';
import { renderError, renderOverview, type RegionStats } from './views/overview';
import { renderPathView } from './views/pathview';
import { entitiesInRect, renderProjection } from './views/projection';
import { renderSankey } from './views/sankey';

const REGION_ENTITY_CAP = 20;

const PANELS = [
  ['overview', 'overview'],
  ['projection', 'projection'],
  ['paths', 'paths'],
  ['patterns', 'patterns'],
  ['cases', 'cases'],
  ['instance', 'instance'],
] as const;

/** Wires the six coordinated views to the store and the API. All rendering
 * is a pure function of SessionState plus the latest fetched payloads, so a
 * restored state replays into the same screen. */
export class App {
  private panels = new Map<string, HTMLElement>();
  private gate = new RequestGate();
  private pending = new Set<Promise<unknown>>();

  // latest payload per view
  private overviewData: OverviewResponse | null = null;
  private overviewSlice: OverviewResponse | null = null;
  private projectionData: ProjectionResponse | null = null;
  private pathData: PathViewResponse | null = null;
  private linksData: NodeLinksResponse | null = null;
  private expandData: ExpandResponse | null = null;
  private casesData: CasesResponse | null = null;
  private instanceData: InstanceResponse | null = null;
  private instanceStale = false;
  private region: RegionStats | null = null;

  // view-local request parameters (not part of the shareable session)
  private caseSort: CaseSort = 'TotalErrorsDesc';
  private caseSearch = '';
  private expandedCategories = new Set<string>();

  private names = new Map<string, string>();

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    readonly store: Store,
  ) {}

  async start(): Promise<void> {
    clear(this.root);
    for (const [id, title] of PANELS) {
      const panel = el('section', { class: 'panel', id: `panel-${id}` });
      panel.appendChild(el('h2', {}, title));
      panel.appendChild(el('div', { class: 'loading' }, 'loading'));
      this.root.appendChild(panel);
      this.panels.set(id, panel);
    }

    this.store.subscribe((state, prev) => this.onStateChange(state, prev));

    // projection first: it carries the entity universe and the name table
    await this.refreshProjection();
    const state = this.store.get();
    const boot: Promise<unknown>[] = [
      this.refreshOverview(),
      this.refreshPathView(),
      this.refreshCases(),
    ];
    if (state.brushedEntityIds) boot.push(this.refreshRegion());
    if (state.selectedNode) boot.push(this.refreshLinks());
    if (state.expansion) boot.push(this.refreshExpansion());
    if (state.selectedCase) boot.push(this.refreshInstance());
    this.renderPatterns();
    this.renderInstancePanel();
    await Promise.allSettled(boot);
    await this.whenIdle();
  }

  /** Resolves once every in-flight refresh (including ones started by
   * responses that arrived meanwhile) has settled. */
  async whenIdle(): Promise<void> {
    while (this.pending.size > 0) {
      await Promise.allSettled([...this.pending]);
    }
  }

  private track<T>(p: Promise<T>): Promise<T> {
    this.pending.add(p);
    void p.finally(() => this.pending.delete(p));
    return p;
  }

  private onStateChange(state: SessionState, prev: SessionState): void {
    const jobs: Promise<unknown>[] = [];
    let retarget: SessionState['expansion'] = null;
    if (state.selectedErrorKind !== prev.selectedErrorKind) {
      jobs.push(this.refreshOverview(), this.refreshProjection(), this.refreshPathView(),
        this.refreshCases());
      if (state.brushedEntityIds) jobs.push(this.refreshRegion());
      if (state.expansion) {
        const kind = state.selectedErrorKind ?? state.expansion.kind;
        // an active expansion follows the kind filter; the nested update
        // below re-enters this handler and refreshes the patterns view
        if (kind !== state.expansion.kind) retarget = { ...state.expansion, kind };
        else jobs.push(this.refreshExpansion());
      }
    }
    if (state.topK !== prev.topK) jobs.push(this.refreshProjection());
    if (state.brushedEntityIds !== prev.brushedEntityIds) {
      jobs.push(this.refreshPathView(), this.refreshRegion());
    }
    if (state.minErrorIntensity !== prev.minErrorIntensity) jobs.push(this.refreshPathView());
    if (state.selectedNode !== prev.selectedNode) {
      jobs.push(this.refreshLinks(), this.refreshCases());
      this.renderPatterns(); // expand buttons appear once an anchor exists
    }
    if (
      state.expansion !== prev.expansion &&
      serializeExpansion(state.expansion) !== serializeExpansion(prev.expansion)
    ) {
      jobs.push(this.refreshExpansion());
    }
    if (state.selectedCase !== prev.selectedCase) jobs.push(this.refreshInstance());
    for (const j of jobs) this.track(j);
    if (retarget) this.store.update({ expansion: retarget });
  }

  // -- actions ---------------------------------------------------------------

  toggleKind(kind: ErrorKind): void {
    const current = this.store.get().selectedErrorKind;
    this.store.update({ selectedErrorKind: current === kind ? null : kind });
  }

  applyBrush(x0: number, y0: number, x1: number, y1: number): void {
    if (!this.projectionData) return;
    this.store.update({ brushedEntityIds: entitiesInRect(this.projectionData, x0, y0, x1, y1) });
  }

  selectNode(entityId: string): void {
    this.store.update({ selectedNode: entityId });
  }

  expand(mode: ExpandMode): void {
    const state = this.store.get();
    const anchor = state.selectedNode ?? state.expansion?.anchor;
    if (!anchor) return;
    const kind = state.selectedErrorKind ?? state.expansion?.kind ?? 'Relation';
    this.store.update({ expansion: { anchor, kind, mode } });
  }

  openCase(caseId: string): void {
    this.store.update({ selectedCase: caseId });
  }

  entityName = (id: string): string => this.names.get(id) ?? id;

  // -- per-view refreshes ----------------------------------------------------

  private panel(id: string): HTMLElement {
    return this.panels.get(id)!;
  }

  refreshOverview(): Promise<void> {
    const kind = this.store.get().selectedErrorKind;
    this.gate.invalidate('overview');
    return this.track(
      this.gate.run(
        'overview',
        async () => {
          const full = await this.api.overview(null);
          const slice = kind ? await this.api.overview(kind) : null;
          return { full, slice };
        },
        ({ full, slice }) => {
          this.overviewData = full;
          this.overviewSlice = slice;
          this.renderOverviewPanel();
        },
      ).catch((err) => this.showError('overview', err, () => this.refreshOverview())),
    );
  }

  refreshProjection(): Promise<void> {
    const state = this.store.get();
    this.gate.invalidate('projection');
    return this.track(
      this.gate.run(
        'projection',
        () => this.api.projection(state.topK, state.selectedErrorKind),
        (data) => {
          this.projectionData = data;
          data.entities.forEach((eid, i) => this.names.set(eid, data.names[i]));
          this.renderProjectionPanel();
        },
      ).catch((err) => this.showError('projection', err, () => this.refreshProjection())),
    );
  }

  refreshPathView(): Promise<void> {
    const state = this.store.get();
    const ids = state.brushedEntityIds ?? this.projectionData?.entities ?? [];
    if (ids.length === 0 && !this.projectionData) return Promise.resolve();
    this.gate.invalidate('paths');
    return this.track(
      this.gate.run(
        'paths',
        () => this.api.pathView(ids, state.minErrorIntensity),
        (data) => {
          this.pathData = data;
          this.renderPathPanel();
        },
      ).catch((err) => this.showError('paths', err, () => this.refreshPathView())),
    );
  }

  refreshLinks(): Promise<void> {
    const node = this.store.get().selectedNode;
    if (!node) {
      this.linksData = null;
      this.renderPathPanel();
      return Promise.resolve();
    }
    this.gate.invalidate('links');
    return this.track(
      this.gate.run(
        'links',
        () => this.api.nodeLinks(node),
        (data) => {
          this.linksData = data;
          this.renderPathPanel();
          if (data.outgoing.length === 0 && data.incoming.length === 0) {
            toast(this.panel('paths'), `${this.entityName(node)} has no recorded steps`);
          }
        },
      ).catch((err) => this.showError('paths', err, () => this.refreshLinks())),
    );
  }

  refreshExpansion(): Promise<void> {
    const ref = this.store.get().expansion;
    if (!ref) {
      this.expandData = null;
      this.renderPatterns();
      return Promise.resolve();
    }
    this.gate.invalidate('patterns');
    return this.track(
      this.gate.run(
        'patterns',
        () => this.api.expand(ref.anchor, ref.kind, ref.mode),
        (data) => {
          this.expandData = data;
          this.expandedCategories.clear();
          this.renderPatterns();
        },
      ).catch((err) => this.showError('patterns', err, () => this.refreshExpansion())),
    );
  }

  refreshCases(): Promise<void> {
    const state = this.store.get();
    this.gate.invalidate('cases');
    return this.track(
      this.gate.run(
        'cases',
        () =>
          this.api.cases({
            kind: state.selectedErrorKind ?? undefined,
            entity: state.selectedNode ?? undefined,
            text: this.caseSearch || undefined,
            sort: this.caseSort,
          }),
        (data) => {
          this.casesData = data;
          this.renderCasesPanel();
        },
      ).catch((err) => this.showError('cases', err, () => this.refreshCases())),
    );
  }

  refreshRegion(): Promise<void> {
    const state = this.store.get();
    const brushed = state.brushedEntityIds;
    if (!brushed || brushed.length === 0 || brushed.length > REGION_ENTITY_CAP) {
      this.region = null;
      this.renderOverviewPanel();
      return Promise.resolve();
    }
    this.gate.invalidate('region');
    return this.track(
      this.gate.run(
        'region',
        async () => {
          const seen = new Map<string, boolean>();
          for (const eid of brushed) {
            const page = await this.api.cases({
              entity: eid,
              kind: state.selectedErrorKind ?? undefined,
              limit: 200,
            });
            for (const c of page.cases) seen.set(c.case_id, c.correct);
          }
          return seen;
        },
        (seen) => {
          this.region = {
            caseCount: seen.size,
            correctCount: [...seen.values()].filter(Boolean).length,
          };
          this.renderOverviewPanel();
        },
      ).catch((err) => this.showError('overview', err, () => this.refreshRegion())),
    );
  }

  refreshInstance(): Promise<void> {
    const caseId = this.store.get().selectedCase;
    if (!caseId) {
      this.instanceData = null;
      this.instanceStale = false;
      this.renderInstancePanel();
      return Promise.resolve();
    }
    this.gate.invalidate('instance');
    return this.track(
      this.gate.run(
        'instance',
        () => this.api.instance(caseId),
        (data) => {
          this.instanceData = data;
          this.instanceStale = false;
          this.renderInstancePanel();
        },
      ).catch((err) => {
        if (err instanceof ApiError && err.status === 404) {
          this.instanceStale = true;
          this.renderInstancePanel();
          return;
        }
        this.showError('instance', err, () => this.refreshInstance());
      }),
    );
  }

  // -- render delegates --------------------------------------------------------

  private renderOverviewPanel(): void {
    if (!this.overviewData) return;
    renderOverview(
      this.panel('overview'),
      this.overviewData,
      this.overviewSlice,
      this.store.get().selectedErrorKind,
      this.region,
      { onKindToggle: (kind) => this.toggleKind(kind) },
    );
  }

  private renderProjectionPanel(): void {
    if (!this.projectionData) return;
    renderProjection(this.panel('projection'), this.projectionData, this.store.get().topK, {
      onTopK: (k) => this.store.update({ topK: k }),
      onBrush: (ids) => this.store.update({ brushedEntityIds: ids }),
    });
  }

  private renderPathPanel(): void {
    if (!this.pathData) return;
    const state = this.store.get();
    renderPathView(
      this.panel('paths'),
      this.pathData,
      state.selectedErrorKind,
      state.minErrorIntensity,
      state.selectedNode,
      this.linksData && this.linksData.entity_id === state.selectedNode ? this.linksData : null,
      {
        onMinIntensity: (v) => this.store.update({ minErrorIntensity: v }),
        onSelectNode: (id) => this.selectNode(id),
      },
    );
  }

  private renderPatterns(): void {
    renderSankey(
      this.panel('patterns'),
      this.expandData,
      this.expandedCategories,
      this.entityName,
      {
        onExpand: (mode) => this.expand(mode),
        onToggleCategory: (side, category) => {
          const key = `${side}:${category}`;
          if (this.expandedCategories.has(key)) this.expandedCategories.delete(key);
          else this.expandedCategories.add(key);
          this.renderPatterns();
        },
      },
      this.store.get().selectedNode,
    );
  }

  private renderCasesPanel(): void {
    if (!this.casesData) return;
    renderCases(this.panel('cases'), this.casesData, this.caseSort, this.caseSearch, {
      onSort: (sort) => {
        this.caseSort = sort;
        this.track(this.refreshCases());
      },
      onSearch: (text) => {
        this.caseSearch = text;
        this.track(this.refreshCases());
      },
      onOpenCase: (id) => this.openCase(id),
    });
  }

  private renderInstancePanel(): void {
    renderInstance(
      this.panel('instance'),
      this.instanceData,
      this.entityName,
      this.instanceStale,
      () => this.track(this.refreshInstance()),
    );
  }

  private showError(panelId: string, err: unknown, retry: () => void): void {
    const message = err instanceof Error ? err.message : String(err);
    renderError(this.panel(panelId), message, retry);
  }
}

function serializeExpansion(
  e: { anchor: string; kind: string; mode: string } | null,
): string {
  return e ? `${e.anchor}|${e.kind}|${e.mode}` : '';
}
